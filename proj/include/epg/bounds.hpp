#pragma once

#include <algorithm>

#include "epg/dynamics.hpp"
#include "epg/epidemic.hpp"
#include "epg/storage.hpp"

namespace epg {

// Anytime prevalence bound: with V(0) <= alpha the prevalence can never
// exceed Ibar * pi(alpha).
struct BoundCheck {
  double alpha = 0.0;
  double pi = 0.0;
  double i_bar = 0.0;
  double bound = 0.0;
  double max_I = 0.0;
  double margin = 0.0;
  bool holds = false;
};

inline BoundCheck anytime_bound_check(const Trajectory& tr, double alpha,
                                      const MechanismDesign& md,
                                      const EpidemicParams& ep) {
  if (tr.rows() == 0) throw contract_error("empty trajectory");
  BoundCheck out;
  out.alpha = alpha;
  out.pi = pi_upsilon(alpha, md.beta_bar, md.upsilon, ep);
  out.i_bar = ep.eta() * (1.0 - ep.sigma() / md.beta_bar);
  out.bound = out.i_bar * out.pi;
  out.max_I = *std::max_element(tr.I.begin(), tr.I.end());
  out.margin = out.bound - out.max_I;
  out.holds = out.max_I <= out.bound + 1e-9;
  return out;
}

}  // namespace epg
