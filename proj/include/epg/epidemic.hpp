#pragma once

#include <cmath>
#include <cstddef>

#include "epg/errors.hpp"
#include "epg/linalg.hpp"

namespace epg {

// SIRS parameters plus the per-strategy transmission and cost profiles.
// Strategies are ordered by increasing transmission rate and decreasing
// cost; recovered agents lose immunity at rate psi and theta is the
// common death/birth turnover.
struct EpidemicParams {
  double gamma = 0.0;  // recovery rate
  double psi = 0.0;    // immunity loss rate
  double theta = 0.0;  // birth/death rate
  Vec beta;            // transmission rate per strategy, increasing
  Vec cost;            // cost of adopting each strategy, decreasing

  EpidemicParams() = default;
  EpidemicParams(double gamma_, double psi_, double theta_, Vec beta_, Vec cost_)
      : gamma(gamma_), psi(psi_), theta(theta_),
        beta(std::move(beta_)), cost(std::move(cost_)) {
    validate();
  }

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw parameter_error("gamma must be positive");
    if (!(psi >= 0.0) || !std::isfinite(psi)) throw parameter_error("psi must be nonnegative");
    if (!(theta >= 0.0) || !std::isfinite(theta))
      throw parameter_error("theta must be nonnegative");
    if (!(psi + theta > 0.0)) throw parameter_error("psi + theta must be positive");
    if (beta.size() < 2) throw parameter_error("need at least two strategies");
    if (cost.size() != beta.size())
      throw parameter_error("beta and cost must have the same length");
    if (!all_finite(beta) || !all_finite(cost))
      throw parameter_error("beta and cost must be finite");
    for (std::size_t i = 0; i + 1 < beta.size(); ++i) {
      if (beta[i] > beta[i + 1]) throw parameter_error("beta must be nondecreasing");
      if (cost[i] < cost[i + 1]) throw parameter_error("cost must be nonincreasing");
    }
    if (!(beta.front() < beta.back()))
      throw parameter_error("transmission rates must not all coincide");
    if (!(beta.front() > sigma()))
      throw parameter_error("beta_1 must exceed sigma for an endemic regime");
    for (double b : beta)
      if (!(b > 0.0)) throw parameter_error("transmission rates must be positive");
    for (double cst : cost)
      if (!(cst >= 0.0)) throw parameter_error("costs must be nonnegative");
  }

  std::size_t n() const { return beta.size(); }
  double sigma() const { return gamma + theta; }
  double omega() const { return psi + theta; }
  double eta() const { return omega() / (omega() + gamma); }

  // costs relative to the cheapest strategy
  Vec c_tilde() const {
    Vec ct(cost);
    double last = cost.back();
    for (double& v : ct) v -= last;
    return ct;
  }
};

// endemic state of the SIRS dynamics at a fixed effective transmission rate
struct Endemic {
  double I = 0.0, R = 0.0, S = 0.0;
};

inline Endemic endemic_equilibrium(const EpidemicParams& ep, double B) {
  if (!(B > ep.sigma()))
    throw domain_error("no endemic equilibrium: transmission below sigma");
  double f = 1.0 - ep.sigma() / B;
  Endemic e;
  e.I = ep.eta() * f;
  e.R = (1.0 - ep.eta()) * f;
  e.S = 1.0 - e.I - e.R;
  return e;
}

enum class HVariant { plain, nonnegative };

// the dynamic payment mechanism: target transmission rate, baseline reward,
// weight on the transmission error, and learning-rate of the price state
struct MechanismDesign {
  double beta_bar = 0.0;
  Vec r_bar;
  double upsilon = 1.0;
  double kappa = 1.0;
  HVariant h_variant = HVariant::plain;

  void validate(const EpidemicParams& ep) const {
    if (r_bar.size() != ep.n()) throw parameter_error("r_bar has wrong dimension");
    if (!all_finite(r_bar)) throw parameter_error("r_bar must be finite");
    if (!(beta_bar > ep.beta.front() && beta_bar < ep.beta.back()))
      throw domain_error("beta_bar must lie strictly between the extreme rates");
    if (!(upsilon > 0.0) || !std::isfinite(upsilon))
      throw parameter_error("upsilon must be positive");
    if (!(kappa >= 0.0) || !std::isfinite(kappa))
      throw parameter_error("kappa must be nonnegative");
  }
};

// reward vector published at price state q; the nonnegative variant shifts
// uniformly so the cheapest entry is zero, which leaves the population
// state dynamics unchanged
inline Vec incentive(const MechanismDesign& md, const EpidemicParams& ep, double q) {
  Vec r(ep.n());
  for (std::size_t i = 0; i < ep.n(); ++i) r[i] = q * ep.beta[i] + md.r_bar[i];
  if (md.h_variant == HVariant::nonnegative) {
    double m = r[0];
    for (double v : r) m = std::min(m, v);
    for (double& v : r) v -= m;
  }
  return r;
}

}  // namespace epg
