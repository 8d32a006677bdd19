#pragma once

#include <cmath>

#include "epg/choice.hpp"
#include "epg/epidemic.hpp"
#include "epg/errors.hpp"
#include "epg/linalg.hpp"

namespace epg {

// Storage function of the epidemic block in the rescaled coordinates
// cal_I = B*I, cal_R = B*R:
//   S = (cal_I - Ih) + Ih ln(Ih / cal_I)
//     + (cal_R - Rh)^2 / (2 gamma) + ups^2 (B - beta_bar)^2 / 2
// with Ih = eta (B - sigma) and Rh = (1 - eta)(B - sigma).  Zero exactly at
// the endemic point with B = beta_bar.
inline double epg_storage(double cal_I, double cal_R, double B, double beta_bar,
                          double upsilon, const EpidemicParams& ep) {
  if (!(upsilon > 0.0)) throw parameter_error("upsilon must be positive");
  if (!std::isfinite(cal_I) || !std::isfinite(cal_R) || !std::isfinite(B))
    throw parameter_error("storage arguments must be finite");
  if (!(B > ep.sigma())) throw domain_error("storage needs B above sigma");
  if (!(cal_I > 0.0)) throw domain_error("storage needs positive infection mass");
  double ih = ep.eta() * (B - ep.sigma());
  double rh = (1.0 - ep.eta()) * (B - ep.sigma());
  return (cal_I - ih) + ih * std::log(ih / cal_I) +
         (cal_R - rh) * (cal_R - rh) / (2.0 * ep.gamma) +
         upsilon * upsilon * (B - beta_bar) * (B - beta_bar) / 2.0;
}

namespace detail {

// largest cal_I >= Ih with (cal_I - Ih) + Ih ln(Ih / cal_I) = rem
inline double storage_upper_infection(double ih, double rem) {
  if (rem <= 0.0) return ih;
  auto f = [&](double v) { return (v - ih) + ih * std::log(ih / v) - rem; };
  double hi = ih + rem + 2.0 * std::sqrt(2.0 * ih * rem) + 1e-12;
  while (f(hi) < 0.0) hi *= 2.0;
  double lo = ih;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Anytime amplification factor: the largest prevalence-to-target ratio on
// the storage sublevel set,
//   pi(alpha) = Ibar^-1 sup { cal_I / B : S(cal_I, cal_R, B) <= alpha }.
// cal_R is eliminated at its analytic optimum Rh; the inner problem is a
// monotone scalar solve and the outer maximization over B runs on a grid
// refined by golden-section.
inline double pi_upsilon(double alpha, double beta_bar, double upsilon,
                         const EpidemicParams& ep, double tol = 1e-10) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw parameter_error("alpha must be nonnegative");
  if (!(upsilon > 0.0)) throw parameter_error("upsilon must be positive");
  if (!(beta_bar > ep.sigma() && beta_bar <= ep.beta.back()))
    throw domain_error("beta_bar outside the admissible transmission range");
  double ibar = ep.eta() * (1.0 - ep.sigma() / beta_bar);
  if (alpha == 0.0) return 1.0;

  double blo = ep.sigma() + 1e-6;
  double bhi = ep.beta.back();
  double window = std::sqrt(2.0 * alpha) / upsilon;
  blo = std::max(blo, beta_bar - window);
  bhi = std::min(bhi, beta_bar + window);
  if (!(blo < bhi)) blo = std::max(ep.sigma() + 1e-6, beta_bar - window);

  auto obj = [&](double B) {
    double rem = alpha - upsilon * upsilon * (B - beta_bar) * (B - beta_bar) / 2.0;
    if (rem < 0.0) return 0.0;
    double ih = ep.eta() * (B - ep.sigma());
    if (!(ih > 0.0)) return 0.0;
    return detail::storage_upper_infection(ih, rem) / B;
  };

  const int grid = 512;
  double best = 0.0;
  int besti = 0;
  for (int i = 0; i <= grid; ++i) {
    double B = blo + (bhi - blo) * i / grid;
    double v = obj(B);
    if (v > best) {
      best = v;
      besti = i;
    }
  }
  double a = blo + (bhi - blo) * std::max(0, besti - 1) / grid;
  double b = blo + (bhi - blo) * std::min(grid, besti + 1) / grid;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = obj(x1), f2 = obj(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = obj(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = obj(x1);
    }
  }
  best = std::max(best, std::max(f1, f2));
  return best / ibar;
}

// Jump in the choice-block storage when the baseline reward is swapped from
// r_prior to r_new while the population sits at the prior equilibrium x0:
//   B_S = W(q0 b + r_new - ct) - W(q0 b + r_prior - ct) - x0'(r_new - r_prior)
// which equals the post-swap storage at x0.  The caller must really be at
// the prior equilibrium; that precondition is checked.
inline double b_storage(const Vec& r_prior, const Vec& r_new, const Vec& x0,
                        double q0, const PerturbationModel& m,
                        const EpidemicParams& ep, const SolveOptions& opt = {}) {
  const std::size_t n = ep.n();
  if (m.size() != n) throw parameter_error("perturbation has wrong dimension");
  if (r_prior.size() != n || r_new.size() != n)
    throw parameter_error("reward vectors have wrong dimension");
  if (!all_finite(r_prior) || !all_finite(r_new) || !std::isfinite(q0))
    throw parameter_error("rewards and q0 must be finite");
  check_simplex(x0, n);
  Vec ct = ep.c_tilde();
  Vec p_prior(n), p_new(n);
  for (std::size_t i = 0; i < n; ++i) {
    p_prior[i] = q0 * ep.beta[i] + r_prior[i] - ct[i];
    p_new[i] = q0 * ep.beta[i] + r_new[i] - ct[i];
  }
  Vec eq = choice(m, p_prior, opt);
  double dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) dev = std::max(dev, std::abs(eq[i] - x0[i]));
  if (dev > 1e-6)
    throw contract_error("x0 is not the prior-reward equilibrium (deviation " +
                         std::to_string(dev) + ")");
  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) w += x0[i] * (r_new[i] - r_prior[i]);
  return perturbed_max(m, p_new, opt) - perturbed_max(m, p_prior, opt) - w;
}

}  // namespace epg
