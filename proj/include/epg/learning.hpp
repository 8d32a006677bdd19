#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "epg/choice.hpp"
#include "epg/design.hpp"
#include "epg/epidemic.hpp"
#include "epg/errors.hpp"
#include "epg/linalg.hpp"
#include "epg/rng.hpp"

namespace epg {

struct Interval {
  double lo = 0.0, hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

// expected net reward reported in a survey offering the (already
// cost-adjusted) reward vector, when agents respond with scale mu
inline double expected_survey_reward(const PerturbationModel& base, double mu,
                                     const Vec& reward) {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw parameter_error("mu must be positive and finite");
  Vec cc = choice(PerturbationModel::scaled(mu, base), reward);
  return dot(reward, cc);
}

// one pooled survey: each participant reports the strategy it would adopt
// under the offered reward; the sample value is that strategy's net reward
inline std::vector<double> simulate_survey(const PerturbationModel& base,
                                           double mu_true, const Vec& reward,
                                           std::size_t participants,
                                           std::uint64_t seed) {
  if (participants == 0) throw parameter_error("survey needs participants");
  check_payoff(reward, base.size());
  Vec probs = choice(PerturbationModel::scaled(mu_true, base), reward);
  Vec cum(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cum[i] = acc;
  }
  cum.back() = 1.0;
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(participants);
  for (std::size_t k = 0; k < participants; ++k) {
    double u = rng.uniform();
    std::size_t idx = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
    out.push_back(reward[idx]);
  }
  return out;
}

// Distribution-free confidence interval for the mean: with sample values
// confined to a range of length 2 the variance is at most 1, and Chebyshev
// gives |mean - E| < eps with probability >= confidence for
// eps = 1 / sqrt(K (1 - confidence)).
inline Interval chebyshev_interval(const std::vector<double>& samples,
                                   double confidence) {
  if (samples.empty()) throw parameter_error("no samples");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw parameter_error("confidence must be in (0,1)");
  double mn = samples[0], mx = samples[0], s = 0.0;
  for (double v : samples) {
    if (!std::isfinite(v)) throw parameter_error("samples must be finite");
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    s += v;
  }
  if (mx - mn > 2.0 + 1e-12)
    throw contract_error("sample range exceeds 2; normalize the survey rewards");
  double mean = s / static_cast<double>(samples.size());
  double eps = 1.0 / std::sqrt(static_cast<double>(samples.size()) * (1.0 - confidence));
  return {mean - eps, mean + eps};
}

inline double chebyshev_epsilon(std::size_t k, double confidence) {
  if (k == 0) throw parameter_error("no samples");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw parameter_error("confidence must be in (0,1)");
  return 1.0 / std::sqrt(static_cast<double>(k) * (1.0 - confidence));
}

struct MuInterval {
  double lo = 0.0, hi = 0.0;
  bool clipped_lo = false, clipped_hi = false;
};

namespace detail {

// inverts the strictly decreasing map mu -> expected survey reward by
// bisection in log(mu); returns the range endpoint and sets clipped when
// the target is unattainable
inline double invert_er(double target, const Vec& reward,
                        const PerturbationModel& base, double mu_min,
                        double mu_max, bool& clipped) {
  clipped = false;
  double v_lo = expected_survey_reward(base, mu_min, reward);  // largest value
  double v_hi = expected_survey_reward(base, mu_max, reward);  // smallest value
  if (target >= v_lo) {
    clipped = true;
    return mu_min;
  }
  if (target <= v_hi) {
    clipped = true;
    return mu_max;
  }
  double a = std::log(mu_min), b = std::log(mu_max);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (a + b);
    double v = expected_survey_reward(base, std::exp(mid), reward);
    (v > target ? a : b) = mid;
    if (b - a < 1e-9) break;
  }
  return std::exp(0.5 * (a + b));
}

}  // namespace detail

// Maps an expected-reward interval to a noise-scale interval through the
// decreasing reward map; endpoints outside the achievable range are clipped
// to the search bounds and flagged.
inline MuInterval invert_mu(const Interval& er, const Vec& reward,
                            const PerturbationModel& base, double mu_min = 1e-3,
                            double mu_max = 1e3) {
  if (!(mu_min > 0.0 && mu_max > mu_min))
    throw parameter_error("bad mu search range");
  check_payoff(reward, base.size());
  if (!(er.lo <= er.hi)) throw parameter_error("empty reward interval");
  double v_min = expected_survey_reward(base, mu_max, reward);
  double v_max = expected_survey_reward(base, mu_min, reward);
  if (er.hi < v_min || er.lo > v_max)
    throw domain_error("reward interval lies outside the achievable range");
  MuInterval out;
  // larger reward means smaller mu: the upper reward endpoint gives mu_lo
  out.lo = detail::invert_er(er.hi, reward, base, mu_min, mu_max, out.clipped_lo);
  out.hi = detail::invert_er(er.lo, reward, base, mu_min, mu_max, out.clipped_hi);
  return out;
}

inline double invert_expected_reward(double target, const Vec& reward,
                                     const PerturbationModel& base,
                                     double mu_min = 1e-3, double mu_max = 1e3) {
  bool clipped = false;
  return detail::invert_er(target, reward, base, mu_min, mu_max, clipped);
}

// Worst-case stationary incentive cost of running the mechanism with target
// beta_bar and baseline reward equal to the strategy costs, published in
// the nonnegative form, when the true scale is at most mu_U:
//   cost <= mu_U lambda (beta_bar - beta_n) + c~' z(lambda)
// with lambda < 0 solving beta' z(lambda) = beta_bar for the unit-scale
// model z(l) = argmax z'(l beta) - Q(z).  Tight when the true scale is mu_U.
inline double cost_upper_bound(double beta_bar, double mu_U,
                               const PerturbationModel& base,
                               const EpidemicParams& ep, double tol = 1e-10) {
  if (!(mu_U > 0.0) || !std::isfinite(mu_U))
    throw parameter_error("mu_U must be positive and finite");
  Vec zero(ep.n(), 0.0);
  double cap = dot(ep.beta, choice(base, zero));
  if (!(beta_bar < cap))
    throw domain_error("target must lie below the zero-price stationary rate");
  Vec ct = ep.c_tilde();
  double lambda = solve_qbar(beta_bar, ct, base, ep, tol);
  Vec p(ep.n());
  for (std::size_t i = 0; i < ep.n(); ++i) p[i] = lambda * ep.beta[i];
  Vec z = choice(base, p);
  return mu_U * lambda * (beta_bar - ep.beta.back()) + dot(ct, z);
}

// smallest achievable target transmission rate whose worst-case stationary
// cost stays within the budget; the bound is decreasing in beta_bar so a
// bisection on the feasibility boundary suffices
inline double min_beta_bar(double mu_U, double c_star, const PerturbationModel& base,
                           const EpidemicParams& ep, double tol = 1e-10) {
  if (!(c_star > 0.0) || !std::isfinite(c_star))
    throw parameter_error("budget must be positive");
  Vec zero(ep.n(), 0.0);
  double cap = dot(ep.beta, choice(base, zero));
  double hi = cap - 1e-9 * (ep.beta.back() - ep.beta.front());
  if (!(cost_upper_bound(hi, mu_U, base, ep, tol) <= c_star))
    throw domain_error("budget cannot certify any target below the zero-price rate");
  double lo = ep.beta.front() + 1e-12 * (ep.beta.back() - ep.beta.front());
  double step = (hi - lo) / 16.0;
  double probe = hi - step;
  while (probe > lo && cost_upper_bound(probe, mu_U, base, ep, tol) <= c_star) {
    hi = probe;
    probe -= step;
  }
  lo = std::max(lo, probe);
  if (cost_upper_bound(lo, mu_U, base, ep, tol) <= c_star) return lo;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (cost_upper_bound(mid, mu_U, base, ep, tol) <= c_star)
      hi = mid;
    else
      lo = mid;
    if (hi - lo < tol) break;
  }
  return hi;
}

}  // namespace epg
