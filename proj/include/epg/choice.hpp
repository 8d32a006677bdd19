#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "epg/errors.hpp"
#include "epg/linalg.hpp"
#include "epg/perturbation.hpp"
#include "epg/rng.hpp"

namespace epg {

inline void check_payoff(const Vec& p, std::size_t n) {
  if (p.size() != n) throw parameter_error("payoff has wrong dimension");
  if (!all_finite(p)) throw parameter_error("payoff has non-finite entries");
}

// Softmax with max subtraction: exact best response to entropy perturbation.
inline Vec logit_choice(const Vec& p, double mu) {
  if (p.size() < 2) throw parameter_error("need at least two strategies");
  check_payoff(p, p.size());
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw parameter_error("logit scale must be positive and finite");
  double m = p[0];
  for (double v : p) m = std::max(m, v);
  Vec out(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = std::exp((p[i] - m) / mu);
    s += out[i];
  }
  for (double& v : out) v /= s;
  return out;
}

// mu * log sum exp(p/mu), the value of the perturbed maximization for the
// entropy perturbation
inline double logit_max(const Vec& p, double mu) {
  double m = p[0];
  for (double v : p) m = std::max(m, v);
  double s = 0.0;
  for (double v : p) s += std::exp((v - m) / mu);
  return m + mu * std::log(s);
}

struct SolveOptions {
  double tol = 1e-10;   // on the tangent-projected first-order residual
  int max_iter = 200;
  const Vec* warm_start = nullptr;
};

namespace detail {

inline Vec interior_start(const Vec* warm, std::size_t n) {
  Vec x(n, 1.0 / static_cast<double>(n));
  if (warm && warm->size() == n && all_finite(*warm)) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::max((*warm)[i], 1e-12);
      s += x[i];
    }
    for (double& v : x) v /= s;
  }
  return x;
}

// one entropic mirror-descent step with backtracking; fallback when the
// Newton direction is unusable
inline bool mirror_step(const PerturbationModel& m, const Vec& p, Vec& x,
                        double& fx) {
  Vec g = m.gradient(x);
  for (std::size_t i = 0; i < x.size(); ++i) g[i] -= p[i];
  double s = 1.0;
  for (int k = 0; k < 80; ++k) {
    Vec w(x.size());
    double wmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
      w[i] = std::log(x[i]) - s * g[i];
      wmax = std::max(wmax, w[i]);
    }
    Vec y(x.size());
    double tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      y[i] = std::exp(w[i] - wmax);
      tot += y[i];
    }
    if (tot > 0.0 && std::isfinite(tot)) {
      for (double& v : y) v /= tot;
      bool interior = true;
      for (double v : y)
        if (!(v > 0.0)) interior = false;
      if (interior) {
        double fy = m.value(y) - dot(y, p);
        if (fy < fx) {
          x = std::move(y);
          fx = fy;
          return true;
        }
      }
    }
    s *= 0.5;
  }
  return false;
}

}  // namespace detail

// Maximizes z'p - Q(z) over the interior of the simplex: damped Newton in
// reduced coordinates with backtracking, falling back to mirror descent
// when the Newton system is not positive definite or the step stalls.
inline Vec solve_choice(const PerturbationModel& m, const Vec& p,
                        const SolveOptions& opt = {}) {
  const std::size_t n = m.size();
  check_payoff(p, n);
  if (!(opt.tol >= 0.0)) throw parameter_error("tolerance must be nonnegative");

  Vec x = detail::interior_start(opt.warm_start, n);
  double fx = m.value(x) - dot(x, p);
  double res = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    Vec g = m.gradient(x);
    for (std::size_t i = 0; i < n; ++i) g[i] -= p[i];
    res = inf_norm(tangent_part(g));
    if (res <= opt.tol) return x;

    Mat h = m.hessian(x);
    const std::size_t r = n - 1;
    Mat hr(r, r);
    Vec gr(r);
    for (std::size_t i = 0; i < r; ++i) {
      gr[i] = g[i] - g[r];
      for (std::size_t j = 0; j < r; ++j)
        hr(i, j) = h(i, j) - h(i, r) - h(r, j) + h(r, r);
    }
    Vec rhs(r);
    for (std::size_t i = 0; i < r; ++i) rhs[i] = -gr[i];
    Vec dr;
    bool ok = solve_spd(hr, rhs, dr);
    if (ok) {
      Vec d(n, 0.0);
      double dn = 0.0;
      for (std::size_t i = 0; i < r; ++i) {
        d[i] = dr[i];
        dn -= dr[i];
      }
      d[r] = dn;
      double slope = dot(gr, dr);
      double t = 1.0;
      bool accepted = false;
      // near the optimum the objective decrement drops below rounding
      // noise while the gradient still has headroom, so the full Newton
      // step is accepted on residual contraction alone
      {
        Vec y(n);
        bool interior = true;
        for (std::size_t i = 0; i < n; ++i) {
          y[i] = x[i] + d[i];
          if (!(y[i] > 0.0)) interior = false;
        }
        if (interior) {
          Vec gy = m.gradient(y);
          for (std::size_t i = 0; i < n; ++i) gy[i] -= p[i];
          if (inf_norm(tangent_part(gy)) < 0.5 * res) {
            fx = m.value(y) - dot(y, p);
            x = std::move(y);
            continue;
          }
        }
      }
      for (int k = 0; k < 80; ++k) {
        Vec y(n);
        bool interior = true;
        for (std::size_t i = 0; i < n; ++i) {
          y[i] = x[i] + t * d[i];
          if (!(y[i] > 0.0)) interior = false;
        }
        if (interior) {
          double fy = m.value(y) - dot(y, p);
          if (fy <= fx + 1e-4 * t * slope) {
            x = std::move(y);
            fx = fy;
            accepted = true;
            break;
          }
        }
        t *= 0.5;
      }
      if (accepted) continue;
    }
    if (!detail::mirror_step(m, p, x, fx))
      throw solver_error("choice solver stalled", x, res);
  }
  throw solver_error("choice solver exceeded the iteration cap", x, res);
}

// max_z z'p - Q(z)
inline double perturbed_max(const PerturbationModel& m, const Vec& p,
                            const SolveOptions& opt = {}) {
  if (m.is_logit()) {
    check_payoff(p, m.size());
    return logit_max(p, m.logit_mu());
  }
  Vec y = solve_choice(m, p, opt);
  return dot(y, p) - m.value(y);
}

inline Vec choice(const PerturbationModel& m, const Vec& p,
                  const SolveOptions& opt = {}) {
  if (m.is_logit()) {
    check_payoff(p, m.size());
    return logit_choice(p, m.logit_mu());
  }
  return solve_choice(m, p, opt);
}

// S(x, p) = max_z(z'p - Q(z)) - (x'p - Q(x)); nonnegative, zero exactly at
// the perturbed best response.  Boundary x is admitted only for models
// whose Q extends continuously (entropy: 0 ln 0 = 0).
inline double delta_storage(const PerturbationModel& m, const Vec& x,
                            const Vec& p, const SolveOptions& opt = {}) {
  check_simplex(x, m.size());
  check_payoff(p, m.size());
  if (!m.boundary_ok()) {
    for (double v : x)
      if (!(v > 0.0))
        throw domain_error("boundary state under a perturbation with no boundary limit");
  }
  return perturbed_max(m, p, opt) - (dot(x, p) - m.value(x));
}

// d' dC(p) d by central finite differences along the tangent component of
// d.  The choice function is shift invariant, so the 1-direction carries
// exactly zero sensitivity and is removed before differencing.
inline double choice_sensitivity(const PerturbationModel& m, const Vec& p,
                                 const Vec& d, const SolveOptions& opt = {}) {
  const std::size_t n = m.size();
  check_payoff(p, n);
  if (d.size() != n) throw parameter_error("direction has wrong dimension");
  if (!all_finite(d)) throw parameter_error("direction has non-finite entries");
  Vec dt = tangent_part(d);
  if (inf_norm(dt) == 0.0) return 0.0;
  double h = 1e-5 * (1.0 + inf_norm(p));
  if (!(h * inf_norm(dt) > 0.0))
    throw parameter_error("finite-difference step underflow");
  Vec pp(n), pm(n);
  for (std::size_t i = 0; i < n; ++i) {
    pp[i] = p[i] + h * dt[i];
    pm[i] = p[i] - h * dt[i];
  }
  SolveOptions o = opt;
  Vec center;
  if (!m.is_logit()) {
    center = solve_choice(m, p, opt);
    o.warm_start = &center;
  }
  Vec yp = choice(m, pp, o);
  Vec ym = choice(m, pm, o);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += d[i] * (yp[i] - ym[i]);
  return s / (2.0 * h);
}

// ---------------------------------------------------------------------------
// additive-noise representation: strategies receive i.i.d. payoff noise and
// the choice function is the probability of each strategy being maximal

enum class NoiseKind { gumbel, normal, laplace, logistic, cauchy, gev };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::gumbel: return "gumbel";
    case NoiseKind::normal: return "normal";
    case NoiseKind::laplace: return "laplace";
    case NoiseKind::logistic: return "logistic";
    case NoiseKind::cauchy: return "cauchy";
    case NoiseKind::gev: return "gev";
  }
  return "?";
}

namespace detail {

constexpr double euler_gamma = 0.5772156649015329;

// Acklam's rational approximation with one Halley refinement against erfc;
// accurate to machine precision over (0, 1)
inline double normal_quantile(double u) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (u < plow) {
    double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    double q = u - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - u;
  double f = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - f / (1.0 + x * f / 2.0);
}

}  // namespace detail

struct NoiseModel {
  NoiseKind kind = NoiseKind::gumbel;
  double scale = 1.0;
  double shape = 0.0;  // gev only

  void validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw parameter_error("noise scale must be positive and finite");
    if (!std::isfinite(shape)) throw parameter_error("noise shape must be finite");
    if (kind != NoiseKind::gev && shape != 0.0)
      throw parameter_error("shape only applies to the gev noise kind");
  }

  // The gumbel kind is centered so the noise has zero mean; centering is a
  // common shift across strategies and leaves choice probabilities alone.
  double quantile(double u) const {
    switch (kind) {
      case NoiseKind::gumbel:
        return -scale * (detail::euler_gamma + std::log(-std::log(u)));
      case NoiseKind::normal:
        return scale * detail::normal_quantile(u);
      case NoiseKind::laplace:
        return u < 0.5 ? scale * std::log(2.0 * u)
                       : -scale * std::log(2.0 * (1.0 - u));
      case NoiseKind::logistic:
        return scale * std::log(u / (1.0 - u));
      case NoiseKind::cauchy:
        return scale * std::tan(M_PI * (u - 0.5));
      case NoiseKind::gev:
        if (shape == 0.0) return -scale * std::log(-std::log(u));
        return scale * (std::pow(-std::log(u), -shape) - 1.0) / shape;
    }
    throw contract_error("unreachable");
  }

  double cdf(double v) const {
    switch (kind) {
      case NoiseKind::gumbel:
        return std::exp(-std::exp(-v / scale - detail::euler_gamma));
      case NoiseKind::normal:
        return 0.5 * std::erfc(-v / (scale * std::sqrt(2.0)));
      case NoiseKind::laplace:
        return v < 0.0 ? 0.5 * std::exp(v / scale)
                       : 1.0 - 0.5 * std::exp(-v / scale);
      case NoiseKind::logistic:
        return 1.0 / (1.0 + std::exp(-v / scale));
      case NoiseKind::cauchy:
        return 0.5 + std::atan(v / scale) / M_PI;
      case NoiseKind::gev: {
        if (shape == 0.0) return std::exp(-std::exp(-v / scale));
        double z = 1.0 + shape * v / scale;
        if (z <= 0.0) return shape > 0.0 ? 0.0 : 1.0;
        return std::exp(-std::pow(z, -1.0 / shape));
      }
    }
    throw contract_error("unreachable");
  }
};

namespace detail {

// quadrature panels on the uniform scale, clustered toward the endpoints
// where the quantile transform steepens
inline const Vec& noise_panels() {
  static const Vec panels = {0.0,    1e-8,  1e-5, 1e-3, 1e-2, 0.1,  0.3, 0.5,
                             0.7,    0.9,   0.99, 0.999, 1.0 - 1e-5,
                             1.0 - 1e-8, 1.0};
  return panels;
}

}  // namespace detail

// Exact choice probabilities for i.i.d. additive noise:
//   C_i(p) = integral over u in (0,1) of prod_{j != i} F(p_i - p_j + F^-1(u)).
// Computed with composite Gauss-Legendre; the gumbel kind reduces to the
// closed softmax form.
inline Vec noise_choice(const NoiseModel& nm, const Vec& p) {
  nm.validate();
  if (p.size() < 2) throw parameter_error("need at least two strategies");
  check_payoff(p, p.size());
  const std::size_t n = p.size();
  const auto& gl = GaussLegendre::get24();
  const Vec& panels = detail::noise_panels();
  Vec out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double tot = 0.0;
    for (std::size_t pa = 0; pa + 1 < panels.size(); ++pa) {
      double a = panels[pa], b = panels[pa + 1];
      double half = (b - a) / 2.0, mid = (a + b) / 2.0;
      for (std::size_t k = 0; k < gl.node.size(); ++k) {
        double u = mid + half * gl.node[k];
        double v = nm.quantile(u);
        double g = 1.0;
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) g *= nm.cdf(p[i] - p[j] + v);
        tot += half * gl.weight[k] * g;
      }
    }
    out[i] = tot;
  }
  double s = sum(out);
  for (double& v : out) v /= s;
  return out;
}

// Monte-Carlo estimate of the same probabilities; deterministic given the
// seed, used to validate the quadrature and the closed forms
inline Vec mc_choice(const NoiseModel& nm, const Vec& p, std::size_t samples,
                     std::uint64_t seed) {
  nm.validate();
  if (p.size() < 2) throw parameter_error("need at least two strategies");
  check_payoff(p, p.size());
  if (samples == 0) throw parameter_error("need at least one sample");
  const std::size_t n = p.size();
  Rng rng(seed);
  std::vector<std::size_t> count(n, 0);
  for (std::size_t s = 0; s < samples; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = p[i] + nm.quantile(rng.uniform());
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    ++count[arg];
  }
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = static_cast<double>(count[i]) / static_cast<double>(samples);
  return out;
}

// Inverts the noise choice function: payoff p with C(p) = x and p_n = 0.
inline Vec noise_inverse_choice(const NoiseModel& nm, const Vec& x,
                                const Vec* warm = nullptr) {
  nm.validate();
  const std::size_t n = x.size();
  check_simplex(x, n);
  for (double v : x)
    if (!(v > 0.0)) throw domain_error("inverse choice needs an interior state");

  Vec p(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i)
    p[i] = nm.scale * (std::log(x[i]) - std::log(x[n - 1]));
  if (warm && warm->size() == n && all_finite(*warm)) p = *warm;
  p[n - 1] = 0.0;

  auto residual = [&](const Vec& pay, Vec& r) {
    Vec cc = noise_choice(nm, pay);
    r.resize(n - 1);
    double nrm = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      r[i] = cc[i] - x[i];
      nrm = std::max(nrm, std::abs(r[i]));
    }
    return nrm;
  };

  Vec r;
  double nrm = residual(p, r);
  for (int iter = 0; iter < 80 && nrm > 1e-12; ++iter) {
    // finite-difference Jacobian; symmetric because dC is
    const std::size_t d = n - 1;
    double h = 1e-6 * (1.0 + inf_norm(p));
    Mat jac(d, d);
    for (std::size_t j = 0; j < d; ++j) {
      Vec pp = p, pm = p;
      pp[j] += h;
      pm[j] -= h;
      Vec cp = noise_choice(nm, pp), cm = noise_choice(nm, pm);
      for (std::size_t i = 0; i < d; ++i) jac(i, j) = (cp[i] - cm[i]) / (2.0 * h);
    }
    for (std::size_t i = 0; i < d; ++i) jac(i, i) += 1e-14;
    Vec rhs(d), step;
    for (std::size_t i = 0; i < d; ++i) rhs[i] = -r[i];
    if (!solve_spd(jac, rhs, step))
      throw solver_error("inverse choice jacobian not positive definite", p, nrm);
    double t = 1.0;
    bool ok = false;
    for (int k = 0; k < 60; ++k) {
      Vec py = p;
      for (std::size_t i = 0; i < d; ++i) py[i] += t * step[i];
      Vec ry;
      double ny = residual(py, ry);
      if (ny < nrm) {
        p = std::move(py);
        r = std::move(ry);
        nrm = ny;
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) throw solver_error("inverse choice stalled", p, nrm);
  }
  if (nrm > 1e-10) throw solver_error("inverse choice did not converge", p, nrm);
  return p;
}

// Storage for a noise model, via convex duality: with W(p) the expected
// perturbed maximum (so dW = C) and p_x the payoff with C(p_x) = x,
//   S(x, p) = [W(p) - W(p_x)] - x'(p - p_x),
// and the W difference is a path integral of C along the segment.
inline double noise_delta_storage(const NoiseModel& nm, const Vec& x,
                                  const Vec& p, Vec* warm_px = nullptr) {
  check_payoff(p, x.size());
  Vec px = noise_inverse_choice(nm, x, warm_px);
  if (warm_px) *warm_px = px;
  const std::size_t n = x.size();
  Vec dp(n);
  for (std::size_t i = 0; i < n; ++i) dp[i] = p[i] - px[i];
  if (inf_norm(dp) == 0.0) return 0.0;
  const auto& gl = GaussLegendre::get16();
  double w = 0.0;
  const int panels = 4;
  for (int pa = 0; pa < panels; ++pa) {
    double a = static_cast<double>(pa) / panels;
    double b = static_cast<double>(pa + 1) / panels;
    double half = (b - a) / 2.0, mid = (a + b) / 2.0;
    for (std::size_t k = 0; k < gl.node.size(); ++k) {
      double s = mid + half * gl.node[k];
      Vec pt(n);
      for (std::size_t i = 0; i < n; ++i) pt[i] = px[i] + s * dp[i];
      w += half * gl.weight[k] * dot(noise_choice(nm, pt), dp);
    }
  }
  return w - dot(x, dp);
}

}  // namespace epg
