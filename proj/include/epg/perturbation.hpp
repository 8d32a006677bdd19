#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "epg/errors.hpp"
#include "epg/linalg.hpp"

namespace epg {

// Validates that x lies on the probability simplex within tolerance.
inline void check_simplex(const Vec& x, std::size_t n, double tol = 1e-9) {
  if (x.size() != n) throw parameter_error("state has wrong dimension");
  if (!all_finite(x)) throw parameter_error("state has non-finite entries");
  double s = 0.0;
  for (double v : x) {
    if (v < -tol) throw parameter_error("state has negative mass");
    s += v;
  }
  if (std::abs(s - 1.0) > tol) throw parameter_error("state mass is not 1");
}

// Deterministic perturbation Q of the payoff maximization.  Admissible Q
// are strictly convex along the simplex tangent space with a gradient that
// blows up toward the boundary, so the perturbed best response is unique
// and interior.  The entropy kind extends continuously to the boundary
// with the 0 ln 0 = 0 convention; the barrier and custom kinds do not.
class PerturbationModel {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;

  // mu * sum_i x_i ln x_i: the perturbation whose best response is the
  // logit choice with scale mu
  static PerturbationModel logit(std::size_t n, double mu) {
    require_size(n);
    require_scale(mu);
    PerturbationModel m;
    m.kind_ = Kind::logit;
    m.n_ = n;
    m.mu_ = mu;
    return m;
  }

  // -weight * sum_i ln x_i: a second admissible perturbation, used to
  // exercise the generic solver away from the entropy special case
  static PerturbationModel log_barrier(std::size_t n, double weight) {
    require_size(n);
    require_scale(weight);
    PerturbationModel m;
    m.kind_ = Kind::barrier;
    m.n_ = n;
    m.mu_ = weight;
    return m;
  }

  // mu * base(x); scaling preserves admissibility for mu > 0
  static PerturbationModel scaled(double mu, PerturbationModel base) {
    require_scale(mu);
    PerturbationModel m;
    m.kind_ = Kind::scaled;
    m.n_ = base.size();
    m.mu_ = mu;
    m.base_ = std::make_shared<PerturbationModel>(std::move(base));
    return m;
  }

  static PerturbationModel custom(std::size_t n, ValueFn value, GradFn grad,
                                  HessFn hess) {
    require_size(n);
    if (!value || !grad || !hess)
      throw parameter_error("custom perturbation needs value, gradient and hessian");
    PerturbationModel m;
    m.kind_ = Kind::custom;
    m.n_ = n;
    m.value_ = std::move(value);
    m.grad_ = std::move(grad);
    m.hess_ = std::move(hess);
    return m;
  }

  std::size_t size() const { return n_; }

  // true when the model is entropy up to scaling, so the choice function
  // has the closed softmax form
  bool is_logit() const {
    if (kind_ == Kind::logit) return true;
    return kind_ == Kind::scaled && base_->is_logit();
  }

  // effective softmax scale; only meaningful when is_logit()
  double logit_mu() const {
    if (kind_ == Kind::logit) return mu_;
    if (kind_ == Kind::scaled) return mu_ * base_->logit_mu();
    throw contract_error("logit_mu on a non-logit perturbation");
  }

  // whether value() extends continuously to the simplex boundary
  bool boundary_ok() const {
    if (kind_ == Kind::logit) return true;
    if (kind_ == Kind::scaled) return base_->boundary_ok();
    return false;
  }

  double value(const Vec& x) const {
    check_simplex(x, n_);
    switch (kind_) {
      case Kind::logit: {
        double s = 0.0;
        for (double v : x)
          if (v > 0.0) s += v * std::log(v);
        return mu_ * s;
      }
      case Kind::barrier: {
        require_interior(x);
        double s = 0.0;
        for (double v : x) s += std::log(v);
        return -mu_ * s;
      }
      case Kind::scaled:
        return mu_ * base_->value(x);
      case Kind::custom:
        require_interior(x);
        return value_(x);
    }
    throw contract_error("unreachable");
  }

  Vec gradient(const Vec& x) const {
    check_simplex(x, n_);
    require_interior(x);
    switch (kind_) {
      case Kind::logit: {
        Vec g(n_);
        for (std::size_t i = 0; i < n_; ++i) g[i] = mu_ * (std::log(x[i]) + 1.0);
        return g;
      }
      case Kind::barrier: {
        Vec g(n_);
        for (std::size_t i = 0; i < n_; ++i) g[i] = -mu_ / x[i];
        return g;
      }
      case Kind::scaled: {
        Vec g = base_->gradient(x);
        for (double& v : g) v *= mu_;
        return g;
      }
      case Kind::custom: {
        Vec g = grad_(x);
        if (g.size() != n_) throw contract_error("custom gradient has wrong dimension");
        return g;
      }
    }
    throw contract_error("unreachable");
  }

  Mat hessian(const Vec& x) const {
    check_simplex(x, n_);
    require_interior(x);
    switch (kind_) {
      case Kind::logit: {
        Mat h(n_, n_);
        for (std::size_t i = 0; i < n_; ++i) h(i, i) = mu_ / x[i];
        return h;
      }
      case Kind::barrier: {
        Mat h(n_, n_);
        for (std::size_t i = 0; i < n_; ++i) h(i, i) = mu_ / (x[i] * x[i]);
        return h;
      }
      case Kind::scaled: {
        Mat h = base_->hessian(x);
        for (double& v : h.a) v *= mu_;
        return h;
      }
      case Kind::custom: {
        Mat h = hess_(x);
        if (h.rows != n_ || h.cols != n_)
          throw contract_error("custom hessian has wrong dimension");
        return h;
      }
    }
    throw contract_error("unreachable");
  }

 private:
  enum class Kind { logit, barrier, scaled, custom };

  static void require_size(std::size_t n) {
    if (n < 2) throw parameter_error("need at least two strategies");
  }
  static void require_scale(double mu) {
    if (!(mu > 0.0) || !std::isfinite(mu))
      throw parameter_error("perturbation scale must be positive and finite");
  }
  static void require_interior(const Vec& x) {
    for (double v : x)
      if (!(v > 0.0)) throw domain_error("state on the simplex boundary");
  }

  Kind kind_ = Kind::logit;
  std::size_t n_ = 2;
  double mu_ = 1.0;
  std::shared_ptr<PerturbationModel> base_;
  ValueFn value_;
  GradFn grad_;
  HessFn hess_;
};

}  // namespace epg
