#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "epg/errors.hpp"

namespace epg {

using Vec = std::vector<double>;

// small dense row-major matrix, enough for the (n-1)-dimensional
// Newton systems that appear in the choice solver
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double inf_norm(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline double sum(const Vec& a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

inline bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

// v minus its mean: component in the tangent space of the simplex
inline Vec tangent_part(const Vec& v) {
  double m = sum(v) / static_cast<double>(v.size());
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - m;
  return out;
}

// Cholesky solve of a symmetric positive definite system; returns false
// if the factorization hits a non-positive pivot
inline bool solve_spd(Mat h, Vec g, Vec& out) {
  const std::size_t n = h.rows;
  for (std::size_t k = 0; k < n; ++k) {
    double d = h(k, k);
    for (std::size_t j = 0; j < k; ++j) d -= h(k, j) * h(k, j);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    h(k, k) = d;
    for (std::size_t i = k + 1; i < n; ++i) {
      double v = h(i, k);
      for (std::size_t j = 0; j < k; ++j) v -= h(i, j) * h(k, j);
      h(i, k) = v / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = g[i];
    for (std::size_t j = 0; j < i; ++j) v -= h(i, j) * g[j];
    g[i] = v / h(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double v = g[ii];
    for (std::size_t j = ii + 1; j < n; ++j) v -= h(j, ii) * g[j];
    g[ii] = v / h(ii, ii);
  }
  out = std::move(g);
  return true;
}

// nodes and weights of 16-point Gauss-Legendre on [-1, 1], used by the
// quadratures in the choice module; generated by Newton iteration on
// Legendre polynomials so no table needs to be maintained
struct GaussLegendre {
  Vec node, weight;

  explicit GaussLegendre(std::size_t n = 16) : node(n), weight(n) {
    for (std::size_t i = 0; i < n; ++i) {
      double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                          (static_cast<double>(n) + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
          double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      node[i] = x;
      weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  static const GaussLegendre& get16() {
    static const GaussLegendre g(16);
    return g;
  }
  static const GaussLegendre& get24() {
    static const GaussLegendre g(24);
    return g;
  }
};

}  // namespace epg
