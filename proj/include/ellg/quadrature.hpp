#pragma once

#include "ellg/common.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>

namespace ellg::quadrature {

struct Rule1D {
  std::vector<double> points;  // on [0, 1]
  std::vector<double> weights;
};

namespace detail {
// Legendre polynomial P_n(x) and its derivative.
inline std::pair<double, double> legendre(int n, double x) {
  double p0 = 1, p1 = x;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  if (n == 0) return {1.0, 0.0};
  return {p1, n * (x * p1 - p0) / (x * x - 1)};
}
}  // namespace detail

/// n-point Gauss-Legendre rule on [0, 1] (exact up to degree 2n-1).
inline Rule1D gauss_legendre(int n) {
  if (n < 1) throw InvalidInput("gauss_legendre: need at least one point");
  Rule1D r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = detail::legendre(n, x);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double dp = detail::legendre(n, x).second;
    r.points[n - 1 - i] = 0.5 * (x + 1);
    r.weights[n - 1 - i] = 1.0 / ((1 - x * x) * dp * dp);
  }
  return r;
}

/// Cached Gauss-Legendre rules; safe to call from worker threads.
inline const Rule1D& cached_gauss(int n) {
  static std::mutex m;
  static std::map<int, Rule1D> cache;
  std::lock_guard lock(m);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

/// Rule on the reference triangle {0 <= x2 <= x1 <= 1} (area 1/2), built by
/// collapsing the unit square: x1 = u, x2 = u v.
struct TriangleRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
};

inline TriangleRule collapsed_triangle(int n) {
  const auto& g = cached_gauss(n);
  TriangleRule r;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double u = g.points[i], v = g.points[j];
      r.points.push_back({u, u * v});
      r.weights.push_back(g.weights[i] * g.weights[j] * u);
    }
  return r;
}

/// Barycentric coordinates of reference point (x1, x2) with respect to the
/// parametrisation A + x1 (B - A) + x2 (C - B).
inline std::array<double, 3> reference_barycentric(double x1, double x2) {
  return {1.0 - x1, x1 - x2, x2};
}

}  // namespace ellg::quadrature
