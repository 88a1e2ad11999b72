#pragma once

// Tensor-product Gauss-Legendre quadrature on the reference cell [0,1]^2.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace tev {

struct QuadPoint {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
};

namespace detail {

// Nodes/weights of the n-point Gauss-Legendre rule on [-1,1], by Newton
// iteration on P_n starting from the Chebyshev estimates.
inline void gauss_legendre_11(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (t * p0 - p1) / (t * t - 1.0);
      const double dt = p0 / pp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [0,1]; weights sum to 1.
inline void gauss_rule_1d(int order, std::vector<double>& pts, std::vector<double>& wts) {
  if (order < 1 || order > 10) {
    throw std::invalid_argument("gauss_rule: order " + std::to_string(order) + " outside [1,10]");
  }
  detail::gauss_legendre_11(order, pts, wts);
  for (int i = 0; i < order; ++i) {
    pts[i] = 0.5 * (pts[i] + 1.0);
    wts[i] *= 0.5;
  }
}

/// Tensor-product rule on [0,1]^2, exact for polynomials of degree <= 2*order-1
/// per variable.
inline std::vector<QuadPoint> gauss_rule(int order) {
  std::vector<double> p, w;
  gauss_rule_1d(order, p, w);
  std::vector<QuadPoint> q;
  q.reserve(static_cast<std::size_t>(order) * order);
  for (int j = 0; j < order; ++j)
    for (int i = 0; i < order; ++i) q.push_back({p[i], p[j], w[i] * w[j]});
  return q;
}

}  // namespace tev
