#pragma once

// Index of refraction n(x), constant or affine, together with the derived
// coefficients that enter the A and B forms. Only fields with n >= 1 + delta
// on the whole domain are admissible.

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

#include "tev/geometry.hpp"

namespace tev {

class RefractionError : public std::runtime_error {
 public:
  explicit RefractionError(const std::string& what) : std::runtime_error(what) {}
};

struct RefractionField {
  // n(x) = a + b1*x1 + b2*x2 (constant when b1 = b2 = 0)
  double a = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;

  static RefractionField constant(double c) { return {c, 0.0, 0.0}; }
  static RefractionField affine(double a, double b1, double b2) { return {a, b1, b2}; }

  bool is_constant() const { return b1 == 0.0 && b2 == 0.0; }

  double n(double x, double y) const { return a + b1 * x + b2 * y; }
  double inv_nm1(double x, double y) const { return 1.0 / (n(x, y) - 1.0); }          // 1/(n-1)
  double n_over_nm1(double x, double y) const {                                       // n/(n-1)
    const double v = n(x, y);
    return v / (v - 1.0);
  }
  // grad(1/(n-1)) = grad(n/(n-1)) = -grad(n)/(n-1)^2
  std::array<double, 2> grad_coeff(double x, double y) const {
    const double s = n(x, y) - 1.0;
    const double f = -1.0 / (s * s);
    return {b1 * f, b2 * f};
  }

  // Minimum of the affine field over the domain's bounding box corners; an
  // affine function attains its extrema there.
  double min_on(Domain d) const {
    const double lo = (d == Domain::UnitSquare) ? 0.0 : -1.0;
    const double hi = 1.0;
    double m = n(lo, lo);
    m = std::min(m, n(hi, lo));
    m = std::min(m, n(lo, hi));
    m = std::min(m, n(hi, hi));
    return m;
  }

  /// Condition (C1): n bounded below by 1 + delta on the domain.
  void require_c1(Domain d) const {
    const double m = min_on(d);
    if (!(m > 1.0)) {
      throw RefractionError("refraction field violates (C1): min n = " + std::to_string(m) +
                            " but n must exceed 1 on the domain");
    }
  }
};

}  // namespace tev
