// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_COEFFICIENT_HPP
#define MLSG_COEFFICIENT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "mlsg/common.hpp"
#include "mlsg/quadrature.hpp"

namespace mlsg {

using SpatialFunction = std::function<double(Vec2)>;

/// Affine-parametric diffusion coefficient a(x, y) = a_0(x) + sum y_m a_m(x).
class CoefficientField {
public:
  virtual ~CoefficientField() = default;

  virtual double evaluate(int m, Vec2 x) const = 0;

  /// Largest m with a_m not identically zero; -1 if unbounded.
  virtual int max_active_m() const = 0;

  virtual double a0_min() const = 0;
  virtual double a0_max() const = 0;

  /// Documented value or analytic bound for tau from the coefficient family.
  virtual double tau() const = 0;

  /// Integral of a_m over a triangle; the default quadrature path is
  /// overridden where exact or sharper treatment is available.
  virtual double cell_integral(int m, const Triangle& t,
                               const QuadratureRule& quad) const {
    return quad.integrate(t, [&](Vec2 x) { return evaluate(m, x); });
  }
};

struct CoefficientValidation {
  double tau = 0.0;
  double lambda = 1.0;   // 1 - tau
  double Lambda = 1.0;   // 1 + tau
  bool tau_exceeds_one = false;
};

/// Estimates tau = ||sum |a_m|||_inf / a_0^min by maximizing the truncated
/// sum over the given sample points.
inline CoefficientValidation validate_coefficient(
    const CoefficientField& coeff, const std::vector<Vec2>& sample_points,
    int m_truncate) {
  double worst = 0.0;
  for (const auto& x : sample_points) {
    double sum = 0.0;
    for (int m = 1; m <= m_truncate; ++m) {
      sum += std::abs(coeff.evaluate(m, x));
    }
    const double a0 = coeff.evaluate(0, x);
    worst = std::max(worst, sum / std::max(a0, coeff.a0_min()));
  }
  CoefficientValidation out;
  out.tau = worst;
  out.lambda = 1.0 - worst;
  out.Lambda = 1.0 + worst;
  out.tau_exceeds_one = worst >= 1.0;
  return out;
}

/// Uniform rectangular sample grid including the boundary.
inline std::vector<Vec2> sample_grid(Vec2 lo, Vec2 hi, int n) {
  std::vector<Vec2> pts;
  pts.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      pts.push_back({lo.x + (hi.x - lo.x) * i / n, lo.y + (hi.y - lo.y) * j / n});
    }
  }
  return pts;
}

}  // namespace mlsg

#endif  // MLSG_COEFFICIENT_HPP
