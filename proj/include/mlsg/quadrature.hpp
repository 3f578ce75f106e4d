// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_QUADRATURE_HPP
#define MLSG_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <vector>

#include "mlsg/common.hpp"

namespace mlsg {

/// Quadrature rule on the reference triangle, stored in barycentric form.
/// Weights sum to the reference area 1/2; mapping to a physical triangle T
/// scales by 2*|T|.
struct QuadratureRule {
  struct Point {
    std::array<double, 3> lambda;
    double weight;
  };
  std::vector<Point> points;
  int degree = 0;

  template <typename Fn>
  double integrate(const Triangle& t, Fn&& f) const {
    const double scale = 2.0 * t.area();
    double sum = 0.0;
    for (const auto& q : points) {
      sum += q.weight * f(t.point(q.lambda[0], q.lambda[1], q.lambda[2]));
    }
    return scale * sum;
  }
};

namespace detail {

inline void push_orbit3(std::vector<QuadratureRule::Point>& pts, double a,
                        double w) {
  const double c = 1.0 - 2.0 * a;
  pts.push_back({{c, a, a}, w});
  pts.push_back({{a, c, a}, w});
  pts.push_back({{a, a, c}, w});
}

/// Gauss-Legendre nodes/weights on [0, 1] by Newton iteration on P_n.
inline void gauss_legendre01(int n, std::vector<double>& x,
                             std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // initial guess on [-1, 1]
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / pp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = 0.5 * (1.0 + t);
    w[i] = 1.0 / ((1.0 - t * t) * pp * pp);
  }
}

}  // namespace detail

/// Symmetric rules up to degree 5; collapsed Gauss product beyond that.
inline QuadratureRule triangle_rule(int degree) {
  QuadratureRule rule;
  rule.degree = degree;
  auto& pts = rule.points;
  if (degree <= 1) {
    pts.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 0.5});
  } else if (degree == 2) {
    detail::push_orbit3(pts, 0.5, 1.0 / 6.0);  // edge midpoints
  } else if (degree <= 4) {
    detail::push_orbit3(pts, 0.445948490915965, 0.5 * 0.223381589678011);
    detail::push_orbit3(pts, 0.091576213509771, 0.5 * 0.109951743655322);
  } else if (degree == 5) {
    pts.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 0.5 * 9.0 / 40.0});
    const double s15 = std::sqrt(15.0);
    detail::push_orbit3(pts, (6.0 + s15) / 21.0, 0.5 * (155.0 + s15) / 1200.0);
    detail::push_orbit3(pts, (6.0 - s15) / 21.0, 0.5 * (155.0 - s15) / 1200.0);
  } else {
    // collapsed product rule: x = u, y = v (1 - u), Jacobian (1 - u)
    const int n = (degree + 3) / 2;  // exact for total degree <= 2n - 2
    std::vector<double> gx, gw;
    detail::gauss_legendre01(n, gx, gw);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double u = gx[i];
        const double v = gx[j] * (1.0 - u);
        pts.push_back({{1.0 - u - v, u, v}, gw[i] * gw[j] * (1.0 - u)});
      }
    }
  }
  return rule;
}

}  // namespace mlsg

#endif  // MLSG_QUADRATURE_HPP
