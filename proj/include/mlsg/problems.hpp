// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_PROBLEMS_HPP
#define MLSG_PROBLEMS_HPP

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>

#include "mlsg/coefficient.hpp"
#include "mlsg/mesh.hpp"

namespace mlsg {

/// Fourier-mode coefficient family: a_0 = 1 and, for m >= 1,
///   a_m(x) = A m^{-sigma} cos(2 pi beta1(m) x1) cos(2 pi beta2(m) x2)
/// with A = 0.9 / zeta(sigma), sigma = 2.
class BenchmarkCoefficient final : public CoefficientField {
public:
  static constexpr double kSigma = 2.0;

  static double zeta2() { return M_PI * M_PI / 6.0; }
  static double amplitude() { return 0.9 / zeta2(); }

  static int wave_k(int m) {
    return static_cast<int>(std::floor(-0.5 + std::sqrt(0.5 + 2.0 * m)));
  }
  static int beta1(int m) {
    const int k = wave_k(m);
    return m - k * (k + 1) / 2;
  }
  static int beta2(int m) { return wave_k(m) - beta1(m); }

  double evaluate(int m, Vec2 x) const override {
    if (m == 0) return 1.0;
    const double amp = amplitude() * std::pow(static_cast<double>(m), -kSigma);
    return amp * std::cos(2.0 * M_PI * beta1(m) * x.x) *
           std::cos(2.0 * M_PI * beta2(m) * x.y);
  }

  int max_active_m() const override { return -1; }
  double a0_min() const override { return 1.0; }
  double a0_max() const override { return 1.0; }

  // sum_m A m^{-2} |cos cos| <= A zeta(2) = 0.9
  double tau() const override { return 0.9; }

  double cell_integral(int m, const Triangle& t,
                       const QuadratureRule& quad) const override {
    if (m == 0) return t.area();
    return CoefficientField::cell_integral(m, t, quad);
  }
};

/// Nine disjoint circular inclusions on the unit square with amplitudes
/// 0.5 / 0.7 / 0.9 and a_m = 0 for m > 9.
class CookieCoefficient final : public CoefficientField {
public:
  static constexpr double kRadius = 0.125;

  static Vec2 center(int m) {
    const int i = (m - 1) % 3 + 1;
    const int j = (m - 1) / 3 + 1;
    return {(2.0 * i - 1.0) / 6.0, (2.0 * j - 1.0) / 6.0};
  }

  static double amplitude(int m) {
    if (m == 5) return 0.9;
    if (m == 2 || m == 4 || m == 6 || m == 8) return 0.7;
    if (m == 1 || m == 3 || m == 7 || m == 9) return 0.5;
    return 0.0;
  }

  double evaluate(int m, Vec2 x) const override {
    if (m == 0) return 1.0;
    if (m > 9) return 0.0;
    const Vec2 d = x - center(m);
    return d.dot(d) <= kRadius * kRadius ? amplitude(m) : 0.0;
  }

  int max_active_m() const override { return 9; }
  double a0_min() const override { return 1.0; }
  double a0_max() const override { return 1.0; }
  double tau() const override { return 0.9; }  // disks are pairwise disjoint

  double cell_integral(int m, const Triangle& t,
                       const QuadratureRule&) const override {
    if (m == 0) return t.area();
    if (m > 9) return 0.0;
    const Vec2 c = center(m);
    double dmax = 0.0;
    for (const auto& p : t.p) dmax = std::max(dmax, (p - c).norm());
    if (dmax <= kRadius) return amplitude(m) * t.area();
    const double dmin = distance_to_triangle(c, t);
    if (dmin >= kRadius) return 0.0;
    // cell crosses the disk boundary: sample the indicator with a finer rule
    return crossing_rule().integrate(t,
                                     [&](Vec2 x) { return evaluate(m, x); });
  }

private:
  static const QuadratureRule& crossing_rule() {
    static const QuadratureRule rule = triangle_rule(7);
    return rule;
  }

  static double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return (p - (a + ab * s)).norm();
  }

  static double distance_to_triangle(Vec2 p, const Triangle& t) {
    const auto lam = barycentric(p, t);
    if (lam[0] >= 0.0 && lam[1] >= 0.0 && lam[2] >= 0.0) return 0.0;
    double d = distance_to_segment(p, t.p[0], t.p[1]);
    d = std::min(d, distance_to_segment(p, t.p[1], t.p[2]));
    return std::min(d, distance_to_segment(p, t.p[2], t.p[0]));
  }
};

/// Deterministic coefficient (a_m = 0 for m >= 1); used by tests and as a
/// degenerate problem for the adaptive loop.
class MeanOnlyCoefficient final : public CoefficientField {
public:
  double evaluate(int m, Vec2) const override { return m == 0 ? 1.0 : 0.0; }
  int max_active_m() const override { return 0; }
  double a0_min() const override { return 1.0; }
  double a0_max() const override { return 1.0; }
  double tau() const override { return 0.0; }
  double cell_integral(int m, const Triangle& t,
                       const QuadratureRule&) const override {
    return m == 0 ? t.area() : 0.0;
  }
};

struct ProblemSpec {
  std::string name;
  Domain domain = Domain::unit_square;
  int grid_n = 16;
  std::shared_ptr<const CoefficientField> coefficient;
  SpatialFunction f;
  int max_parameters = 0;  // 0 = unbounded index universe
  double default_tol = 6e-4;
  int default_m_bar = 1;
};

inline ProblemSpec get_problem(const std::string& name) {
  ProblemSpec p;
  p.name = name;
  p.f = [](Vec2) { return 1.0; };
  if (name == "benchmark-square") {
    p.domain = Domain::unit_square;
    p.grid_n = 16;
    p.coefficient = std::make_shared<BenchmarkCoefficient>();
    p.default_tol = 6e-4;
    p.default_m_bar = 1;
  } else if (name == "benchmark-lshape") {
    p.domain = Domain::l_shape;
    p.grid_n = 16;
    p.coefficient = std::make_shared<BenchmarkCoefficient>();
    p.default_tol = 2.5e-3;
    p.default_m_bar = 1;
  } else if (name == "cookie") {
    p.domain = Domain::unit_square;
    p.grid_n = 16;
    p.coefficient = std::make_shared<CookieCoefficient>();
    p.max_parameters = 9;
    p.default_tol = 8e-4;
    p.default_m_bar = 9;
  } else if (name == "deterministic-square") {
    p.domain = Domain::unit_square;
    p.grid_n = 16;
    p.coefficient = std::make_shared<MeanOnlyCoefficient>();
    p.default_tol = 6e-4;
    p.default_m_bar = 1;
  } else {
    throw Error("unknown problem: " + name);
  }
  return p;
}

}  // namespace mlsg

#endif  // MLSG_PROBLEMS_HPP
