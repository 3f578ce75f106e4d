// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mlsg/problems.hpp"

using namespace mlsg;

TEST_CASE("Fourier-mode coefficient family", "[problems]") {
  const BenchmarkCoefficient c;
  CHECK(BenchmarkCoefficient::amplitude() ==
        Catch::Approx(0.9 * 6.0 / (M_PI * M_PI)).epsilon(1e-15));
  CHECK(BenchmarkCoefficient::amplitude() == Catch::Approx(0.547).margin(6e-4));

  // m = 1: k = 1, beta = (0, 1)
  CHECK(BenchmarkCoefficient::wave_k(1) == 1);
  CHECK(BenchmarkCoefficient::beta1(1) == 0);
  CHECK(BenchmarkCoefficient::beta2(1) == 1);
  // m = 2: k = 1, beta = (1, 0)
  CHECK(BenchmarkCoefficient::beta1(2) == 1);
  CHECK(BenchmarkCoefficient::beta2(2) == 0);

  const double a = BenchmarkCoefficient::amplitude();
  for (const Vec2 x : {Vec2{0.3, 0.7}, Vec2{0.0, 0.0}, Vec2{0.9, 0.2}}) {
    CHECK(c.evaluate(0, x) == 1.0);
    CHECK(c.evaluate(1, x) ==
          Catch::Approx(a * std::cos(2.0 * M_PI * x.y)).margin(1e-15));
    CHECK(c.evaluate(2, x) ==
          Catch::Approx(a / 4.0 * std::cos(2.0 * M_PI * x.x)).margin(1e-15));
  }

  // sup norm A m^{-2}, attained at the origin
  for (int m : {1, 2, 5, 9}) {
    double sup = 0.0;
    for (const Vec2 x : sample_grid({0, 0}, {1, 1}, 64)) {
      sup = std::max(sup, std::abs(c.evaluate(m, x)));
    }
    CHECK(sup == Catch::Approx(a / (m * m)).epsilon(1e-12));
  }
  // partial sums of the tau series converge to A zeta(2) = 0.9 from below;
  // the tail after M terms is bounded by A / M
  double partial = 0.0;
  for (int m = 1; m <= 1000; ++m) partial += a / (m * m);
  CHECK(partial < 0.9);
  CHECK(0.9 - partial < a / 1000.0 + 1e-12);
}

TEST_CASE("cookie coefficient family", "[problems]") {
  const CookieCoefficient c;
  CHECK(CookieCoefficient::center(5).x == Catch::Approx(0.5));
  CHECK(CookieCoefficient::center(5).y == Catch::Approx(0.5));
  CHECK(CookieCoefficient::amplitude(5) == 0.9);
  CHECK(CookieCoefficient::amplitude(2) == 0.7);
  CHECK(CookieCoefficient::amplitude(1) == 0.5);
  CHECK(CookieCoefficient::amplitude(10) == 0.0);

  CHECK(c.evaluate(5, {0.5, 0.5}) == 0.9);
  CHECK(c.evaluate(5, {0.5 + 0.126, 0.5}) == 0.0);
  CHECK(c.evaluate(12, {0.5, 0.5}) == 0.0);
  CHECK(c.evaluate(0, {0.1, 0.1}) == 1.0);

  // disks pairwise disjoint and strictly inside the square
  for (int m = 1; m <= 9; ++m) {
    const Vec2 cm = CookieCoefficient::center(m);
    CHECK(cm.x - CookieCoefficient::kRadius > 0.0);
    CHECK(cm.x + CookieCoefficient::kRadius < 1.0);
    CHECK(cm.y - CookieCoefficient::kRadius > 0.0);
    CHECK(cm.y + CookieCoefficient::kRadius < 1.0);
    for (int k = m + 1; k <= 9; ++k) {
      const double dist = (cm - CookieCoefficient::center(k)).norm();
      CHECK(dist > 2.0 * CookieCoefficient::kRadius);
    }
  }
  CHECK(c.tau() == 0.9);

  // crossing-cell integral reproduces a known disk-segment area:
  // a triangle covering the whole disk integrates to amplitude * pi r^2
  const Triangle covering{{Vec2{0.1, 0.1}, Vec2{0.9, 0.1}, Vec2{0.5, 0.9}}};
  const double integral = c.cell_integral(5, covering, triangle_rule(4));
  const double disk_area = M_PI * CookieCoefficient::kRadius *
                           CookieCoefficient::kRadius;
  CHECK(integral == Catch::Approx(0.9 * disk_area).epsilon(0.02));
}

TEST_CASE("problem registry", "[problems]") {
  const ProblemSpec square = get_problem("benchmark-square");
  CHECK(square.domain == Domain::unit_square);
  CHECK(square.grid_n == 16);
  CHECK(square.default_tol == 6e-4);
  CHECK(square.default_m_bar == 1);
  CHECK(square.max_parameters == 0);
  CHECK(square.f({0.3, 0.4}) == 1.0);

  const ProblemSpec lshape = get_problem("benchmark-lshape");
  CHECK(lshape.domain == Domain::l_shape);
  CHECK(lshape.default_tol == 2.5e-3);

  const ProblemSpec cookie = get_problem("cookie");
  CHECK(cookie.default_tol == 8e-4);
  CHECK(cookie.default_m_bar == 9);
  CHECK(cookie.max_parameters == 9);
  CHECK(cookie.f({0.9, 0.9}) == 1.0);

  CHECK_THROWS_AS(get_problem("nonexistent"), Error);

  // coefficient bounds feed the solver's ellipticity requirement
  for (const char* name : {"benchmark-square", "benchmark-lshape", "cookie"}) {
    const auto p = get_problem(name);
    CHECK(p.coefficient->a0_min() > 0.0);
    CHECK(p.coefficient->tau() < 1.0);
  }
}
