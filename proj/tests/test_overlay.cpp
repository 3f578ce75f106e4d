// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "mlsg/overlay.hpp"

using namespace mlsg;

namespace {

MarkedVertexSet random_marks(const Mesh& m, std::mt19937& rng, double frac) {
  const MarkedVertexSet nplus = new_interior_vertices(m);
  std::vector<Edge> picked;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& e : nplus.edges()) {
    if (u(rng) < frac) picked.push_back(e);
  }
  if (picked.empty()) {
    picked.push_back(nplus.edges().front());
  }
  return MarkedVertexSet(picked);
}

Mesh random_refinement(const Mesh& base, std::mt19937& rng, int rounds,
                       double frac) {
  Mesh m = base;
  for (int i = 0; i < rounds; ++i) m = refine(m, random_marks(m, rng, frac));
  return m;
}

// Sutherland-Hodgman clip of a convex polygon against the half-planes of a
// ccw triangle; area of triangle-triangle intersection.
double intersection_area(const Triangle& a, const Triangle& b) {
  std::vector<Vec2> poly(a.p.begin(), a.p.end());
  for (int k = 0; k < 3; ++k) {
    const Vec2 p = b.p[k];
    const Vec2 q = b.p[(k + 1) % 3];
    std::vector<Vec2> next;
    const auto inside = [&](const Vec2& v) {
      return (q - p).cross(v - p) >= -1e-15;
    };
    const auto intersect = [&](const Vec2& u, const Vec2& v) {
      const double denom = (q - p).cross(v - u);
      const double t = (q - p).cross(p - u) / denom;
      return u + (v - u) * t;
    };
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& cur = poly[i];
      const Vec2& nxt = poly[(i + 1) % poly.size()];
      if (inside(cur)) {
        next.push_back(cur);
        if (!inside(nxt)) next.push_back(intersect(cur, nxt));
      } else if (inside(nxt)) {
        next.push_back(intersect(cur, nxt));
      }
    }
    poly = std::move(next);
    if (poly.empty()) return 0.0;
  }
  double area2 = 0.0;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    area2 += (poly[i] - poly[0]).cross(poly[i + 1] - poly[0]);
  }
  return 0.5 * std::abs(area2);
}

void check_cells(const Overlay& ov, double domain_area) {
  double sum = 0.0;
  for (const auto& cell : ov.cells) {
    const Triangle tri = ov.cell_triangle(cell);
    sum += tri.area();
    const Triangle container =
        cell.side == CellSide::first ? ov.second->triangle(cell.container_id)
                                     : ov.first->triangle(cell.container_id);
    for (const auto& p : tri.p) {
      const auto lam = barycentric(p, container);
      for (double l : lam) REQUIRE(l >= -1e-12);
    }
    const auto& em = cell.side == CellSide::first
                         ? ov.first->element(cell.element_id)
                         : ov.second->element(cell.element_id);
    const auto& ec = cell.side == CellSide::first
                         ? ov.second->element(cell.container_id)
                         : ov.first->element(cell.container_id);
    REQUIRE(em.ancestor == ec.ancestor);
  }
  REQUIRE(sum == Catch::Approx(domain_area).epsilon(1e-12));
}

}  // namespace

TEST_CASE("barycentric coordinates", "[overlay]") {
  const Triangle t{{Vec2{0, 0}, Vec2{2, 0}, Vec2{0, 1}}};
  const auto c = barycentric(t.centroid(), t);
  CHECK(c[0] == Catch::Approx(1.0 / 3.0).margin(1e-15));
  CHECK(c[1] == Catch::Approx(1.0 / 3.0).margin(1e-15));
  CHECK(c[2] == Catch::Approx(1.0 / 3.0).margin(1e-15));

  const auto v0 = barycentric(t.p[0], t);
  CHECK(v0[0] == Catch::Approx(1.0).margin(1e-15));
  CHECK(v0[1] == Catch::Approx(0.0).margin(1e-15));
  CHECK(v0[2] == Catch::Approx(0.0).margin(1e-15));

  // sign oracle via cross products: a point is outside iff it is on the
  // negative side of some edge
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 2.5);
  for (int i = 0; i < 200; ++i) {
    const Vec2 x{u(rng), u(rng)};
    bool outside = false;
    for (int k = 0; k < 3; ++k) {
      if ((t.p[(k + 1) % 3] - t.p[k]).cross(x - t.p[k]) < 0) outside = true;
    }
    const auto lam = barycentric(x, t);
    CHECK(lam[0] + lam[1] + lam[2] == Catch::Approx(1.0).margin(1e-12));
    const Vec2 rebuilt = t.p[0] * lam[0] + t.p[1] * lam[1] + t.p[2] * lam[2];
    CHECK(rebuilt.x == Catch::Approx(x.x).margin(1e-12));
    CHECK(rebuilt.y == Catch::Approx(x.y).margin(1e-12));
    const bool any_negative = lam[0] < 0 || lam[1] < 0 || lam[2] < 0;
    CHECK(any_negative == outside);
  }

  CHECK_THROWS_AS(barycentric(Vec2{0, 0},
                              Triangle{{Vec2{0, 0}, Vec2{1, 1}, Vec2{2, 2}}}),
                  Error);
}

TEST_CASE("overlay of a mesh with itself", "[overlay]") {
  std::mt19937 rng(11);
  const Mesh base = make_initial_mesh(Domain::unit_square, 2);
  const Mesh m = random_refinement(base, rng, 2, 0.4);
  const Overlay ov = build_overlay(m, m);
  REQUIRE(static_cast<int>(ov.cells.size()) == m.n_elements());
  for (const auto& cell : ov.cells) {
    CHECK(cell.side == CellSide::first);
    CHECK(cell.element_id == cell.container_id);
  }
}

TEST_CASE("overlay of a uniform refinement pairs children with ancestors",
          "[overlay]") {
  const Mesh m = make_initial_mesh(Domain::unit_square, 2);
  const Mesh fine = uniform_refine(m);

  const Overlay ov = build_overlay(fine, m);
  REQUIRE(static_cast<int>(ov.cells.size()) == 4 * m.n_elements());
  for (const auto& cell : ov.cells) {
    CHECK(cell.side == CellSide::first);
    CHECK(m.area(cell.container_id) ==
          Catch::Approx(4.0 * fine.area(cell.element_id)).epsilon(1e-12));
  }

  const Overlay rev = build_overlay(m, fine);
  REQUIRE(static_cast<int>(rev.cells.size()) == 4 * m.n_elements());
  for (const auto& cell : rev.cells) CHECK(cell.side == CellSide::second);
}

TEST_CASE("random overlay pairs partition the domain", "[overlay]") {
  std::mt19937 rng(2024);
  const Mesh base = make_initial_mesh(Domain::unit_square, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Mesh a = random_refinement(base, rng, 1 + trial % 4, 0.5);
    const Mesh b = random_refinement(base, rng, 1 + (trial + 2) % 4, 0.5);
    const Overlay ab = build_overlay(a, b);
    check_cells(ab, 1.0);

    // coverage symmetry: same cell geometries regardless of argument order
    const Overlay ba = build_overlay(b, a);
    REQUIRE(ba.cells.size() == ab.cells.size());
    auto centroids = [](const Overlay& ov) {
      std::vector<std::pair<double, double>> c;
      for (const auto& cell : ov.cells) {
        const Vec2 s = ov.cell_triangle(cell).centroid();
        c.emplace_back(s.x, s.y);
      }
      std::sort(c.begin(), c.end());
      return c;
    };
    REQUIRE(centroids(ab) == centroids(ba));

    // every finer element appears in exactly one cell
    std::vector<int> count_a(a.n_elements(), 0), count_b(b.n_elements(), 0);
    for (const auto& cell : ab.cells) {
      (cell.side == CellSide::first ? count_a[cell.element_id]
                                    : count_b[cell.element_id])++;
    }
    for (const auto& cell : ab.cells) {
      if (cell.side == CellSide::first) CHECK(count_a[cell.element_id] == 1);
    }
  }
}

TEST_CASE("trichotomy of NVB element pairs (polygon-clipping oracle)",
          "[overlay]") {
  std::mt19937 rng(555);
  const Mesh base = make_initial_mesh(Domain::unit_square, 2);
  const Mesh a = random_refinement(base, rng, 3, 0.35);
  const Mesh b = random_refinement(base, rng, 3, 0.35);
  REQUIRE(a.n_elements() <= 200);
  REQUIRE(b.n_elements() <= 200);
  for (int ta = 0; ta < a.n_elements(); ++ta) {
    for (int tb = 0; tb < b.n_elements(); ++tb) {
      const Triangle tri_a = a.triangle(ta);
      const Triangle tri_b = b.triangle(tb);
      const double inter = intersection_area(tri_a, tri_b);
      const bool disjoint = inter < 1e-13;
      const bool a_in_b = std::abs(inter - tri_a.area()) < 1e-13;
      const bool b_in_a_proper = std::abs(inter - tri_b.area()) < 1e-13 &&
                                 tri_b.area() < tri_a.area() - 1e-13;
      const int outcomes = static_cast<int>(disjoint) +
                           static_cast<int>(a_in_b) +
                           static_cast<int>(b_in_a_proper);
      REQUIRE(outcomes == 1);
    }
  }
}

TEST_CASE("mismatched initial meshes are rejected", "[overlay]") {
  const Mesh square = make_initial_mesh(Domain::unit_square, 2);
  const Mesh lshape = make_initial_mesh(Domain::l_shape, 2);
  CHECK_THROWS_AS(build_overlay(square, lshape), Error);
}
