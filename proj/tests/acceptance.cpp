// SPDX-License-Identifier: Apache-2.0
//
// Integration gate: one test case per acceptance criterion, each printing a
// PASS/FAIL line. Benchmark runs are shared between criteria through a
// process-wide cache.

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "mlsg/driver.hpp"

using namespace mlsg;

namespace {

const SpatialFunction kOne = [](Vec2) { return 1.0; };

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << "[acceptance] criterion " << criterion << ": "
            << (pass ? "PASS" : "FAIL") << " - " << detail << std::endl;
}

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
      const double t = (q - p).cross(p - u) / (q - p).cross(v - u);
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

struct RunKey {
  std::string problem;
  std::string alg;
  double tol;
  double vartheta;
  bool operator<(const RunKey& o) const {
    return std::tie(problem, alg, tol, vartheta) <
           std::tie(o.problem, o.alg, o.tol, o.vartheta);
  }
};

struct RunOutput {
  AdaptiveResult result;
  std::vector<IndexSet> index_sets;  // per iteration
  double seconds = 0.0;
};

const RunOutput& cached_run(const std::string& problem, const std::string& alg,
                            double tol, double vartheta = 1.0) {
  static std::map<RunKey, std::unique_ptr<RunOutput>> cache;
  const RunKey key{problem, alg, tol, vartheta};
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;

  AdaptiveConfig cfg = AdaptiveConfig::for_problem(get_problem(problem));
  cfg.tol = tol;
  cfg.max_iterations = 100;
  cfg.marking.vartheta = vartheta;
  if (alg == "ml-a" || alg == "sl-a") {
    cfg.marking.criterion = MarkCriterion::A;
  } else if (alg == "ml-b" || alg == "sl-b") {
    cfg.marking.criterion = MarkCriterion::B;
  } else {
    cfg.marking.criterion = MarkCriterion::C;
  }
  cfg.single_level = alg.rfind("sl-", 0) == 0;

  auto out = std::make_unique<RunOutput>();
  const auto start = std::chrono::steady_clock::now();
  out->result = run_adaptive(cfg, [&](const IterationState& s) {
    out->index_sets.push_back(s.space.index_set());
  });
  out->seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::cout << "[acceptance] run " << problem << "/" << alg << " tol " << tol
            << " vartheta " << vartheta << ": "
            << out->result.records.size() << " iterations, "
            << out->result.records.back().dofs << " dofs, "
            << out->seconds << " s" << std::endl;
  auto [pos, inserted] = cache.emplace(key, std::move(out));
  return *pos->second;
}

}  // namespace

TEST_CASE("criterion 1: overlay correctness", "[acceptance]") {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937 rng(20240801);
  const Mesh bases[3] = {make_initial_mesh(Domain::unit_square, 1),
                         make_initial_mesh(Domain::unit_square, 4),
                         make_initial_mesh(Domain::l_shape, 4)};
  const double areas[3] = {1.0, 1.0, 3.0};

  bool pass = true;
  std::string why = "200 random pairs over 3 initial meshes";
  int pairs = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int which = trial % 3;
    const Mesh a = random_refinement(bases[which], rng, 1 + trial % 3, 0.4);
    const Mesh b = random_refinement(bases[which], rng, 1 + (trial / 3) % 3, 0.4);
    const Overlay ov = build_overlay(a, b);
    ++pairs;
    double sum = 0.0;
    for (const auto& cell : ov.cells) {
      const Triangle tri = ov.cell_triangle(cell);
      sum += tri.area();
      const Triangle container =
          cell.side == CellSide::first
              ? ov.second->triangle(cell.container_id)
              : ov.first->triangle(cell.container_id);
      for (const auto& p : tri.p) {
        for (double lam : barycentric(p, container)) {
          if (lam < -1e-12) {
            pass = false;
            why = "containment oracle failed";
          }
        }
      }
    }
    if (std::abs(sum - areas[which]) > 1e-12 * areas[which]) {
      pass = false;
      why = "area sum mismatch";
    }
  }

  // trichotomy by polygon clipping on small meshes
  const Mesh a = random_refinement(bases[1], rng, 2, 0.3);
  const Mesh b = random_refinement(bases[1], rng, 2, 0.3);
  if (a.n_elements() <= 200 && b.n_elements() <= 200) {
    for (int ta = 0; pass && ta < a.n_elements(); ++ta) {
      for (int tb = 0; pass && tb < b.n_elements(); ++tb) {
        const Triangle ta_tri = a.triangle(ta);
        const Triangle tb_tri = b.triangle(tb);
        const double inter = intersection_area(ta_tri, tb_tri);
        const int outcomes =
            static_cast<int>(inter < 1e-13) +
            static_cast<int>(std::abs(inter - ta_tri.area()) < 1e-13) +
            static_cast<int>(std::abs(inter - tb_tri.area()) < 1e-13 &&
                             tb_tri.area() < ta_tri.area() - 1e-13);
        if (outcomes != 1) {
          pass = false;
          why = "trichotomy violated";
        }
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (secs >= 60.0) {
    pass = false;
    why = "runtime over one minute";
  }
  std::ostringstream os;
  os << pairs << " pairs, " << secs << " s";
  report(1, pass, why + " (" + os.str() + ")");
  REQUIRE(pass);
}

TEST_CASE("criterion 2: cross-mesh assembly oracle", "[acceptance]") {
  std::mt19937 rng(77);
  const auto coeff = std::make_shared<BenchmarkCoefficient>();
  bool pass = true;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Mesh coarse = make_initial_mesh(Domain::unit_square, 2);
    for (int r = 0; r < trial % 3; ++r) {
      coarse = refine(coarse, random_marks(coarse, rng, 0.3));
    }
    const Mesh fine = refine(coarse, random_marks(coarse, rng, 0.5));

    Eigen::MatrixXd p =
        Eigen::MatrixXd::Zero(fine.n_interior(), coarse.n_interior());
    for (int d = 0; d < coarse.n_interior(); ++d) {
      const int fd = fine.dof_of_vertex(coarse.vertex_of_dof(d));
      if (fd >= 0) p(fd, d) = 1.0;
    }
    for (const auto& [e, mid] : fine.parent_midpoints()) {
      const int fd = fine.dof_of_vertex(mid);
      if (fd < 0) continue;
      for (int v : {e.a, e.b}) {
        const int d = coarse.dof_of_vertex(v);
        if (d >= 0) p(fd, d) += 0.5;
      }
    }
    for (int m = 0; m <= 5; ++m) {
      const Eigen::MatrixXd got(stiffness_cross(coarse, fine, *coeff, m));
      const Eigen::MatrixXd oracle =
          p.transpose() * Eigen::MatrixXd(stiffness_same(fine, *coeff, m));
      const double rel = (got - oracle).norm() / std::max(1e-300, oracle.norm());
      worst = std::max(worst, rel);
      if (rel > 1e-12) pass = false;

      // exact transpose identity
      SparseMatrix ab = stiffness_cross(coarse, fine, *coeff, m);
      SparseMatrix ba_t(stiffness_cross(fine, coarse, *coeff, m).transpose());
      ba_t.makeCompressed();
      ab.makeCompressed();
      if (ab.nonZeros() != ba_t.nonZeros()) pass = false;
      for (int k = 0; pass && k < ab.outerSize(); ++k) {
        SparseMatrix::InnerIterator i1(ab, k), i2(ba_t, k);
        for (; i1 && i2; ++i1, ++i2) {
          if (i1.row() != i2.row() || i1.value() != i2.value()) pass = false;
        }
        if (i1 || i2) pass = false;
      }
    }
  }
  std::ostringstream os;
  os << "20 nested pairs, m in 0..5, worst relative Frobenius " << worst;
  report(2, pass, os.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 3: parametric basis", "[acceptance]") {
  bool pass = true;
  std::ostringstream os;

  const RecurrenceTable table(24);
  // Gauss nodes for the oracle
  const int gn = 64;
  std::vector<double> gx(gn), gw(gn);
  for (int i = 0; i < gn; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (gn + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= gn; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = gn * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / pp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    gx[i] = t;
    gw[i] = 2.0 / ((1.0 - t * t) * pp * pp);
  }

  double gram_err = 0.0;
  std::vector<std::vector<double>> vals;
  for (int q = 0; q < gn; ++q) vals.push_back(table.evaluate_all(20, gx[q]));
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      double s = 0.0;
      for (int q = 0; q < gn; ++q) s += 0.5 * gw[q] * vals[q][i] * vals[q][j];
      gram_err = std::max(gram_err, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  if (gram_err > 1e-12) pass = false;

  const double b0_err = std::abs(table.beta(0) - 1.0 / std::sqrt(3.0));
  const double b1_err = std::abs(table.beta(1) - 2.0 / std::sqrt(15.0));
  if (b0_err > 1e-12 || b1_err > 1e-12) pass = false;

  // G entries vs quadrature of int y P_a P_b dy/2
  double g_err = 0.0;
  const IndexSet p({MultiIndex::zero(), MultiIndex::unit(1),
                    MultiIndex::unit(1).raised(1), MultiIndex::unit(2),
                    MultiIndex::unit(1).raised(2)});
  for (int m = 1; m <= 2; ++m) {
    const CouplingMatrix g = build_G(m, p, p, table);
    for (int i = 0; i < p.size(); ++i) {
      for (int j = 0; j < p.size(); ++j) {
        const int top = std::max({p[i].max_support(), p[j].max_support(), m});
        bool same_elsewhere = true;
        for (int k = 1; k <= top; ++k) {
          if (k != m && p[i][k] != p[j][k]) same_elsewhere = false;
        }
        double oracle = 0.0;
        if (same_elsewhere) {
          for (int q = 0; q < gn; ++q) {
            const auto v =
                table.evaluate_all(std::max(p[i][m], p[j][m]), gx[q]);
            oracle += 0.5 * gw[q] * gx[q] * v[p[i][m]] * v[p[j][m]];
          }
        }
        g_err = std::max(g_err, std::abs(g(i, j) - oracle));
      }
    }
  }
  if (g_err > 1e-10) pass = false;

  os << "Gram error " << gram_err << ", beta errors " << b0_err << "/"
     << b1_err << ", G error " << g_err;
  report(3, pass, os.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 4: solver iterations and matvec oracle", "[acceptance]") {
  bool pass = true;
  std::ostringstream os;

  // blockwise matvec vs dense oracle on a small multilevel instance
  std::mt19937 rng(2);
  const auto coeff = std::make_shared<BenchmarkCoefficient>();
  const RecurrenceTable table(32);
  AssemblyCache cache(coeff);
  const auto t0 =
      std::make_shared<const Mesh>(make_initial_mesh(Domain::unit_square, 4));
  const IndexSet p({MultiIndex::zero(), MultiIndex::unit(1),
                    MultiIndex::unit(2), MultiIndex::unit(1).raised(2)});
  std::vector<MeshPtr> meshes;
  for (int i = 0; i < p.size(); ++i) {
    meshes.push_back(std::make_shared<const Mesh>(
        random_refinement(*t0, rng, i % 3, 0.4)));
  }
  const MultilevelSpace space(p, meshes);
  REQUIRE(space.total_dofs() <= 2000);
  const BlockOperator op = assemble_operator(space, table, cache);
  const Eigen::MatrixXd dense = dense_operator(op, space.offsets());
  double matvec_err = 0.0;
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    Vector x(space.total_dofs());
    for (int i = 0; i < x.size(); ++i) x[i] = g(rng);
    const Vector ref = dense * x;
    matvec_err =
        std::max(matvec_err, (op.apply(x) - ref).norm() / ref.norm());
  }
  if (matvec_err > 1e-12) pass = false;

  // solver iterations across the benchmark adaptive steps
  const auto& square = cached_run("benchmark-square", "ml-c", 2e-3);
  const auto& lshape = cached_run("benchmark-lshape", "ml-a", 5e-3);
  int max_its = std::max(square.result.max_solver_iterations,
                         lshape.result.max_solver_iterations);
  if (max_its > 25) pass = false;

  os << "matvec error " << matvec_err << ", max MINRES iterations " << max_its
     << " at tol 1e-9";
  report(4, pass, os.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 5: Doerfler minimality", "[acceptance]") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool pass = true;
  int cases = 0;
  for (double theta : {0.3, 0.5, 0.7, 1.0}) {
    for (int trial = 0; trial < 60; ++trial) {
      const int n = 1 + trial % 12;
      std::vector<double> values(n);
      for (auto& v : values) v = u(rng) < 0.2 ? 0.0 : u(rng);
      const auto sel = doerfler_min(values, theta);
      double total = 0.0;
      for (double v : values) total += v * v;
      double marked = 0.0;
      for (int i : sel) marked += values[i] * values[i];
      if (marked < theta * total - 1e-12 * total) pass = false;
      int best = n + 1;
      for (int mask = 0; mask < (1 << n); ++mask) {
        double s = 0.0;
        int card = 0;
        for (int i = 0; i < n; ++i) {
          if (mask & (1 << i)) {
            s += values[i] * values[i];
            ++card;
          }
        }
        if (s >= theta * total - 1e-12 * total) best = std::min(best, card);
      }
      if (static_cast<int>(sel.size()) != best) pass = false;
      ++cases;
    }
  }
  std::ostringstream os;
  os << cases << " exhaustive subset checks, sizes up to 12, theta in "
     << "{0.3, 0.5, 0.7, 1.0}";
  report(5, pass, os.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 6: two-sided estimator behavior", "[acceptance]") {
  bool pass = true;
  std::vector<double> ratios;

  AdaptiveConfig cfg =
      AdaptiveConfig::for_problem(get_problem("benchmark-square"));
  cfg.problem.grid_n = 4;  // small instances: square domain, meshes <= 1k
  cfg.tol = 1.5e-3;
  cfg.max_iterations = 40;
  cfg.marking.criterion = MarkCriterion::C;
  int instances = 0;
  run_adaptive(cfg, [&](const IterationState& s) {
    if (instances >= 12) return;
    if (s.space.index_set().size() > 5) return;
    int max_elems = 0;
    for (int i = 0; i < s.space.n_blocks(); ++i) {
      max_elems = std::max(max_elems, s.space.mesh(i)->n_elements());
    }
    if (max_elems > 1000) return;
    const RatioCheck rc = theorem_ratio_check(
        s.space, s.solution, s.rhs, s.indicators.detail, s.initial_mesh,
        s.table, s.cache, kOne, s.indicators.est());
    if (!rc.valid) return;
    ratios.push_back(rc.ratio);
    ++instances;
  });
  if (instances < 10) pass = false;
  double lo = 1e300, hi = 0.0;
  for (double r : ratios) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    if (r < 0.2 || r > 5.0) pass = false;
  }
  if (hi / lo >= 2.0) pass = false;
  std::ostringstream os;
  os << instances << " instances, ratio range [" << lo << ", " << hi
     << "], spread x" << hi / lo;
  report(6, pass, os.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 7: square-benchmark convergence rates", "[acceptance]") {
  bool pass = true;
  const double tol = 2e-3;
  const double mlc = fit_rate(cached_run("benchmark-square", "ml-c", tol)
                                  .result.records);
  const double sla = fit_rate(cached_run("benchmark-square", "sl-a", tol)
                                  .result.records);
  const double mla = fit_rate(cached_run("benchmark-square", "ml-a", tol)
                                  .result.records);
  const double mlb = fit_rate(cached_run("benchmark-square", "ml-b", tol)
                                  .result.records);
  if (!(mlc >= -0.6 && mlc <= -0.4)) pass = false;
  if (!(sla >= -0.41 && sla <= -0.26)) pass = false;
  if (!(mla < sla && mlb < sla)) pass = false;
  std::ostringstream os;
  os << "slopes ml-c " << mlc << ", sl-a " << sla << ", ml-a " << mla
     << ", ml-b " << mlb;
  report(7, pass, os.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 8: effectivity against a self-reference", "[acceptance]") {
  bool pass = true;
  const double tol = 2e-3;
  const auto& reference = cached_run("benchmark-square", "ml-c", tol / 4.0);
  const double ref_energy = reference.result.records.back().energy;

  std::ostringstream os;
  for (const char* alg : {"sl-a", "ml-c"}) {
    auto records = cached_run("benchmark-square", alg, tol).result.records;
    apply_effectivity(records, ref_energy);
    double lo = 1e300, hi = 0.0;
    for (const auto& r : records) {
      if (r.iter <= 3 || std::isnan(r.effectivity)) continue;
      lo = std::min(lo, r.effectivity);
      hi = std::max(hi, r.effectivity);
      if (r.effectivity < 0.55 || r.effectivity > 1.0) pass = false;
    }
    os << alg << " effectivity in [" << lo << ", " << hi << "] ";
  }
  report(8, pass, os.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 9: L-shaped structural checks", "[acceptance]") {
  bool pass = true;
  const double tol = 5e-3;
  std::ostringstream os;

  for (const char* alg : {"ml-a", "ml-b"}) {
    const auto& run = cached_run("benchmark-lshape", alg, tol);
    MultiIndex first_new;
    bool found = false;
    for (const auto& p : run.index_sets) {
      if (p.size() > 1 && !found) {
        found = true;
        for (int i = 0; i < p.size(); ++i) {
          if (!p[i].is_zero()) first_new = p[i];
        }
      }
    }
    if (!found || !(first_new == MultiIndex::unit(1))) pass = false;
    os << alg << " first activation " << (found ? first_new.to_string(2) : "-")
       << "; ";
  }

  const auto& mlc = cached_run("benchmark-lshape", "ml-c", tol);
  const auto& mla = cached_run("benchmark-lshape", "ml-a", tol);
  const auto iterations = [](const RunOutput& r) {
    return r.result.records.back().iter;
  };
  const auto dofs = [](const RunOutput& r) {
    return r.result.records.back().dofs;
  };
  if (!(iterations(mlc) < iterations(mla))) pass = false;
  if (!(dofs(mlc) < dofs(mla))) pass = false;
  os << "ml-c " << iterations(mlc) << " iters / " << dofs(mlc)
     << " dofs vs ml-a " << iterations(mla) << " / " << dofs(mla);
  report(9, pass, os.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 10: cookie checks", "[acceptance]") {
  bool pass = true;
  const double tol = 3e-3;
  std::ostringstream os;

  const auto& mlc = cached_run("cookie", "ml-c", tol);
  // all 9 parameters eventually activated
  const IndexSet& final_p = mlc.index_sets.back();
  if (final_p.n_active_parameters() != 9) pass = false;
  // parameter 5 activated no later than any of {1, 3, 7, 9}
  auto activation_iter = [&](int m) {
    for (std::size_t it = 0; it < mlc.index_sets.size(); ++it) {
      const auto sup = mlc.index_sets[it].support();
      if (std::find(sup.begin(), sup.end(), m) != sup.end()) {
        return static_cast<int>(it);
      }
    }
    return static_cast<int>(mlc.index_sets.size()) + 1;
  };
  const int act5 = activation_iter(5);
  for (int m : {1, 3, 7, 9}) {
    if (act5 > activation_iter(m)) pass = false;
  }
  os << "ml-c activates " << final_p.n_active_parameters()
     << " parameters, y5 at iteration " << act5 << "; ";

  // ML-A with vartheta in {4, 8} reaches the optimal-rate band
  for (double vt : {4.0, 8.0}) {
    const double slope =
        fit_rate(cached_run("cookie", "ml-a", tol, vt).result.records);
    if (!(slope >= -0.62 && slope <= -0.4)) pass = false;
    os << "ml-a vartheta " << vt << " slope " << slope << "; ";
  }
  report(10, pass, os.str());
  REQUIRE(pass);
}
