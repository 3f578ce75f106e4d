// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_DRIVER_HPP
#define MLSG_DRIVER_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mlsg/marking.hpp"
#include "mlsg/problems.hpp"

namespace mlsg {

struct AdaptiveConfig {
  ProblemSpec problem;
  MarkingConfig marking;
  int m_bar = 1;
  double tol = 1e-3;
  SolveOptions solver;
  int max_iterations = 100;
  bool single_level = false;

  static AdaptiveConfig for_problem(const ProblemSpec& p) {
    AdaptiveConfig c;
    c.problem = p;
    c.m_bar = p.default_m_bar;
    c.tol = p.default_tol;
    return c;
  }
};

struct IterationRecord {
  int iter = 0;
  long long dofs = 0;
  double est = 0.0;
  double est_x = 0.0;
  double est_p = 0.0;
  int card_p = 0;
  int deg_p = 0;
  int supp_p = 0;
  int solver_iterations = 0;
  std::string branch;
  double energy = 0.0;  // ||u||_B^2 = b . u, used by effectivity studies
  double effectivity = std::numeric_limits<double>::quiet_NaN();
  double true_error = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr const char* kCsvHeader =
    "iter,dofs,error,yp_one,xq_one,cardP,degP,suppP,solver_iters,branch,"
    "effindices,truerr";

inline std::string csv_row(const IterationRecord& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.iter << ',' << r.dofs << ',' << r.est << ',' << r.est_x << ','
     << r.est_p << ',' << r.card_p << ',' << r.deg_p << ',' << r.supp_p << ','
     << r.solver_iterations << ',' << r.branch << ',' << r.effectivity << ','
     << r.true_error;
  return os.str();
}

enum class RunStatus { reached_tolerance, iteration_cap, stalled };

/// Everything a per-iteration observer may need (ratio checks, mesh dumps).
struct IterationState {
  const MultilevelSpace& space;
  const BlockVector& solution;
  const BlockVector& rhs;
  const Indicators& indicators;
  const MeshPtr& initial_mesh;
  const RecurrenceTable& table;
  AssemblyCache& cache;
  const IterationRecord& record;
};

struct AdaptiveResult {
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::reached_tolerance;
  int max_solver_iterations = 0;
  MultilevelSpace space;
  BlockVector solution;
  MeshPtr initial_mesh;
};

inline bool stopping_check(const IterationRecord& record,
                           const AdaptiveConfig& config) {
  return record.est <= config.tol || record.iter >= config.max_iterations;
}

namespace detail {

/// Injection of a previous solution: copy coefficients at shared vertex ids,
/// zeros elsewhere. Refined meshes keep their source's vertex ids, so the
/// lookup is by id.
inline BlockVector warm_start(const MultilevelSpace& old_space,
                              const BlockVector& old_u,
                              const MultilevelSpace& new_space) {
  BlockVector x0(new_space);
  const IndexSet& old_p = old_space.index_set();
  for (int i = 0; i < new_space.n_blocks(); ++i) {
    const int j = old_p.position(new_space.index_set()[i]);
    if (j < 0) continue;
    const Mesh& old_mesh = *old_space.mesh(j);
    const Mesh& new_mesh = *new_space.mesh(i);
    const auto src = old_u.block(j);
    auto dst = x0.block(i);
    if (&old_mesh == &new_mesh) {
      dst = src;
      continue;
    }
    if (new_mesh.n_vertices() < old_mesh.n_vertices()) continue;
    for (int d = 0; d < old_mesh.n_interior(); ++d) {
      const int v = old_mesh.vertex_of_dof(d);
      const int nd = new_mesh.dof_of_vertex(v);
      if (nd >= 0) dst[nd] = src[d];
    }
  }
  return x0;
}

}  // namespace detail

/// SOLVE -> ESTIMATE -> MARK -> REFINE loop. Multilevel mode refines the
/// per-index meshes independently and starts every newly activated index on
/// the initial mesh; single-level mode keeps one shared mesh, refined with
/// the union of the per-index spatial marks.
inline AdaptiveResult run_adaptive(
    const AdaptiveConfig& config,
    const std::function<void(const IterationState&)>& on_iteration = {}) {
  const ProblemSpec& problem = config.problem;
  if (!problem.coefficient) throw Error("run_adaptive: problem has no coefficient");
  const auto t0 =
      std::make_shared<const Mesh>(make_initial_mesh(problem.domain, problem.grid_n));
  const RecurrenceTable table(128);
  AssemblyCache cache(problem.coefficient);

  IndexSet active = IndexSet::initial();
  std::vector<MeshPtr> meshes{t0};

  AdaptiveResult result;
  result.initial_mesh = t0;
  result.status = RunStatus::iteration_cap;

  MultilevelSpace prev_space;
  BlockVector prev_u;
  bool have_prev = false;

  for (int ell = 0; ell <= config.max_iterations; ++ell) {
    MultilevelSpace space(active, meshes);
    const BlockOperator op = assemble_operator(space, table, cache);
    const BlockVector rhs = assemble_rhs(space, problem.f);
    const MeanPreconditioner prec(space, cache);
    SolveResult sol;
    if (have_prev) {
      const BlockVector x0 = detail::warm_start(prev_space, prev_u, space);
      sol = solve(op, rhs, prec, config.solver, &x0);
    } else {
      sol = solve(op, rhs, prec, config.solver);
    }
    BlockVector u(space);
    u.data = std::move(sol.x);
    result.max_solver_iterations =
        std::max(result.max_solver_iterations, sol.iterations);

    const IndexSet detail_indices =
        detail_set(active, config.m_bar, problem.max_parameters);
    const Indicators ind = estimate(space, u, detail_indices, t0, table,
                                    cache, problem.f);

    IterationRecord rec;
    rec.iter = ell;
    rec.dofs = space.total_dofs();
    rec.est = ind.est();
    rec.est_x = ind.est_x();
    rec.est_p = ind.est_p();
    rec.card_p = active.size();
    rec.deg_p = active.degree();
    rec.supp_p = active.n_active_parameters();
    rec.solver_iterations = sol.iterations;
    rec.energy = rhs.data.dot(u.data);

    const bool stop = stopping_check(rec, config);
    MarkResult marks;
    if (stop) {
      rec.branch = "stop";
      result.status = rec.est <= config.tol ? RunStatus::reached_tolerance
                                            : RunStatus::iteration_cap;
    } else {
      marks = mark(ind, config.marking, space);
      if (marks.empty()) {
        rec.branch = "stalled";
        result.status = RunStatus::stalled;
      } else if (marks.parametric.empty()) {
        rec.branch = "spatial";
      } else if (marks.spatial_empty()) {
        rec.branch = "parametric";
      } else {
        rec.branch = "both";
      }
    }
    result.records.push_back(rec);
    if (on_iteration) {
      on_iteration(IterationState{space, u, rhs, ind, t0, table, cache, rec});
    }
    if (stop || marks.empty()) {
      result.space = space;
      result.solution = std::move(u);
      break;
    }

    // REFINE
    if (config.single_level) {
      MeshPtr shared = meshes[0];
      MarkedVertexSet joint;
      for (const auto& s : marks.spatial) joint.merge(s);
      if (!joint.empty()) {
        shared = std::make_shared<const Mesh>(refine(*shared, joint));
      }
      active = active.with(marks.parametric);
      meshes.assign(active.size(), shared);
    } else {
      std::vector<MeshPtr> refined(space.n_blocks());
      for (int i = 0; i < space.n_blocks(); ++i) {
        refined[i] = marks.spatial[i].empty()
                         ? space.mesh(i)
                         : std::make_shared<const Mesh>(
                               refine(*space.mesh(i), marks.spatial[i]));
      }
      const IndexSet old = active;
      active = active.with(marks.parametric);
      meshes.assign(active.size(), nullptr);
      for (int i = 0; i < active.size(); ++i) {
        const int j = old.position(active[i]);
        meshes[i] = j >= 0 ? refined[j] : t0;
      }
    }

    prev_space = std::move(space);
    prev_u = std::move(u);
    have_prev = true;

    std::vector<MeshPtr> live = meshes;
    live.push_back(t0);
    cache.retain(live);
  }
  return result;
}

/// Least-squares slope of log(est) vs log(dofs) over the final 60% of the
/// records.
inline double fit_rate(const std::vector<IterationRecord>& records) {
  if (records.size() < 5) throw Error("fit_rate: needs at least 5 records");
  const std::size_t start =
      static_cast<std::size_t>(std::floor(0.4 * records.size()));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = start; i < records.size(); ++i) {
    if (!(records[i].est > 0.0) || records[i].dofs <= 0) continue;
    const double x = std::log(static_cast<double>(records[i].dofs));
    const double y = std::log(records[i].est);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw Error("fit_rate: not enough usable records");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Fills the effectivity columns of a run against a reference run's final
/// energy: truerr = sqrt(ref_energy - energy_l), effectivity = est / truerr.
inline void apply_effectivity(std::vector<IterationRecord>& records,
                              double reference_energy) {
  for (auto& r : records) {
    const double diff = reference_energy - r.energy;
    if (diff > 0.0) {
      r.true_error = std::sqrt(diff);
      r.effectivity = r.est / r.true_error;
    }
  }
}

/// Reads records back from the CSV emitted by csv_row (energy is not part of
/// the format and is left at zero).
inline std::vector<IterationRecord> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("csv: empty input");
  if (line != kCsvHeader) throw Error("csv: unexpected header: " + line);
  std::vector<IterationRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) throw Error("csv: malformed row: " + line);
    IterationRecord r;
    r.iter = std::stoi(fields[0]);
    r.dofs = std::stoll(fields[1]);
    r.est = std::stod(fields[2]);
    r.est_x = std::stod(fields[3]);
    r.est_p = std::stod(fields[4]);
    r.card_p = std::stoi(fields[5]);
    r.deg_p = std::stoi(fields[6]);
    r.supp_p = std::stoi(fields[7]);
    r.solver_iterations = std::stoi(fields[8]);
    r.branch = fields[9];
    r.effectivity = std::stod(fields[10]);
    r.true_error = std::stod(fields[11]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mlsg

#endif  // MLSG_DRIVER_HPP
