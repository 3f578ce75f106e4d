// SPDX-License-Identifier: Apache-2.0
//
// Benchmark harness for the adaptive multilevel stochastic Galerkin solver:
// runs the ML-A/ML-B/ML-C and SL-A/SL-B algorithm variants on the bundled
// problems, writes per-iteration CSV logs plus a run manifest, and provides
// an effectivity study against a lower-tolerance self-reference.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlsg/driver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "mlsg 1.0.0";

struct RunFlags {
  std::string problem = "benchmark-square";
  std::string alg = "ml-c";
  double theta = 0.5;
  double theta_x = 0.5;
  double theta_p = 0.5;
  double vartheta = 1.0;
  int mbar = -1;  // -1: problem default
  double tol = -1.0;
  double solver_tol = 1e-9;
  int max_iters = 100;
  std::string solver = "minres";
  std::string out = "runs";
  bool dump_meshes = false;
  int threads = 0;
  double ref_tol = -1.0;
};

void add_common_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--problem", f.problem,
                  "benchmark-square | benchmark-lshape | cookie");
  cmd->add_option("--alg", f.alg, "ml-a | ml-b | ml-c | sl-a | sl-b");
  cmd->add_option("--theta", f.theta, "combined marking parameter (ml-c)");
  cmd->add_option("--theta-x", f.theta_x, "spatial marking parameter");
  cmd->add_option("--theta-p", f.theta_p, "parametric marking parameter");
  cmd->add_option("--vartheta", f.vartheta,
                  "spatial/parametric branch weight (criteria A and B)");
  cmd->add_option("--mbar", f.mbar, "detail-set parameter reach");
  cmd->add_option("--tol", f.tol, "stopping tolerance for the estimator");
  cmd->add_option("--solver-tol", f.solver_tol, "Krylov solver tolerance");
  cmd->add_option("--max-iters", f.max_iters, "adaptive iteration cap");
  cmd->add_option("--solver", f.solver, "minres | cg");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--dump-meshes", f.dump_meshes,
                "write the final per-index meshes");
  cmd->add_option("--threads", f.threads, "worker thread cap (0 = hardware)");
}

mlsg::AdaptiveConfig make_config(const RunFlags& f) {
  mlsg::AdaptiveConfig config =
      mlsg::AdaptiveConfig::for_problem(mlsg::get_problem(f.problem));
  if (f.alg == "ml-a" || f.alg == "sl-a") {
    config.marking.criterion = mlsg::MarkCriterion::A;
  } else if (f.alg == "ml-b" || f.alg == "sl-b") {
    config.marking.criterion = mlsg::MarkCriterion::B;
  } else if (f.alg == "ml-c") {
    config.marking.criterion = mlsg::MarkCriterion::C;
  } else {
    throw mlsg::Error("unknown algorithm: " + f.alg);
  }
  config.single_level = f.alg.rfind("sl-", 0) == 0;
  config.marking.theta = f.theta;
  config.marking.theta_x = f.theta_x;
  config.marking.theta_p = f.theta_p;
  config.marking.vartheta = f.vartheta;
  if (f.mbar > 0) config.m_bar = f.mbar;
  if (f.tol > 0) config.tol = f.tol;
  config.solver.tol = f.solver_tol;
  config.max_iterations = f.max_iters;
  if (f.solver == "cg") {
    config.solver.method = mlsg::KrylovMethod::cg;
  } else if (f.solver != "minres") {
    throw mlsg::Error("unknown solver: " + f.solver);
  }
  if (f.threads > 0) mlsg::threading::set_worker_cap(f.threads);
  return config;
}

json config_json(const RunFlags& f, const mlsg::AdaptiveConfig& c) {
  json j;
  j["problem"] = f.problem;
  j["alg"] = f.alg;
  j["theta"] = c.marking.theta;
  j["theta_x"] = c.marking.theta_x;
  j["theta_p"] = c.marking.theta_p;
  j["vartheta"] = c.marking.vartheta;
  j["mbar"] = c.m_bar;
  j["tol"] = c.tol;
  j["solver"] = f.solver;
  j["solver_tol"] = c.solver.tol;
  j["max_iters"] = c.max_iterations;
  j["single_level"] = c.single_level;
  j["threads"] = f.threads;
  return j;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_csv(const fs::path& path,
               const std::vector<mlsg::IterationRecord>& records) {
  std::ofstream os(path);
  if (!os) throw mlsg::Error("cannot write " + path.string());
  os << mlsg::kCsvHeader << '\n';
  for (const auto& r : records) os << mlsg::csv_row(r) << '\n';
}

void write_manifest(const fs::path& path, const json& config,
                    const std::vector<std::string>& outputs,
                    const mlsg::AdaptiveResult& result) {
  json j;
  j["version"] = kVersion;
  j["timestamp"] = timestamp();
  j["config"] = config;
  j["outputs"] = outputs;
  j["status"] = result.status == mlsg::RunStatus::reached_tolerance
                    ? "reached-tolerance"
                : result.status == mlsg::RunStatus::iteration_cap
                    ? "iteration-cap"
                    : "stalled";
  j["iterations"] = result.records.size();
  j["max_solver_iterations"] = result.max_solver_iterations;
  j["deterministic"] =
      "no RNG; canonical assembly order; output independent of --threads";
  std::ofstream os(path);
  if (!os) throw mlsg::Error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void dump_final_meshes(const fs::path& dir, const std::string& stem,
                       const mlsg::AdaptiveResult& result) {
  for (int i = 0; i < result.space.n_blocks(); ++i) {
    const auto name =
        stem + "-mesh" + std::to_string(i) + "_" +
        result.space.index_set()[i].to_string(0) + ".txt";
    std::ofstream os(dir / name);
    result.space.mesh(i)->dump(os);
  }
}

int cmd_run(const RunFlags& f) {
  const mlsg::AdaptiveConfig config = make_config(f);
  fs::create_directories(f.out);
  const std::string stem = f.problem + "-" + f.alg;
  const fs::path csv_path = fs::path(f.out) / (stem + ".csv");

  std::ofstream live(csv_path);
  if (!live) throw mlsg::Error("cannot write " + csv_path.string());
  live << mlsg::kCsvHeader << '\n';
  const auto result = mlsg::run_adaptive(
      config, [&](const mlsg::IterationState& s) {
        live << mlsg::csv_row(s.record) << std::endl;  // flush per iteration
      });
  live.close();

  std::vector<std::string> outputs{csv_path.string()};
  if (f.dump_meshes) {
    dump_final_meshes(f.out, stem, result);
    outputs.push_back((fs::path(f.out) / (stem + "-mesh*.txt")).string());
  }
  write_manifest(fs::path(f.out) / (stem + ".manifest.json"),
                 config_json(f, config), outputs, result);

  const auto& last = result.records.back();
  std::cout << stem << ": " << result.records.size() << " iterations, est "
            << last.est << ", dofs " << last.dofs << ", max solver its "
            << result.max_solver_iterations << '\n';
  if (result.status != mlsg::RunStatus::reached_tolerance) {
    std::cerr << "run did not reach the tolerance ("
              << (result.status == mlsg::RunStatus::iteration_cap
                      ? "iteration cap"
                      : "stalled")
              << ")\n";
    return 2;
  }
  return 0;
}

int cmd_effectivity(const RunFlags& f) {
  mlsg::AdaptiveConfig config = make_config(f);
  const double ref_tol = f.ref_tol > 0 ? f.ref_tol : config.tol / 4.0;

  RunFlags ref_flags = f;
  ref_flags.alg = "ml-c";
  ref_flags.tol = ref_tol;
  mlsg::AdaptiveConfig ref_config = make_config(ref_flags);

  auto result = mlsg::run_adaptive(config);
  const auto reference = mlsg::run_adaptive(ref_config);
  const double ref_energy = reference.records.back().energy;
  mlsg::apply_effectivity(result.records, ref_energy);

  fs::create_directories(f.out);
  const std::string stem = f.problem + "-" + f.alg + "-effectivity";
  const fs::path csv_path = fs::path(f.out) / (stem + ".csv");
  write_csv(csv_path, result.records);
  json cfg = config_json(f, config);
  cfg["ref_tol"] = ref_tol;
  cfg["reference_energy"] = ref_energy;
  write_manifest(fs::path(f.out) / (stem + ".manifest.json"), cfg,
                 {csv_path.string()}, result);

  std::cout << stem << ": reference energy " << ref_energy << '\n';
  for (const auto& r : result.records) {
    if (!std::isnan(r.effectivity)) {
      std::cout << "  iter " << r.iter << " effectivity " << r.effectivity
                << '\n';
    }
  }
  const bool ok = result.status == mlsg::RunStatus::reached_tolerance &&
                  reference.status == mlsg::RunStatus::reached_tolerance;
  return ok ? 0 : 2;
}

int cmd_fit_rate(const std::string& csv) {
  std::ifstream is(csv);
  if (!is) throw mlsg::Error("cannot read " + csv);
  const auto records = mlsg::parse_csv(is);
  std::cout << mlsg::fit_rate(records) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive multilevel stochastic Galerkin FEM benchmark harness"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "run one adaptive algorithm");
  add_common_flags(run_cmd, run_flags);

  RunFlags eff_flags;
  auto* eff_cmd = app.add_subcommand(
      "effectivity",
      "run an algorithm and compare against a lower-tolerance ml-c reference");
  add_common_flags(eff_cmd, eff_flags);
  eff_cmd->add_option("--ref-tol", eff_flags.ref_tol,
                      "reference tolerance (default tol/4)");

  std::string fit_csv;
  auto* fit_cmd =
      app.add_subcommand("fit-rate", "least-squares convergence rate of a CSV");
  fit_cmd->add_option("--csv", fit_csv, "CSV produced by `run`")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (run_cmd->parsed()) return cmd_run(run_flags);
    if (eff_cmd->parsed()) return cmd_effectivity(eff_flags);
    if (fit_cmd->parsed()) return cmd_fit_rate(fit_csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
