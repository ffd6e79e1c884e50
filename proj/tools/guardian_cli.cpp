#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "guardian/error.hpp"
#include "guardian/experiments.hpp"
#include "guardian/hj.hpp"
#include "guardian/mlp.hpp"
#include "guardian/rollout.hpp"
#include "guardian/scenario.hpp"
#include "guardian/sensitivity.hpp"

namespace fs = std::filesystem;
using namespace guardian;

namespace {

struct Globals {
  std::optional<long long> seed;
  std::string out_dir = ".";
};

struct Common {
  std::string config;
  std::string filter;
  double eps = -1.0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--filter", c.filter, "override filter: none, hj-nominal, guardian, cbf:<mr|r|r-qp>");
  cmd->add_option("--eps", c.eps, "override attack radius");
}

Scenario load(const Common& c, const Globals& g) {
  Scenario s = load_scenario(c.config);
  if (g.seed) s.seed = static_cast<std::uint64_t>(*g.seed);
  if (!c.filter.empty()) parse_filter(c.filter, s.filter, s.cbf.variant);
  if (c.eps >= 0.0) {
    s.attack.eps = c.eps;
    if (s.attack_kind == AttackKind::Offset)
      for (Eigen::Index i = 0; i < s.attack_offset.size(); ++i)
        s.attack_offset[i] = s.attack_offset[i] < 0 ? -c.eps : c.eps;
  }
  return s;
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

std::string filter_tag(const Scenario& s) {
  std::string f = to_string(s.filter);
  if (s.filter == FilterKind::Cbf) f = "cbf-" + to_string(s.cbf.variant);
  return f;
}

void print_phase(const char* name, const PhaseStats& p) {
  if (p.count == 0) {
    std::printf("  %-7s absent\n", name);
    return;
  }
  std::printf("  %-7s mean %.6f s  std %.6f s  (%d steps)\n", name, p.mean, p.stddev, p.count);
}

// Audits for an attacked closed-loop run: X̄ containment and, for guardian,
// staying inside the constraint set.
bool audit(const Scenario& s, const Assets& a, const TrajectoryLog& log) {
  bool ok = true;
  const int miss = log.containment_failures(*a.system);
  std::printf("containment failures: %d\n", miss);
  if (miss > 0) ok = false;
  std::printf("min constraint: %.6g\n", log.min_constraint());
  if (s.filter == FilterKind::Guardian && log.left_safe_set()) ok = false;
  std::printf("active steps: %d  infeasible steps: %d\n", log.active_steps(), log.infeasible_steps());
  return ok;
}

int cmd_solve(const Common& c, const Globals& g, const std::string& out, const std::string& system) {
  const Scenario s = load(c, g);
  if (!system.empty() && system != s.system)
    throw ParseError("--system '" + system + "' does not match config system '" + s.system + "'");
  const auto t0 = std::chrono::steady_clock::now();
  const ValueGrid grid = solve_scenario_grid(s);
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string path = out.empty() ? out_path(g, s.name + ".grid") : out;
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  save_grid(grid, path);
  std::printf("grid %s: %zu nodes, %d iterations, residual %.3g, converged %s, %.2f s\n", path.c_str(),
              grid.spec().node_count(), grid.iterations, grid.residual, grid.converged ? "yes" : "no", sec);
  return grid.converged ? 0 : 1;
}

int cmd_train(const Common& c, const Globals& g, const std::string& out) {
  const Scenario s = load(c, g);
  const auto sys = make_system(s);
  const auto t0 = std::chrono::steady_clock::now();
  const TrainedEstimator t = train_estimator(*sys, s.recipe, s.recipe.train.seed);
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string path = out.empty() ? (s.model_path.empty() ? out_path(g, s.name + ".json") : s.model_path) : out;
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  save_model(t.model, path);
  save_estimator_meta(t.meta, path);
  std::printf("model %s: loss %.6g -> %.6g over %d epochs, %.1f s\n", path.c_str(), t.report.initial_loss,
              t.report.final_loss, t.report.epochs_run, sec);
  for (Eigen::Index i = 0; i < t.meta.est_err.size(); ++i)
    std::printf("  output %ld: val max %.6g  val rmse %.6g  est_err %.6g\n", static_cast<long>(i),
                t.meta.val_max_error[i], t.meta.val_rmse[i], t.meta.est_err[i]);
  return t.report.improved ? 0 : 1;
}

int cmd_batch(const Scenario& s, const Assets& a, int n) {
  const BatchResult b = run_reference_batch(s, a, n);
  std::printf("rollouts %d  exits %d  mean estimation error %.6g  worst constraint %.6g\n", b.rollouts, b.exits,
              b.mean_error, b.worst_constraint);
  std::printf("containment failures %d  active steps %d  uncertainty-bound failures %d\n",
              b.containment_failures, b.active_steps, b.asm2_failures);
  const bool ok = b.containment_failures == 0 && (s.filter != FilterKind::Guardian || b.exits == 0);
  return ok ? 0 : 1;
}

int cmd_run(const Common& c, const Globals& g, const std::string& out, int batch) {
  const Scenario s = load(c, g);
  const Assets a = prepare_assets(s);
  if (batch > 0) return cmd_batch(s, a, batch);
  const TrajectoryLog log = run_scenario(s, a);
  const std::string path = out.empty() ? out_path(g, s.name + "_" + filter_tag(s) + ".csv") : out;
  write_trajectory_csv(log, *a.system, path);
  std::printf("trajectory %s (%zu rows)\n", path.c_str(), log.steps.size());
  return audit(s, a, log) ? 0 : 1;
}

int cmd_mc(const Common& c, const Globals& g, int n) {
  Scenario s = load(c, g);
  if (s.filter != FilterKind::Guardian) s.filter = FilterKind::Guardian;
  const Assets a = prepare_assets(s);
  const TrajectoryLog ref = run_scenario(s, a);
  const int rollouts = n >= 0 ? n : s.mc_rollouts;
  const McSummary mc = monte_carlo_rollouts(s, a, ref, rollouts);
  std::printf("reference min constraint %.6g\n", ref.min_constraint());
  std::printf("rollouts %d  violations %d  fraction %.6g  steps with unsafe X̄ %d\n", mc.rollouts,
              mc.violations, mc.fraction, mc.steps_xbar_unsafe);
  return mc.violations == 0 && !ref.left_safe_set() ? 0 : 1;
}

int cmd_heatmap(const Common& c, const Globals& g, const std::string& metric, int cells) {
  const Scenario s = load(c, g);
  const auto sys = std::dynamic_pointer_cast<const LandmarkSystem>(make_system(s));
  if (!sys) throw ParseError("heatmap needs a landmark scenario");
  const double eps = s.attack.eps;
  const GridSpec grid = heatmap_grid(*sys, cells);
  std::optional<ScalarField> fim, vol;
  if (metric == "fim" || metric == "both") {
    fim = fim_heatmap(*sys, grid, eps);
    const std::string p = out_path(g, s.name + "_fim_kappa.csv");
    write_field_csv(*fim, p, s.config_hash);
    std::printf("wrote %s\n", p.c_str());
  }
  if (metric == "nnv" || metric == "both") {
    const Assets a = prepare_assets(s);
    vol = nnv_heatmap(a.estimator, *sys, grid, eps);
    const std::string p = out_path(g, s.name + "_nnv_volume.csv");
    write_field_csv(*vol, p, s.config_hash);
    std::printf("wrote %s\n", p.c_str());
  }
  if (fim && vol) std::printf("spearman(fim_kappa, nnv_volume) = %.4f\n", spearman(fim->values, vol->values));
  return 0;
}

int cmd_check(const Common& c, const Globals& g) {
  Scenario s = load(c, g);
  s.filter = FilterKind::Guardian;
  const Assets a = prepare_assets(s);
  const TrajectoryLog log = run_scenario(s, a);
  int active = 0, asm2_fail = 0, cone_empty = 0;
  for (const auto& r : log.steps) {
    if (!r.active) continue;
    ++active;
    if (!r.asm2_ok) ++asm2_fail;
    if (r.cone.find("empty") != std::string::npos) ++cone_empty;
  }
  std::printf("active steps %d  uncertainty-bound failures %d  empty-cone steps %d\n", active, asm2_fail,
              cone_empty);
  const bool safe = !log.left_safe_set();
  std::printf("min constraint %.6g (%s)\n", log.min_constraint(), safe ? "safe" : "unsafe");
  return asm2_fail == 0 && cone_empty == 0 && safe ? 0 : 1;
}

int cmd_timing(const Common& c, const Globals& g) {
  const Scenario s = load(c, g);
  const Assets a = prepare_assets(s);
  const TrajectoryLog log = run_scenario(s, a);
  const TimingReport t = timing_report(log);
  std::printf("timing %s (%s)\n", s.name.c_str(), filter_tag(s).c_str());
  print_phase("total", t.total);
  print_phase("attack", t.attack);
  print_phase("nnv", t.nnv);
  print_phase("filter", t.filter);
  print_phase("other", t.other);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guardian: uncertainty-aware HJ safety filtering"};
  app.require_subcommand(1);
  Globals g;
  long long seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "override the scenario seed");
  app.add_option("--out-dir", g.out_dir, "directory for outputs");

  Common c_solve, c_train, c_run, c_mc, c_heat, c_check, c_timing;
  std::string solve_out, solve_system, train_out, run_out, metric = "both";
  int mc_n = -1, cells = 20, batch = 0;

  auto* solve = app.add_subcommand("solve-hj", "solve the value function and write a grid file");
  add_common(solve, c_solve);
  solve->add_option("--out", solve_out, "grid file");
  solve->add_option("--system", solve_system, "expected system name");

  auto* trn = app.add_subcommand("train-estimator", "train the scenario's estimator");
  add_common(trn, c_train);
  trn->add_option("--out", train_out, "model file (default: the config's estimator.model)");

  auto* run = app.add_subcommand("run-scenario", "closed-loop run; writes the trajectory CSV");
  add_common(run, c_run);
  run->add_option("--out", run_out, "trajectory CSV");
  run->add_option("--batch", batch, "landmark only: this many rollouts from random points of the reference");

  auto* mc = app.add_subcommand("mc-validate", "projected Monte-Carlo rollouts along a guardian run");
  add_common(mc, c_mc);
  mc->add_option("-n,--rollouts", mc_n, "rollout count (default: scenario.mc_rollouts)");

  auto* heat = app.add_subcommand("heatmap", "FIM condition number and NNV volume fields");
  add_common(heat, c_heat);
  heat->add_option("--metric", metric, "fim, nnv or both")->check(CLI::IsMember({"fim", "nnv", "both"}));
  heat->add_option("--cells", cells, "cells per axis")->check(CLI::PositiveNumber);

  auto* check = app.add_subcommand("check-assumptions", "cone and uncertainty-bound checks along a guardian run");
  add_common(check, c_check);

  auto* timing = app.add_subcommand("timing", "per-step phase timing of a run");
  add_common(timing, c_timing);

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;

  try {
    if (*solve) return cmd_solve(c_solve, g, solve_out, solve_system);
    if (*trn) return cmd_train(c_train, g, train_out);
    if (*run) return cmd_run(c_run, g, run_out, batch);
    if (*mc) return cmd_mc(c_mc, g, mc_n);
    if (*heat) return cmd_heatmap(c_heat, g, metric, cells);
    if (*check) return cmd_check(c_check, g);
    if (*timing) return cmd_timing(c_timing, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
