#pragma once

#include <string>
#include <vector>

#include "guardian/box.hpp"
#include "guardian/filter.hpp"
#include "guardian/scenario.hpp"

namespace guardian {

struct StepRecord {
  int step = 0;
  double time = 0.0;
  Vec x;        // true state
  Vec y;        // clean observation
  double perturbation_norm = 0.0;  // ||dy||_inf
  Vec x_hat;    // estimate from the perturbed observation
  Box xbar;     // uncertainty set (estimate coordinates); empty if not computed
  bool has_xbar = false;
  Vec u_nominal;
  Vec u_applied;
  bool active = false;         // any filter channel intervened
  double phi_nominal = 0.0;    // min over channels
  double phi_applied = 0.0;
  double constraint = 0.0;     // c(x)
  double value = 0.0;          // min over channels of V at the true state
  bool asm2_ok = true;
  std::string cone;            // per-channel cones joined by '|'
  bool infeasible = false;     // CBF constraint set empty
  double sec_attack = -1.0;    // phase timings; < 0 if the phase did not run
  double sec_nnv = -1.0;
  double sec_filter = -1.0;
  double sec_other = 0.0;
  double sec_total = 0.0;
};

struct TrajectoryLog {
  std::string scenario;
  std::string system;
  std::string filter;
  double eps = 0.0;
  std::vector<StepRecord> steps;

  double min_constraint() const;
  bool left_safe_set() const { return min_constraint() < 0.0; }
  int infeasible_steps() const;
  int active_steps() const;
  /// Steps at which the true estimate-space state lies outside xbar (tol 1e-9).
  int containment_failures(const System& sys) const;
  /// Mean of |x_i - ref| over rows with time in [t_lo, t_hi].
  double tracking_error(int index, double ref, double t_lo, double t_hi) const;
  /// Mean of ||x_hat[idx] - x[idx]||_2 over all steps.
  double mean_estimation_error(const std::vector<int>& idx) const;
};

/// observe -> attack -> estimate -> uncertainty set -> filter -> clamp -> step.
/// Deterministic given the scenario seed. Errors are rethrown with the step index.
TrajectoryLog run_scenario(const Scenario& s, const Assets& a);

/// Documented column order (also written as a '#' header line).
std::vector<std::string> csv_columns(const System& sys);
void write_trajectory_csv(const TrajectoryLog& log, const System& sys, const std::string& path);

/// Per-coordinate clamp onto the box.
Vec project_into_set(const Vec& x, const Box& xbar);

struct McSummary {
  int rollouts = 0;
  int violations = 0;
  double fraction = 0.0;
  /// Steps of the reference run whose uncertainty set leaves the safe set
  /// (min of V over its lattice < 0).
  int steps_xbar_unsafe = 0;
};

/// Projected rollouts along a reference run's uncertainty sets and controls:
/// x'_0 ~ U(xbar_0), x'_{t+1} = P_{xbar_{t+1}}(f(x'_t, u_t, d_t)), d_t ~ U(D),
/// per filter channel. A rollout violates if any channel constraint is < 0.
McSummary monte_carlo_rollouts(const Scenario& s, const Assets& a, const TrajectoryLog& ref, int n);

struct PhaseStats {
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct TimingReport {
  PhaseStats total;
  PhaseStats attack;
  PhaseStats nnv;
  PhaseStats filter;
  PhaseStats other;
  bool empty() const { return total.count == 0; }
};

TimingReport timing_report(const TrajectoryLog& log);

}  // namespace guardian
