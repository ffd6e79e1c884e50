#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "guardian/attack.hpp"
#include "guardian/cbf.hpp"
#include "guardian/config.hpp"
#include "guardian/hj.hpp"
#include "guardian/mlp.hpp"
#include "guardian/systems.hpp"

namespace guardian {

enum class FilterKind { None, HjNominal, Guardian, Cbf };
enum class AttackKind { None, Offset, Pgd };
enum class DisturbanceMode { Uniform, Zero };

std::string to_string(FilterKind f);
/// "none", "hj-nominal", "guardian", "cbf:<variant>".
void parse_filter(const std::string& s, FilterKind& kind, CbfVariant& variant);

/// Architecture and training recipe for a learned estimator.
struct EstimatorRecipe {
  std::vector<int> hidden = {64, 64, 64};
  Activation activation = Activation::Relu;
  int samples = 20000;
  int validation = 2000;
  TrainConfig train;
  /// e_x = safety_factor * held-out max absolute error per output.
  double safety_factor = 1.25;
  /// Landmark data: velocity range and position margin beyond the region.
  double velocity_range = 4.0;
  double position_margin = 1.0;
  /// Taxi data: sampled cte and heading ranges.
  double cte_range = 12.0;
  double he_range = 0.6;
};

struct Scenario {
  std::string name = "scenario";
  std::string system = "scalar";
  ScalarParams scalar;
  LandmarkParams landmark;
  TaxiParams taxi;

  /// "exact" (scalar system only) or "mlp".
  std::string estimator_kind = "exact";
  std::string model_path;
  /// Estimator error bound; empty means "read from the model's sidecar".
  Vec est_err;
  EstimatorRecipe recipe;

  AttackKind attack_kind = AttackKind::None;
  AttackConfig attack;
  /// Constant observation offset (offset attacks).
  Vec attack_offset;
  /// PGD target in estimate coordinates.
  Vec attack_target;

  FilterKind filter = FilterKind::None;
  CbfConfig cbf;
  int lattice_density = 5;

  GridSpec grid;
  double hj_tol = 1e-4;
  int hj_max_iters = 500;
  std::string grid_path;

  int horizon = 150;
  Vec x0;
  double t0 = 0.0;
  std::uint64_t seed = 0;
  DisturbanceMode disturbance = DisturbanceMode::Uniform;
  int mc_rollouts = 10000;
  /// Batch experiments: rollouts with random starts on the reference.
  int rollouts = 20;
  double initial_spread = 0.2;

  std::string config_hash;
};

Scenario scenario_from_config(const Config& cfg);
Scenario load_scenario(const std::string& path);

std::shared_ptr<const System> make_system(const Scenario& s);

/// Sidecar of a trained estimator: measured error statistics.
struct EstimatorMeta {
  Vec est_err;
  Vec val_max_error;
  Vec val_rmse;
  double final_loss = 0.0;
};
void save_estimator_meta(const EstimatorMeta& m, const std::string& model_path);
EstimatorMeta load_estimator_meta(const std::string& model_path);

/// Everything a closed-loop run needs, resolved from a scenario.
struct Assets {
  std::shared_ptr<const System> system;
  MlpModel estimator;
  Vec est_err;
  /// Value function shared by every filter channel of the system.
  std::shared_ptr<const ValueGrid> grid;
  std::vector<FilterChannel> channels;
};

/// Loads the estimator (or builds the exact scalar one) and loads the value
/// grid from grid_path, solving and caching it if the file is missing.
Assets prepare_assets(const Scenario& s);
/// As above with an in-memory estimator/grid (either may be null to load).
Assets prepare_assets(const Scenario& s, const MlpModel* estimator, const Vec* est_err,
                      std::shared_ptr<const ValueGrid> grid);

/// Solves the HJ value function for the scenario's filter model.
ValueGrid solve_scenario_grid(const Scenario& s);

}  // namespace guardian
