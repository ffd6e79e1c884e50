#pragma once

#include <cstdint>
#include <vector>

#include "guardian/mlp.hpp"
#include "guardian/rollout.hpp"
#include "guardian/scenario.hpp"
#include "guardian/systems.hpp"

namespace guardian {

/// Landmark data: positions uniform over the region (plus margin),
/// velocities uniform in +-velocity_range, and the two earlier snapshots
/// reconstructed by integrating backward under random admissible controls.
Dataset landmark_dataset(const LandmarkSystem& sys, const EstimatorRecipe& r, int n, std::uint64_t seed);

/// Taxi data: (cte, he) uniform over the recipe ranges; targets (cte, he).
Dataset taxi_dataset(const TaxiSystem& sys, const EstimatorRecipe& r, int n, std::uint64_t seed);

Dataset make_dataset(const System& sys, const EstimatorRecipe& r, int n, std::uint64_t seed);

struct TrainedEstimator {
  MlpModel model;
  EstimatorMeta meta;
  TrainReport report;
};

/// Trains on standardized data, folds the standardization into the network
/// and sets est_err = safety_factor * max held-out error per output.
TrainedEstimator train_estimator(const System& sys, const EstimatorRecipe& r, std::uint64_t seed);

struct BatchResult {
  int rollouts = 0;
  int exits = 0;
  double mean_error = 0.0;       // mean position estimation error over all steps
  double worst_constraint = 0.0; // min over rollouts of min_t c(x_t)
  int containment_failures = 0;
  int asm2_failures = 0;         // active steps with the runtime check false
  int active_steps = 0;
};

/// Rollouts of a landmark scenario from random points of the reference
/// circle (phase uniform, state perturbed by +-initial_spread).
BatchResult run_reference_batch(const Scenario& s, const Assets& a, int n);

}  // namespace guardian
