#pragma once

#include "guardian/mlp.hpp"

namespace guardian {

struct AttackConfig {
  double eps = 0.0;
  /// Signed-gradient step; negative selects eps / 4.
  double step_alpha = -1.0;
  /// Projected iterations; negative selects 20.
  int n_iters = -1;

  double alpha() const { return step_alpha < 0.0 ? eps / 4.0 : step_alpha; }
  int iterations() const { return n_iters < 0 ? 20 : n_iters; }
};

/// Targeted l-infinity PGD: starting from zero, repeatedly step against the
/// sign of the MSE gradient toward `target` and clamp into [-eps, eps].
Vec pgd_attack(const MlpModel& model, const Vec& nominal_obs, const Vec& target,
               const AttackConfig& cfg);

struct AttackReport {
  Vec perturbation;
  double pre_distance = 0.0;   // ||pi(y) - target||
  double post_distance = 0.0;  // ||pi(y + dy) - target||
};

AttackReport attack_effectiveness(const MlpModel& model, const Vec& obs, const Vec& target,
                                  const AttackConfig& cfg);

}  // namespace guardian
