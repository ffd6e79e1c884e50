#include "guardian/attack.hpp"

#include <algorithm>

#include "guardian/error.hpp"

namespace guardian {

Vec pgd_attack(const MlpModel& model, const Vec& nominal_obs, const Vec& target,
               const AttackConfig& cfg) {
  if (!(cfg.eps >= 0.0)) throw DomainError("pgd_attack: eps must be >= 0");
  if (nominal_obs.size() != model.input_dim()) {
    throw DimensionError("pgd_attack: observation length mismatch");
  }
  if (target.size() != model.output_dim()) throw DimensionError("pgd_attack: target length mismatch");
  Vec dy = Vec::Zero(nominal_obs.size());
  if (cfg.eps == 0.0) return dy;
  const double a = cfg.alpha();
  for (int k = 0; k < cfg.iterations(); ++k) {
    const Vec g = grad_input(model, nominal_obs + dy, target);
    for (Eigen::Index i = 0; i < dy.size(); ++i) {
      const double s = g(i) > 0.0 ? 1.0 : (g(i) < 0.0 ? -1.0 : 0.0);
      dy(i) = std::clamp(dy(i) - a * s, -cfg.eps, cfg.eps);
    }
  }
  return dy;
}

AttackReport attack_effectiveness(const MlpModel& model, const Vec& obs, const Vec& target,
                                  const AttackConfig& cfg) {
  AttackReport r;
  r.perturbation = pgd_attack(model, obs, target, cfg);
  r.pre_distance = (forward(model, obs) - target).norm();
  r.post_distance = (forward(model, obs + r.perturbation) - target).norm();
  return r;
}

}  // namespace guardian
