#include "guardian/experiments.hpp"

#include <cmath>
#include <numbers>

#include "guardian/error.hpp"
#include "guardian/rng.hpp"

namespace guardian {

Dataset landmark_dataset(const LandmarkSystem& sys, const EstimatorRecipe& r, int n, std::uint64_t seed) {
  const auto& p = sys.params();
  Rng rng(seed);
  Dataset d;
  d.inputs.resize(n, sys.observation_dim());
  d.targets.resize(n, 4);
  const double lo = p.region_lo - r.position_margin, hi = p.region_hi + r.position_margin;
  for (int i = 0; i < n; ++i) {
    Vec x(4);
    x << rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(-r.velocity_range, r.velocity_range),
        rng.uniform(-r.velocity_range, r.velocity_range);
    std::vector<Vec> states{x};
    Vec cur = x;
    for (int k = 1; k < sys.history_length(); ++k) {
      const double ux = rng.uniform(-p.u_max, p.u_max), uy = rng.uniform(-p.u_max, p.u_max);
      Vec prev(4);
      prev(2) = cur(2) - p.dt * ux;
      prev(3) = cur(3) - p.dt * uy;
      prev(0) = cur(0) - p.dt * (prev(2) + 0.5 * p.dt * ux);
      prev(1) = cur(1) - p.dt * (prev(3) + 0.5 * p.dt * uy);
      states.push_back(prev);
      cur = prev;
    }
    d.inputs.row(i) = sys.observe(states, Vec::Zero(sys.observation_dim())).transpose();
    d.targets.row(i) = x.transpose();
  }
  return d;
}

Dataset taxi_dataset(const TaxiSystem& sys, const EstimatorRecipe& r, int n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.inputs.resize(n, sys.observation_dim());
  d.targets.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    Vec x(3);
    x << 0.0, rng.uniform(-r.cte_range, r.cte_range), rng.uniform(-r.he_range, r.he_range);
    d.inputs.row(i) = sys.observe(x).transpose();
    d.targets.row(i) = sys.estimate_of(x).transpose();
  }
  return d;
}

Dataset make_dataset(const System& sys, const EstimatorRecipe& r, int n, std::uint64_t seed) {
  if (const auto* l = dynamic_cast<const LandmarkSystem*>(&sys)) return landmark_dataset(*l, r, n, seed);
  if (const auto* t = dynamic_cast<const TaxiSystem*>(&sys)) return taxi_dataset(*t, r, n, seed);
  throw DomainError("make_dataset: no learned estimator for system '" + sys.name() + "'");
}

TrainedEstimator train_estimator(const System& sys, const EstimatorRecipe& r, std::uint64_t seed) {
  const Dataset train_set = make_dataset(sys, r, r.samples, substream_seed(seed, Stream::Dataset, 0));
  const Dataset val_set = make_dataset(sys, r, r.validation, substream_seed(seed, Stream::Dataset, 1));

  const Vec in_mean = train_set.inputs.colwise().mean().transpose();
  const Vec out_mean = train_set.targets.colwise().mean().transpose();
  auto col_std = [](const Mat& m, const Vec& mean) {
    Vec s(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      s(j) = std::sqrt((m.col(j).array() - mean(j)).square().mean());
      if (!(s(j) > 1e-12)) s(j) = 1.0;
    }
    return s;
  };
  const Vec in_std = col_std(train_set.inputs, in_mean);
  const Vec out_std = col_std(train_set.targets, out_mean);
  Dataset norm;
  norm.inputs = (train_set.inputs.rowwise() - in_mean.transpose()).array().rowwise() / in_std.transpose().array();
  norm.targets = (train_set.targets.rowwise() - out_mean.transpose()).array().rowwise() / out_std.transpose().array();

  std::vector<int> dims{sys.observation_dim()};
  for (int h : r.hidden) dims.push_back(h);
  dims.push_back(sys.estimate_dim());
  const MlpModel init = MlpModel::random(dims, r.activation, substream_seed(seed, Stream::Training, 0));
  TrainConfig cfg = r.train;
  cfg.seed = substream_seed(seed, Stream::Training, 1);
  TrainedEstimator out;
  const MlpModel trained = train(init, norm, cfg, &out.report);
  out.model = fold_normalization(trained, in_mean, in_std, out_mean, out_std);

  const Mat pred = forward_batch(out.model, val_set.inputs.transpose()).transpose();
  const Mat err = (pred - val_set.targets).cwiseAbs();
  out.meta.val_max_error = err.colwise().maxCoeff().transpose();
  out.meta.val_rmse = err.array().square().colwise().mean().sqrt().matrix().transpose();
  out.meta.est_err = r.safety_factor * out.meta.val_max_error;
  out.meta.final_loss = out.report.final_loss;
  return out;
}

BatchResult run_reference_batch(const Scenario& s, const Assets& a, int n) {
  const auto* sys = dynamic_cast<const LandmarkSystem*>(a.system.get());
  if (!sys) throw DomainError("run_reference_batch: landmark system required");
  BatchResult res;
  res.rollouts = n;
  res.worst_constraint = std::numeric_limits<double>::infinity();
  double err_sum = 0.0;
  const double period = 2.0 * std::numbers::pi / sys->params().omega;
  for (int i = 0; i < n; ++i) {
    Rng rng(substream_seed(s.seed, Stream::Initial, static_cast<std::uint64_t>(i)));
    Scenario si = s;
    si.t0 = rng.uniform(0.0, period);
    si.x0 = sys->reference_state(si.t0);
    for (int k = 0; k < 4; ++k) si.x0(k) += rng.uniform(-s.initial_spread, s.initial_spread);
    si.seed = substream_seed(s.seed, Stream::Initial, 1000000 + static_cast<std::uint64_t>(i));
    const TrajectoryLog log = run_scenario(si, a);
    const double mc = log.min_constraint();
    res.worst_constraint = std::min(res.worst_constraint, mc);
    if (mc < 0.0) ++res.exits;
    err_sum += log.mean_estimation_error({0, 1});
    res.containment_failures += log.containment_failures(*sys);
    res.active_steps += log.active_steps();
    for (const auto& r : log.steps) res.asm2_failures += (r.active && !r.asm2_ok) ? 1 : 0;
  }
  res.mean_error = n ? err_sum / n : 0.0;
  return res;
}

}  // namespace guardian
