#include <benchmark/benchmark.h>

#include "guardian/attack.hpp"
#include "guardian/filter.hpp"
#include "guardian/hj.hpp"
#include "guardian/nnv.hpp"
#include "guardian/systems.hpp"

using namespace guardian;

namespace {

const LandmarkSystem& landmark() {
  static const LandmarkSystem s;
  return s;
}

const MlpModel& landmark_net() {
  static const MlpModel m = MlpModel::random({12, 64, 64, 64, 4}, Activation::Relu, 1);
  return m;
}

const ValueGrid& scalar_grid() {
  static const ValueGrid g = [] {
    GridSpec s;
    s.axes = {GridAxis{-1.5, 1.5, 31}};
    return value_iteration(ScalarModel(), s);
  }();
  return g;
}

const ValueGrid& axis_grid() {
  static const ValueGrid g = [] {
    GridSpec s;
    s.axes = {GridAxis{-1, 11, 61}, GridAxis{-12, 12, 61}};
    return value_iteration(DoubleIntegratorAxis(), s);
  }();
  return g;
}

Vec landmark_obs() {
  Vec x(4);
  x << 3.0, 6.0, 1.0, -0.5;
  return landmark().observe(x);
}

}  // namespace

static void BM_Forward(benchmark::State& st) {
  const Vec y = landmark_obs();
  for (auto _ : st) benchmark::DoNotOptimize(forward(landmark_net(), y));
}
BENCHMARK(BM_Forward);

static void BM_CrownBounds(benchmark::State& st) {
  const Box dom = Box::centered(landmark_obs(), 0.05);
  CrownOptions opt;
  opt.backward_intermediate = st.range(0) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(concretize(crown_bounds(landmark_net(), dom, opt)));
}
BENCHMARK(BM_CrownBounds)->Arg(0)->Arg(1);

static void BM_UncertaintySet(benchmark::State& st) {
  const Vec y = landmark_obs();
  const Vec e = Vec::Constant(4, 0.05);
  for (auto _ : st) benchmark::DoNotOptimize(state_uncertainty_set(landmark_net(), y, 0.05, e));
}
BENCHMARK(BM_UncertaintySet);

static void BM_PgdAttack(benchmark::State& st) {
  const Vec y = landmark_obs();
  Vec target(4);
  target << 5, 5, 0, 0;
  AttackConfig cfg;
  cfg.eps = 0.05;
  cfg.n_iters = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(pgd_attack(landmark_net(), y, target, cfg));
}
BENCHMARK(BM_PgdAttack)->Arg(20);

static void BM_ValueIterationScalar(benchmark::State& st) {
  GridSpec s;
  s.axes = {GridAxis{-1.5, 1.5, static_cast<int>(st.range(0))}};
  for (auto _ : st) benchmark::DoNotOptimize(value_iteration(ScalarModel(), s));
}
BENCHMARK(BM_ValueIterationScalar)->Arg(31)->Arg(121)->Unit(benchmark::kMillisecond);

static void BM_ValueIterationAxis(benchmark::State& st) {
  GridSpec s;
  s.axes = {GridAxis{-1, 11, 31}, GridAxis{-12, 12, 31}};
  for (auto _ : st) benchmark::DoNotOptimize(value_iteration(DoubleIntegratorAxis(), s));
}
BENCHMARK(BM_ValueIterationAxis)->Unit(benchmark::kMillisecond);

static void BM_GuardianFilterScalar(benchmark::State& st) {
  const ScalarModel m;
  const auto nb = NeighborhoodSpec::from_grid(scalar_grid());
  const Box xbar(Vec::Constant(1, 0.85), Vec::Constant(1, 0.97));
  for (auto _ : st) benchmark::DoNotOptimize(guardian_filter(scalar_grid(), m, xbar, 2.0, nb));
}
BENCHMARK(BM_GuardianFilterScalar);

static void BM_GuardianFilterAxis(benchmark::State& st) {
  const DoubleIntegratorAxis m;
  auto nb = NeighborhoodSpec::from_grid(axis_grid());
  nb.lattice_density = static_cast<int>(st.range(0));
  Vec lo(2), hi(2);
  lo << 9.2, 1.5;
  hi << 9.5, 2.0;
  for (auto _ : st) benchmark::DoNotOptimize(guardian_filter(axis_grid(), m, Box(lo, hi), 5.0, nb));
}
BENCHMARK(BM_GuardianFilterAxis)->Arg(2)->Arg(5)->Arg(9);
BENCHMARK_MAIN();
