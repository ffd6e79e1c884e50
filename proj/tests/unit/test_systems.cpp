#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "guardian/error.hpp"
#include "guardian/rng.hpp"
#include "guardian/systems.hpp"

using namespace guardian;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Vec sample(Rng& rng, const Box& b) {
  Vec z(b.dim());
  for (int i = 0; i < b.dim(); ++i) z(i) = rng.uniform(b.lower(i), b.upper(i));
  return z;
}

LandmarkParams triangle() {
  LandmarkParams p;
  p.landmarks = {{0, 10}, {10, 0}, {3, 7}, {6, 6}};
  return p;
}

}  // namespace

TEST(Step, TaxiStraightRoll) {
  const TaxiSystem sys;
  const Vec x = vec({0.0, 3.0, 0.0});
  const Vec next = sys.step(x, Vec::Zero(1), Vec::Zero(3));
  EXPECT_DOUBLE_EQ(next(0), 0.5);
  EXPECT_DOUBLE_EQ(next(1), 3.0);
  EXPECT_DOUBLE_EQ(next(2), 0.0);
}

TEST(Step, ScalarDirectSubstitution) {
  const ScalarSystem sys;
  EXPECT_DOUBLE_EQ(sys.step(Vec::Zero(1), Vec::Ones(1), Vec::Zero(1))(0), 0.1);
}

TEST(Step, DoubleIntegratorHalfStep) {
  const DoubleIntegratorAxis axis;
  const Vec next = axis.step(vec({0.0, 1.0}), 5.0, Vec::Zero(2));
  EXPECT_DOUBLE_EQ(next(0), 0.125);
  EXPECT_DOUBLE_EQ(next(1), 1.5);
}

TEST(Step, OutOfBoundsControlRejected) {
  const ScalarSystem sys;
  EXPECT_THROW(sys.step(Vec::Zero(1), Vec::Constant(1, 2.5), Vec::Zero(1)), DomainError);
  const DoubleIntegratorAxis axis;
  EXPECT_THROW(axis.step(vec({0.0, 0.0}), 5.1, Vec::Zero(2)), DomainError);
}

TEST(Observe, LandmarkCentroidRangesEqual) {
  const LandmarkSystem sys;
  const Vec y = sys.snapshot(vec({5, 5, 0, 0}));
  for (int i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(y(i), y(0));
}

TEST(Observe, ScalarAtMinusOneIsZero) {
  const ScalarSystem sys;
  EXPECT_NEAR(sys.observe(Vec::Constant(1, -1.0))(0), 0.0, 1e-15);
}

TEST(Observe, ScalarOutsideDomainRejected) {
  const ScalarSystem sys;
  EXPECT_THROW(sys.observe(Vec::Constant(1, 1.0)), DomainError);
  EXPECT_THROW(sys.observe(Vec::Constant(1, -3.0)), DomainError);
}

TEST(Observe, ScalarEstimatorInvertsObservation) {
  const ScalarSystem sys;
  const auto est = ScalarSystem::exact_estimator();
  for (int k = 0; k < 100; ++k) {
    const double x = -2.9 + 3.8 * k / 99.0;
    EXPECT_NEAR(forward(est, sys.observe(Vec::Constant(1, x)))(0), x, 1e-9);
  }
}

TEST(Observe, LandmarkHistoryIsStackedSnapshots) {
  const LandmarkSystem sys;
  const Vec x = vec({3, 4, 1, -1});
  const auto hist = sys.initial_history(x);
  ASSERT_EQ(hist.size(), 2u);
  std::vector<Vec> states{x, hist[0], hist[1]};
  const Vec y = sys.observe(states, Vec::Zero(12));
  ASSERT_EQ(y.size(), 12);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(y.segment(4 * k, 4), sys.snapshot(states[k]));
}

TEST(Constraint, Values) {
  const ScalarSystem s;
  EXPECT_DOUBLE_EQ(s.constraint(Vec::Zero(1)), 1.0);
  EXPECT_DOUBLE_EQ(s.constraint(Vec::Constant(1, 1.0)), 0.0);
  EXPECT_DOUBLE_EQ(s.constraint(Vec::Constant(1, -1.0)), 0.0);
  const TaxiSystem t;
  EXPECT_DOUBLE_EQ(t.constraint(vec({0, 9.5, 0})), 0.5);
  const LandmarkSystem l;
  EXPECT_DOUBLE_EQ(l.constraint(vec({1, 7, 0, 0})), 1.0);
}

TEST(Nominal, Values) {
  const TaxiSystem t;
  EXPECT_EQ(t.nominal_control(vec({0, 0}), 0.0)(0), 0.0);
  const ScalarSystem s;
  EXPECT_DOUBLE_EQ(s.nominal_control(Vec::Zero(1), 0.0)(0), -0.95);
  EXPECT_DOUBLE_EQ(s.nominal_control(Vec::Zero(1), 10.0)(0), 0.95);
  const LandmarkSystem l;
  const Vec u = l.nominal_control(vec({-50, 50, 0, 0}), 0.0);
  EXPECT_LE(u.cwiseAbs().maxCoeff(), 5.0);
}

TEST(Nominal, TaxiClampedToRudderLimit) {
  const TaxiSystem t;
  const double u = t.nominal_control(vec({50, 0}), 0.0)(0);
  EXPECT_NEAR(TaxiSystem::control_to_rudder_deg(u), -12.0, 1e-12);
}

TEST(Invariants, ControlAffine) {
  Rng rng(1);
  std::vector<std::shared_ptr<const System>> systems{
      std::make_shared<ScalarSystem>(), std::make_shared<LandmarkSystem>(), std::make_shared<TaxiSystem>()};
  for (const auto& sys : systems) {
    const Box ub = sys->control_box();
    for (int k = 0; k < 100; ++k) {
      Vec x(sys->state_dim());
      for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(-0.9, 0.9);
      const Vec d = sample(rng, sys->disturbance_box());
      const Vec u0 = ub.lower(), u1 = ub.upper();
      const double lam = rng.uniform(0, 1);
      const Vec um = (1 - lam) * u0 + lam * u1;
      const Vec f0 = sys->step(x, u0, d), f1 = sys->step(x, u1, d), fm = sys->step(x, um, d);
      EXPECT_LE((fm - ((1 - lam) * f0 + lam * f1)).cwiseAbs().maxCoeff(), 1e-10) << sys->name();
    }
  }
}

TEST(Invariants, DisturbanceHullContainsNominal) {
  Rng rng(2);
  std::vector<std::shared_ptr<const System>> systems{
      std::make_shared<ScalarSystem>(), std::make_shared<LandmarkSystem>(), std::make_shared<TaxiSystem>()};
  for (const auto& sys : systems) {
    for (int k = 0; k < 50; ++k) {
      Vec x(sys->state_dim());
      for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(-0.9, 0.9);
      const Vec u = sample(rng, sys->control_box());
      const Vec f0 = sys->step(x, u, Vec::Zero(sys->disturbance_box().dim()));
      Vec lo = f0, hi = f0;
      for (const Vec& d : sys->disturbance_box().vertices()) {
        const Vec f = sys->step(x, u, d);
        lo = lo.cwiseMin(f);
        hi = hi.cwiseMax(f);
      }
      EXPECT_TRUE(Box(lo, hi).contains(f0));
      EXPECT_TRUE(sys->disturbance_box().contains(Vec::Zero(sys->disturbance_box().dim())));
    }
  }
}

TEST(Systems, ChannelsDecomposeLandmarkAxes) {
  const LandmarkSystem sys(triangle());
  const auto ch = sys.channels();
  ASSERT_EQ(ch.size(), 2u);
  EXPECT_EQ(ch[0].estimate_indices, (std::vector<int>{0, 2}));
  EXPECT_EQ(ch[1].estimate_indices, (std::vector<int>{1, 3}));
  EXPECT_EQ(ch[1].control_index, 1);
}

TEST(Systems, TaxiControlMapRoundTrip) {
  for (double deg : {-12.0, -3.0, 0.0, 7.5, 12.0})
    EXPECT_NEAR(TaxiSystem::control_to_rudder_deg(TaxiSystem::rudder_deg_to_control(deg)), deg, 1e-12);
}
