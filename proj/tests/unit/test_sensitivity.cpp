#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "guardian/error.hpp"
#include "guardian/rng.hpp"
#include "guardian/sensitivity.hpp"

using namespace guardian;

namespace {

using Pts = std::vector<Eigen::Vector2d>;

Pts square() { return {{0, 0}, {10, 0}, {10, 10}, {0, 10}}; }
Pts triangle() { return {{0, 10}, {10, 0}, {3, 7}, {6, 6}}; }

/// Condition number of J^T J with J the finite-difference Jacobian of the ranges.
double kappa_fd(const Pts& l, const Eigen::Vector2d& p) {
  const double h = 1e-6;
  Eigen::MatrixXd j(l.size(), 2);
  for (std::size_t i = 0; i < l.size(); ++i) {
    for (int a = 0; a < 2; ++a) {
      Eigen::Vector2d pp = p, pm = p;
      pp(a) += h;
      pm(a) -= h;
      j(static_cast<Eigen::Index>(i), a) = ((pp - l[i]).norm() - (pm - l[i]).norm()) / (2 * h);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(j.transpose() * j);
  return es.eigenvalues()(1) / es.eigenvalues()(0);
}

}  // namespace

TEST(Fim, SquareCentroidIsIsotropic) {
  const Eigen::Matrix2d m = fim(square(), {5, 5}, 0.5);
  EXPECT_NEAR(m(0, 0), 2.0 / 0.25, 1e-12);
  EXPECT_NEAR(m(1, 1), 2.0 / 0.25, 1e-12);
  EXPECT_NEAR(m(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(fim_condition(square(), {5, 5}, 0.5), 1.0, 1e-12);
}

TEST(Fim, CollinearIsRankOne) {
  const Pts l{{0, 0}, {4, 0}, {9, 0}};
  EXPECT_TRUE(std::isinf(fim_condition(l, {2, 0}, 0.1)));
}

TEST(Fim, ConditionMatchesFiniteDifferenceJacobian) {
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector2d p(rng.uniform(0.3, 9.7), rng.uniform(0.3, 9.7));
    for (const auto& l : {square(), triangle()}) {
      const double ref = kappa_fd(l, p);
      EXPECT_NEAR(fim_condition(l, p, 0.05), ref, 1e-5 * ref);
    }
  }
}

TEST(Fim, ConditionIndependentOfEps) {
  for (double eps : {0.01, 0.1, 3.0})
    EXPECT_NEAR(fim_condition(triangle(), {2, 3}, eps), fim_condition(triangle(), {2, 3}, 1.0), 1e-9);
}

TEST(Fim, PositiveSemidefinite) {
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector2d p(rng.uniform(-2, 12), rng.uniform(-2, 12));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(fim(triangle(), p, 0.05));
    EXPECT_GE(es.eigenvalues()(0), -1e-9);
  }
}

TEST(Fim, TriangleDiagonalIsIllConditioned) {
  const double diag = fim_condition(triangle(), {5, 5}, 0.05);
  EXPECT_GT(diag, fim_condition(triangle(), {2, 2}, 0.05));
  EXPECT_GT(diag, fim_condition(square(), {5, 5}, 0.05));
}

TEST(Fim, Errors) {
  EXPECT_THROW(fim(square(), {10, 10}, 0.1), DomainError);
  EXPECT_THROW(fim(square(), {5, 5}, 0.0), DomainError);
}

TEST(NnvVolume, ZeroEpsIsZeroAndGrowsWithEps) {
  const LandmarkSystem sys;
  const auto model = MlpModel::random({sys.observation_dim(), 16, 16, 4}, Activation::Tanh, 3);
  const Vec x = heatmap_state(sys, {3, 6});
  EXPECT_NEAR(nnv_volume(model, sys, x, 0.0), 0.0, 1e-12);
  double prev = 0.0;
  for (double eps : {0.01, 0.02, 0.05, 0.1}) {
    const double v = nnv_volume(model, sys, x, eps);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_GT(prev, 0.0);
}

TEST(Heatmap, GridAndStates) {
  const LandmarkSystem sys;
  const GridSpec g = heatmap_grid(sys, 20);
  EXPECT_EQ(g.node_count(), 400u);
  EXPECT_NEAR(g.axes[0].lo, 0.25, 1e-15);
  EXPECT_NEAR(g.axes[0].hi, 9.75, 1e-15);
  const Vec x = heatmap_state(sys, {9.5, 5});
  EXPECT_NEAR(x(2), 0.0, 1e-12);
  EXPECT_NEAR(x(3), 4.5 * 0.5, 1e-12);
  EXPECT_THROW(heatmap_grid(sys, 1), DomainError);
}

TEST(Heatmap, CsvHasOneRowPerCell) {
  LandmarkParams p;
  p.landmarks = triangle();
  const LandmarkSystem sys(p);
  const auto f = fim_heatmap(sys, heatmap_grid(sys, 5), 0.05);
  const auto path = (std::filesystem::temp_directory_path() / "guardian_field.csv").string();
  write_field_csv(f, path, "abc");
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "px,py,value");
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 25);
  EXPECT_TRUE(std::filesystem::exists(path + ".meta"));
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".meta");
}

TEST(Spearman, Cases) {
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 1000}), 1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
  // Average ranks for ties: (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
  EXPECT_NEAR(spearman({1, 2, 2, 3}, {1, 2, 3, 4}), 4.5 / std::sqrt(4.5 * 5.0), 1e-15);
  EXPECT_NEAR(spearman({1, INFINITY, 2, 3}, {3, 0, 2, 1}), -1.0, 1e-15);
  EXPECT_EQ(spearman({1, 1, 1}, {1, 2, 3}), 0.0);
  EXPECT_THROW(spearman({1, 2}, {1}), DimensionError);
  EXPECT_THROW(spearman({1, NAN}, {1, 2}), DomainError);
}
