#pragma once

#include <string>
#include <vector>

#include "guardian/hj.hpp"
#include "guardian/mlp.hpp"
#include "guardian/nnv.hpp"
#include "guardian/systems.hpp"

namespace guardian {

/// Fisher information analog (1/eps^2) J^T J of a range snapshot, J the
/// Jacobian of the ranges w.r.t. position. Throws DomainError when p is
/// within 1e-9 of a landmark.
Eigen::Matrix2d fim(const std::vector<Eigen::Vector2d>& landmarks, const Eigen::Vector2d& p,
                    double eps);

/// lambda_max / lambda_min of the FIM; +infinity when lambda_min <= tol_eig * lambda_max.
double fim_condition(const std::vector<Eigen::Vector2d>& landmarks, const Eigen::Vector2d& p,
                     double eps, double tol_eig = 1e-12);

/// Area of the position slice of the uncertainty set for the noiseless
/// history at x perturbed by +-eps (no estimator-error inflation).
double nnv_volume(const MlpModel& model, const LandmarkSystem& sys, const Vec& x, double eps);

/// State at position p with the velocity of the circle reference at p's angle.
Vec heatmap_state(const LandmarkSystem& sys, const Eigen::Vector2d& p);

enum class FieldMetric { FimKappa, NnvVolume };
std::string to_string(FieldMetric m);

struct ScalarField {
  GridSpec grid;  // 2-D over (px, py)
  std::vector<double> values;
  FieldMetric metric = FieldMetric::FimKappa;
  double eps = 0.0;
};

/// Cell-centred grid over the landmark region with `cells` cells per axis.
GridSpec heatmap_grid(const LandmarkSystem& sys, int cells = 20);

ScalarField fim_heatmap(const LandmarkSystem& sys, const GridSpec& grid, double eps);
ScalarField nnv_heatmap(const MlpModel& model, const LandmarkSystem& sys, const GridSpec& grid,
                        double eps);

/// Writes "px,py,value" rows plus a sidecar `<path>.meta` text header.
void write_field_csv(const ScalarField& field, const std::string& path, const std::string& config_hash);

/// Spearman rank correlation with average ranks for ties; pairs with a
/// non-finite member are dropped.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace guardian
