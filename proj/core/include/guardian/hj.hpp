#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "guardian/box.hpp"
#include "guardian/systems.hpp"

namespace guardian {

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int n = 2;
  double spacing() const { return (hi - lo) / (n - 1); }
  double node(int i) const { return i == n - 1 ? hi : lo + i * spacing(); }
};

/// Rectangular grid; nodes are stored row-major (last axis fastest).
struct GridSpec {
  std::vector<GridAxis> axes;
  /// Uniform control samples over [u_lo, u_hi], both ends included.
  int n_u = 41;

  int dim() const { return static_cast<int>(axes.size()); }
  std::size_t node_count() const;
  Vec node(std::size_t index) const;
  Box bounds() const;
  void validate() const;
};

/// Value function on a grid. Immutable after the solve.
class ValueGrid {
 public:
  ValueGrid() = default;
  ValueGrid(GridSpec spec, std::vector<double> values);

  const GridSpec& spec() const { return spec_; }
  const std::vector<double>& values() const { return values_; }
  int dim() const { return spec_.dim(); }

  /// Multilinear interpolation after clamping x to the grid; exact at nodes.
  double interp(const double* x) const;
  double interp(const Vec& x) const { return interp(x.data()); }
  bool inside(const double* x) const;
  bool inside(const Vec& x) const { return inside(x.data()); }

  /// Largest |V| difference between adjacent nodes.
  double cell_variation() const;
  /// Default half-width of the boundary band {|V| <= delta}: three cells' worth.
  double delta_band() const { return 3.0 * cell_variation(); }

  double residual = 0.0;
  double tol = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Subtracted from clamped values of off-grid queries.
  double offgrid_penalty = 0.0;

 private:
  GridSpec spec_;
  std::vector<double> values_;
  std::vector<std::size_t> strides_;
};

/// V at an arbitrary state: interpolation inside the grid; outside,
/// min(V(clamp(x)), c(x)) minus the off-grid penalty.
double evaluate_value(const ValueGrid& grid, const SafetyModel& model, const double* x);
double evaluate_value(const ValueGrid& grid, const SafetyModel& model, const Vec& x);

/// Fixed-point iteration V <- min(c, max_u min_d V(f(x, u, d))) from V = c.
/// Throws if a sweep ever increases a node value.
ValueGrid value_iteration(const SafetyModel& model, const GridSpec& spec, double tol = 1e-4,
                          int max_iters = 500);

void save_grid(const ValueGrid& grid, const std::string& path);
ValueGrid load_grid(const std::string& path);

std::vector<double> control_samples(double u_lo, double u_hi, int n_u);
std::vector<double> control_samples(const SafetyModel& model, int n_u);

/// min over disturbance points of V(f(x, u, d)).
double worst_next_value(const ValueGrid& grid, const SafetyModel& model, const Vec& x, double u);

/// argmax over the control samples (and `extra`, if given) of `score`;
/// ties go to the smallest |u|.
template <class Score>
double argmax_control(const std::vector<double>& samples, const double* extra, Score&& score,
                      double* best_value = nullptr) {
  double best_u = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  bool first = true;
  auto consider = [&](double u) {
    const double q = score(u);
    constexpr double tie = 1e-12;
    if (first || q > best + tie) {
      best = q;
      best_u = u;
      first = false;
    } else if (q >= best - tie && std::abs(u) < std::abs(best_u)) {
      best = q;
      best_u = u;
    }
  };
  for (double u : samples) consider(u);
  if (extra) consider(*extra);
  if (best_value) *best_value = best;
  return best_u;
}

/// Optimal safe control at a known state.
double nominal_safe_control(const ValueGrid& grid, const SafetyModel& model, const Vec& x);

struct NominalDecision {
  double u = 0.0;
  bool active = false;
  double q_nominal = 0.0;
  double q_applied = 0.0;
};

/// Least-restrictive switch at a known state: keep u_nom iff its worst-case
/// next value is >= 0, otherwise apply the optimal safe control.
NominalDecision nominal_filter(const ValueGrid& grid, const SafetyModel& model, const Vec& x,
                               double u_nom);

}  // namespace guardian
