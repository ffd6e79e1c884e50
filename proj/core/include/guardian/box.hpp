#pragma once

#include <Eigen/Dense>
#include <vector>

namespace guardian {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned interval vector [lower, upper].
///
/// Used for input perturbation balls, state uncertainty sets and
/// disturbance sets. Construction validates lower <= upper and finiteness.
class Box {
 public:
  Box() = default;
  Box(Vec lower, Vec upper);

  static Box point(const Vec& x);
  static Box centered(const Vec& center, const Vec& radius);
  static Box centered(const Vec& center, double radius);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  double lower(int i) const { return lower_(i); }
  double upper(int i) const { return upper_(i); }

  Vec center() const { return 0.5 * (lower_ + upper_); }
  Vec width() const { return upper_ - lower_; }
  /// Product of side lengths.
  double volume() const;

  bool contains(const Vec& x, double tol = 0.0) const;
  bool contains(const Box& other, double tol = 0.0) const;
  bool is_degenerate() const;

  /// Per-coordinate clamp; the Euclidean projection onto the box.
  Vec clamp(const Vec& x) const;

  Box inflated(const Vec& margin) const;
  Box slice(const std::vector<int>& dims) const;

  /// All 2^d corners (degenerate axes are not duplicated).
  std::vector<Vec> vertices() const;
  /// Tensor lattice with `per_axis` points per non-degenerate axis,
  /// including both endpoints.
  std::vector<Vec> lattice(int per_axis) const;

 private:
  Vec lower_;
  Vec upper_;
};

/// Intersection of two boxes of equal dimension; throws if empty.
Box intersect(const Box& a, const Box& b);
/// Smallest box containing both.
Box hull(const Box& a, const Box& b);

}  // namespace guardian
