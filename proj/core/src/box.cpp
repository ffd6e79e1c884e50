#include "guardian/box.hpp"

#include <cmath>

#include "guardian/error.hpp"

namespace guardian {

Box::Box(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw DimensionError("Box: lower and upper have different lengths");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_(i)) || !std::isfinite(upper_(i))) {
      throw DomainError("Box: non-finite bound at index " + std::to_string(i));
    }
    if (lower_(i) > upper_(i)) {
      throw DomainError("Box: lower > upper at index " + std::to_string(i));
    }
  }
}

Box Box::point(const Vec& x) { return Box(x, x); }

Box Box::centered(const Vec& center, const Vec& radius) {
  return Box(center - radius, center + radius);
}

Box Box::centered(const Vec& center, double radius) {
  return centered(center, Vec::Constant(center.size(), radius));
}

double Box::volume() const { return width().prod(); }

bool Box::contains(const Vec& x, double tol) const {
  if (x.size() != lower_.size()) {
    throw DimensionError("Box::contains: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) < lower_(i) - tol || x(i) > upper_(i) + tol) return false;
  }
  return true;
}

bool Box::contains(const Box& other, double tol) const {
  return contains(other.lower_, tol) && contains(other.upper_, tol);
}

bool Box::is_degenerate() const { return (upper_ - lower_).maxCoeff() == 0.0; }

Vec Box::clamp(const Vec& x) const {
  if (x.size() != lower_.size()) {
    throw DimensionError("Box::clamp: dimension mismatch");
  }
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

Box Box::inflated(const Vec& margin) const {
  if (margin.size() != lower_.size()) {
    throw DimensionError("Box::inflated: dimension mismatch");
  }
  return Box(lower_ - margin, upper_ + margin);
}

Box Box::slice(const std::vector<int>& dims) const {
  Vec lo(dims.size()), hi(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    lo(k) = lower_(dims[k]);
    hi(k) = upper_(dims[k]);
  }
  return Box(lo, hi);
}

std::vector<Vec> Box::vertices() const { return lattice(2); }

std::vector<Vec> Box::lattice(int per_axis) const {
  if (per_axis < 1) throw DomainError("Box::lattice: per_axis must be >= 1");
  const int d = dim();
  std::vector<std::vector<double>> axes(d);
  for (int i = 0; i < d; ++i) {
    if (lower_(i) == upper_(i) || per_axis == 1) {
      axes[i] = {per_axis == 1 ? 0.5 * (lower_(i) + upper_(i)) : lower_(i)};
      continue;
    }
    axes[i].resize(per_axis);
    for (int k = 0; k < per_axis; ++k) {
      const double t = static_cast<double>(k) / (per_axis - 1);
      axes[i][k] = (k == per_axis - 1) ? upper_(i) : lower_(i) + t * (upper_(i) - lower_(i));
    }
  }
  std::vector<Vec> out;
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    Vec p(d);
    for (int i = 0; i < d; ++i) p(i) = axes[i][idx[i]];
    out.push_back(std::move(p));
    int i = 0;
    for (; i < d; ++i) {
      if (++idx[i] < axes[i].size()) break;
      idx[i] = 0;
    }
    if (i == d) break;
  }
  return out;
}

Box intersect(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) throw DimensionError("intersect: dimension mismatch");
  Vec lo = a.lower().cwiseMax(b.lower());
  Vec hi = a.upper().cwiseMin(b.upper());
  return Box(lo, hi);
}

Box hull(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) throw DimensionError("hull: dimension mismatch");
  return Box(a.lower().cwiseMin(b.lower()), a.upper().cwiseMax(b.upper()));
}

}  // namespace guardian
