#include "guardian/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

#include "guardian/error.hpp"

namespace guardian {

Eigen::Matrix2d fim(const std::vector<Eigen::Vector2d>& landmarks, const Eigen::Vector2d& p,
                    double eps) {
  if (!(eps > 0.0)) throw DomainError("fim: eps must be positive");
  Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
  for (const auto& l : landmarks) {
    const Eigen::Vector2d r = p - l;
    const double n = r.norm();
    if (n < 1e-9) throw DomainError("fim: position coincides with a landmark");
    const Eigen::Vector2d row = r / n;
    info += row * row.transpose();
  }
  return info / (eps * eps);
}

double fim_condition(const std::vector<Eigen::Vector2d>& landmarks, const Eigen::Vector2d& p,
                     double eps, double tol_eig) {
  const Eigen::Matrix2d m = fim(landmarks, p, eps);
  const double half_tr = 0.5 * (m(0, 0) + m(1, 1));
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = std::sqrt(std::max(0.0, half_tr * half_tr - det));
  const double l1 = half_tr + disc;
  // det / l1 avoids cancellation in half_tr - disc.
  const double l2 = l1 > 0.0 ? det / l1 : 0.0;
  if (l2 <= tol_eig * l1) return std::numeric_limits<double>::infinity();
  return l1 / l2;
}

Vec heatmap_state(const LandmarkSystem& sys, const Eigen::Vector2d& p) {
  const auto& prm = sys.params();
  const double ang = std::atan2(p.y() - prm.center.y(), p.x() - prm.center.x());
  const double speed = prm.radius * prm.omega;
  Vec x(4);
  x << p.x(), p.y(), -speed * std::sin(ang), speed * std::cos(ang);
  return x;
}

double nnv_volume(const MlpModel& model, const LandmarkSystem& sys, const Vec& x, double eps) {
  const Vec y = sys.observe(x);
  const Box b = state_uncertainty_set(model, y, eps, Vec::Zero(model.output_dim()));
  return b.slice({0, 1}).volume();
}

std::string to_string(FieldMetric m) {
  return m == FieldMetric::FimKappa ? "fim_kappa" : "nnv_volume";
}

GridSpec heatmap_grid(const LandmarkSystem& sys, int cells) {
  if (cells < 2) throw DomainError("heatmap_grid: need at least 2 cells per axis");
  const double lo = sys.params().region_lo, hi = sys.params().region_hi;
  const double half = 0.5 * (hi - lo) / cells;
  GridSpec g;
  g.axes = {{lo + half, hi - half, cells}, {lo + half, hi - half, cells}};
  return g;
}

ScalarField fim_heatmap(const LandmarkSystem& sys, const GridSpec& grid, double eps) {
  ScalarField f{grid, {}, FieldMetric::FimKappa, eps};
  f.values.resize(grid.node_count());
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    const Vec x = grid.node(k);
    try {
      f.values[k] = fim_condition(sys.params().landmarks, Eigen::Vector2d(x(0), x(1)), eps);
    } catch (const DomainError&) {
      f.values[k] = std::numeric_limits<double>::infinity();
    }
  }
  return f;
}

ScalarField nnv_heatmap(const MlpModel& model, const LandmarkSystem& sys, const GridSpec& grid,
                        double eps) {
  ScalarField f{grid, {}, FieldMetric::NnvVolume, eps};
  f.values.resize(grid.node_count());
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    const Vec x = grid.node(k);
    f.values[k] = nnv_volume(model, sys, heatmap_state(sys, Eigen::Vector2d(x(0), x(1))), eps);
  }
  return f;
}

void write_field_csv(const ScalarField& field, const std::string& path, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw Error("write_field_csv: cannot open '" + path + "'");
  out << std::setprecision(17);
  out << "px,py,value\n";
  for (std::size_t k = 0; k < field.values.size(); ++k) {
    const Vec x = field.grid.node(k);
    out << x(0) << ',' << x(1) << ',' << field.values[k] << '\n';
  }
  std::ofstream meta(path + ".meta");
  meta << std::setprecision(17);
  meta << "metric " << to_string(field.metric) << "\neps " << field.eps << "\nconfig_hash "
       << config_hash << "\n";
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("spearman: length mismatch");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isfinite(a[i]) && std::isfinite(b[i])) {
      x.push_back(a[i]);
      y.push_back(b[i]);
    }
  }
  if (x.size() < 2) throw DomainError("spearman: fewer than two finite pairs");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace guardian
