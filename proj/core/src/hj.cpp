#include "guardian/hj.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "guardian/error.hpp"

namespace guardian {

std::size_t GridSpec::node_count() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= static_cast<std::size_t>(a.n);
  return n;
}

Vec GridSpec::node(std::size_t index) const {
  Vec x(dim());
  for (int a = dim() - 1; a >= 0; --a) {
    const auto n = static_cast<std::size_t>(axes[a].n);
    x(a) = axes[a].node(static_cast<int>(index % n));
    index /= n;
  }
  return x;
}

Box GridSpec::bounds() const {
  Vec lo(dim()), hi(dim());
  for (int a = 0; a < dim(); ++a) {
    lo(a) = axes[a].lo;
    hi(a) = axes[a].hi;
  }
  return Box(lo, hi);
}

void GridSpec::validate() const {
  if (axes.empty()) throw DomainError("GridSpec: no axes");
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (!(axes[a].lo < axes[a].hi)) throw DomainError("GridSpec: axis " + std::to_string(a) + " needs lo < hi");
    if (axes[a].n < 2) throw DomainError("GridSpec: axis " + std::to_string(a) + " needs >= 2 nodes");
  }
  if (n_u < 2) throw DomainError("GridSpec: n_u must be >= 2");
}

ValueGrid::ValueGrid(GridSpec spec, std::vector<double> values)
    : spec_(std::move(spec)), values_(std::move(values)) {
  spec_.validate();
  if (values_.size() != spec_.node_count()) {
    throw DimensionError("ValueGrid: value count does not match the grid");
  }
  strides_.assign(spec_.dim(), 1);
  for (int a = spec_.dim() - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * spec_.axes[a + 1].n;
}

namespace {

// Cell index and fraction of coordinate x on an axis, after clamping.
inline void locate(const GridAxis& ax, double x, int& i, double& frac) {
  const double t_raw = (std::clamp(x, ax.lo, ax.hi) - ax.lo) * (ax.n - 1) / (ax.hi - ax.lo);
  double t = t_raw;
  const double r = std::round(t);
  if (std::abs(t - r) < 1e-12) t = r;
  i = std::clamp(static_cast<int>(std::floor(t)), 0, ax.n - 2);
  frac = t - i;
}

}  // namespace

double ValueGrid::interp(const double* x) const {
  const int d = dim();
  int idx[8];
  double frac[8];
  if (d > 8) throw DimensionError("ValueGrid::interp: at most 8 dimensions");
  std::size_t base = 0;
  for (int a = 0; a < d; ++a) {
    locate(spec_.axes[a], x[a], idx[a], frac[a]);
    base += idx[a] * strides_[a];
  }
  double acc = 0.0;
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t off = base;
    for (int a = 0; a < d; ++a) {
      if (c & (1 << a)) {
        w *= frac[a];
        off += strides_[a];
      } else {
        w *= 1.0 - frac[a];
      }
    }
    if (w != 0.0) acc += w * values_[off];
  }
  return acc;
}

bool ValueGrid::inside(const double* x) const {
  for (int a = 0; a < dim(); ++a) {
    if (x[a] < spec_.axes[a].lo || x[a] > spec_.axes[a].hi) return false;
  }
  return true;
}

double ValueGrid::cell_variation() const {
  double m = 0.0;
  const std::size_t n = values_.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t rem = k;
    for (int a = dim() - 1; a >= 0; --a) {
      const auto na = static_cast<std::size_t>(spec_.axes[a].n);
      const std::size_t ia = rem % na;
      rem /= na;
      if (ia + 1 < na) m = std::max(m, std::abs(values_[k + strides_[a]] - values_[k]));
    }
  }
  return m;
}

double evaluate_value(const ValueGrid& grid, const SafetyModel& model, const double* x) {
  if (grid.inside(x)) return grid.interp(x);
  const Vec xv = Eigen::Map<const Vec>(x, grid.dim());
  return std::min(grid.interp(x), model.constraint(xv)) - grid.offgrid_penalty;
}

double evaluate_value(const ValueGrid& grid, const SafetyModel& model, const Vec& x) {
  if (x.size() != grid.dim()) throw DimensionError("evaluate_value: dimension mismatch");
  return evaluate_value(grid, model, x.data());
}

std::vector<double> control_samples(double u_lo, double u_hi, int n_u) {
  if (n_u < 2) throw DomainError("control_samples: n_u must be >= 2");
  std::vector<double> u(n_u);
  for (int k = 0; k < n_u; ++k) u[k] = k == n_u - 1 ? u_hi : u_lo + k * (u_hi - u_lo) / (n_u - 1);
  return u;
}

std::vector<double> control_samples(const SafetyModel& model, int n_u) {
  return control_samples(model.u_lo(), model.u_hi(), n_u);
}

ValueGrid value_iteration(const SafetyModel& model, const GridSpec& spec, double tol,
                          int max_iters) {
  spec.validate();
  if (spec.dim() != model.dim()) throw DimensionError("value_iteration: grid/model dimension mismatch");
  if (!(tol > 0.0)) throw DomainError("value_iteration: tol must be positive");
  const int d = spec.dim();
  const std::size_t n_nodes = spec.node_count();
  const std::vector<double> us = control_samples(model, spec.n_u);
  const std::vector<Vec> ds = model.disturbance_points();
  const std::size_t per_node = us.size() * ds.size();

  std::vector<double> c(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) c[k] = model.constraint(spec.node(k));
  ValueGrid grid(spec, c);
  grid.tol = tol;
  grid.offgrid_penalty = grid.cell_variation();
  const double penalty = grid.offgrid_penalty;

  // Next states, flattened (node, u, d), and the constraint at off-grid ones.
  std::vector<double> next(n_nodes * per_node * d);
  std::vector<double> off_c(n_nodes * per_node, std::numeric_limits<double>::quiet_NaN());
  {
    std::size_t e = 0;
    for (std::size_t k = 0; k < n_nodes; ++k) {
      const Vec x = spec.node(k);
      for (double u : us) {
        for (const Vec& dv : ds) {
          double* out = &next[e * d];
          model.step_into(x.data(), u, dv.data(), out);
          if (!grid.inside(out)) off_c[e] = model.constraint(Eigen::Map<const Vec>(out, d));
          ++e;
        }
      }
    }
  }

  std::vector<double> cur = c;
  std::vector<double> upd(n_nodes);
  for (int it = 1; it <= max_iters; ++it) {
    ValueGrid view(spec, cur);
    double residual = 0.0;
    for (std::size_t k = 0; k < n_nodes; ++k) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t e = k * per_node;
      for (std::size_t iu = 0; iu < us.size(); ++iu) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t id = 0; id < ds.size(); ++id, ++e) {
          double v = view.interp(&next[e * d]);
          if (!std::isnan(off_c[e])) v = std::min(v, off_c[e]) - penalty;
          worst = std::min(worst, v);
        }
        best = std::max(best, worst);
      }
      const double nv = std::min(c[k], best);
      if (nv > cur[k] + 1e-12) {
        throw Error("value_iteration: sweep " + std::to_string(it) + " increased node " +
                    std::to_string(k) + " (monotonicity violated)");
      }
      residual = std::max(residual, std::abs(nv - cur[k]));
      upd[k] = nv;
    }
    cur.swap(upd);
    grid = ValueGrid(spec, cur);
    grid.tol = tol;
    grid.offgrid_penalty = penalty;
    grid.iterations = it;
    grid.residual = residual;
    if (residual <= tol) {
      grid.converged = true;
      break;
    }
  }
  return grid;
}

namespace {

constexpr const char* kGridMagic = "guardian-value-grid";

void write_le(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double read_le(const unsigned char* b) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void save_grid(const ValueGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_grid: cannot open '" + path + "'");
  std::ostringstream h;
  h << std::setprecision(17);
  h << kGridMagic << " 1\n";
  h << "# values: little-endian float64, row-major, last axis fastest\n";
  h << "dims " << grid.dim() << "\n";
  for (const auto& a : grid.spec().axes) h << "axis " << a.lo << ' ' << a.hi << ' ' << a.n << "\n";
  h << "n_u " << grid.spec().n_u << "\n";
  h << "tol " << grid.tol << "\n";
  h << "residual " << grid.residual << "\n";
  h << "iterations " << grid.iterations << "\n";
  h << "converged " << (grid.converged ? 1 : 0) << "\n";
  h << "offgrid_penalty " << grid.offgrid_penalty << "\n";
  h << "data " << grid.values().size() << "\n";
  out << h.str();
  for (double v : grid.values()) write_le(out, v);
  if (!out) throw Error("save_grid: write failed for '" + path + "'");
}

ValueGrid load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_grid: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("grid file: empty");
  {
    std::istringstream ls(line);
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != kGridMagic) throw ParseError("grid file: bad magic '" + magic + "'");
    if (version != 1) throw UnsupportedVersionError("grid file: unsupported version " + std::to_string(version));
  }
  GridSpec spec;
  double tol = 0, residual = 0, penalty = 0;
  int iterations = 0, converged = 0, dims = -1;
  std::size_t count = 0;
  bool have_data = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dims") ls >> dims;
    else if (key == "axis") {
      GridAxis a;
      ls >> a.lo >> a.hi >> a.n;
      spec.axes.push_back(a);
    } else if (key == "n_u") ls >> spec.n_u;
    else if (key == "tol") ls >> tol;
    else if (key == "residual") ls >> residual;
    else if (key == "iterations") ls >> iterations;
    else if (key == "converged") ls >> converged;
    else if (key == "offgrid_penalty") ls >> penalty;
    else if (key == "data") {
      ls >> count;
      have_data = true;
    } else {
      throw ParseError("grid file: unknown header field '" + key + "'");
    }
    if (ls.fail()) throw ParseError("grid file: malformed field '" + key + "'");
    if (have_data) break;
  }
  if (!have_data) throw ParseError("grid file: missing 'data' field");
  if (dims != static_cast<int>(spec.axes.size())) throw ParseError("grid file: 'dims' does not match axis count");
  if (count != spec.node_count()) throw ParseError("grid file: 'data' count does not match axes");
  std::vector<unsigned char> raw(count * 8);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw ParseError("grid file: truncated value array");
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) values[k] = read_le(&raw[k * 8]);
  ValueGrid g(spec, values);
  g.tol = tol;
  g.residual = residual;
  g.iterations = iterations;
  g.converged = converged != 0;
  g.offgrid_penalty = penalty;
  return g;
}

double worst_next_value(const ValueGrid& grid, const SafetyModel& model, const Vec& x, double u) {
  if (x.size() != model.dim()) throw DimensionError("worst_next_value: dimension mismatch");
  double worst = std::numeric_limits<double>::infinity();
  Vec nx(model.dim());
  for (const Vec& d : model.disturbance_points()) {
    model.step_into(x.data(), u, d.data(), nx.data());
    worst = std::min(worst, evaluate_value(grid, model, nx.data()));
  }
  return worst;
}

double nominal_safe_control(const ValueGrid& grid, const SafetyModel& model, const Vec& x) {
  const auto us = control_samples(model, grid.spec().n_u);
  return argmax_control(us, nullptr, [&](double u) { return worst_next_value(grid, model, x, u); });
}

NominalDecision nominal_filter(const ValueGrid& grid, const SafetyModel& model, const Vec& x,
                               double u_nom) {
  NominalDecision r;
  r.q_nominal = worst_next_value(grid, model, x, u_nom);
  if (r.q_nominal >= 0.0) {
    r.u = u_nom;
    r.q_applied = r.q_nominal;
    return r;
  }
  r.active = true;
  const auto us = control_samples(model, grid.spec().n_u);
  r.u = argmax_control(us, &u_nom, [&](double u) { return worst_next_value(grid, model, x, u); },
                       &r.q_applied);
  return r;
}

}  // namespace guardian
