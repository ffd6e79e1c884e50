#include "guardian/filter.hpp"

#include <algorithm>
#include <limits>

#include "guardian/error.hpp"

namespace guardian {

NeighborhoodSpec NeighborhoodSpec::from_grid(const ValueGrid& grid, int lattice_density) {
  NeighborhoodSpec n;
  n.delta_band = grid.delta_band();
  n.lattice_density = lattice_density;
  n.validate();
  return n;
}

void NeighborhoodSpec::validate() const {
  if (!(delta_band > 0.0)) throw DomainError("NeighborhoodSpec: delta_band must be positive");
  if (lattice_density < 2) throw DomainError("NeighborhoodSpec: lattice_density must be >= 2");
}

std::string to_string(Cone c) {
  switch (c) {
    case Cone::NonNeg: return "nonneg";
    case Cone::NonPos: return "nonpos";
    case Cone::All: return "all";
    case Cone::Empty: return "empty";
    case Cone::NotApplicable: return "not-applicable";
  }
  return "not-applicable";
}

namespace {

void check_dims(const ValueGrid& grid, const SafetyModel& model, const Box& b) {
  if (b.dim() != model.dim() || grid.dim() != model.dim()) {
    throw DimensionError("filter: box/grid/model dimension mismatch");
  }
}

double phi_points(const ValueGrid& grid, const SafetyModel& model, const std::vector<Vec>& pts,
                  const std::vector<Vec>& ds, double u) {
  double m = std::numeric_limits<double>::infinity();
  Vec nx(model.dim());
  for (const Vec& s : pts) {
    for (const Vec& d : ds) {
      model.step_into(s.data(), u, d.data(), nx.data());
      m = std::min(m, evaluate_value(grid, model, nx.data()));
    }
  }
  return m;
}

}  // namespace

double phi(const ValueGrid& grid, const SafetyModel& model, const Box& xbar, double u,
           int lattice_density) {
  check_dims(grid, model, xbar);
  if (u < model.u_lo() || u > model.u_hi()) throw DomainError("phi: control outside bounds");
  return phi_points(grid, model, xbar.lattice(lattice_density), model.disturbance_points(), u);
}

double guardian_control(const ValueGrid& grid, const SafetyModel& model, const Box& xbar,
                        int lattice_density, const double* u_nom, double* phi_best) {
  check_dims(grid, model, xbar);
  const auto pts = xbar.lattice(lattice_density);
  const auto ds = model.disturbance_points();
  const auto us = control_samples(model, grid.spec().n_u);
  return argmax_control(us, u_nom, [&](double u) { return phi_points(grid, model, pts, ds, u); },
                        phi_best);
}

FilterDecision guardian_filter(const ValueGrid& grid, const SafetyModel& model, const Box& xbar,
                               double u_nom, const NeighborhoodSpec& nbhd) {
  check_dims(grid, model, xbar);
  FilterDecision r;
  r.xbar = xbar;
  const auto pts = xbar.lattice(nbhd.lattice_density);
  const auto ds = model.disturbance_points();
  r.phi_nominal = phi_points(grid, model, pts, ds, u_nom);
  if (r.phi_nominal >= 0.0) {
    r.u_applied = u_nom;
    r.phi_applied = r.phi_nominal;
    return r;
  }
  r.active = true;
  const auto us = control_samples(model, grid.spec().n_u);
  r.u_applied = argmax_control(
      us, &u_nom, [&](double u) { return phi_points(grid, model, pts, ds, u); }, &r.phi_applied);
  r.asm2_ok = check_uncertainty_bound(grid, model, xbar, nbhd);
  r.cone = check_safe_cone(grid, model, xbar, nbhd);
  return r;
}

Cone check_safe_cone(const ValueGrid& grid, const SafetyModel& model, const Box& s_box,
                     const NeighborhoodSpec& nbhd, double tol_cone) {
  check_dims(grid, model, s_box);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  bool any = false;
  for (const Vec& s : s_box.lattice(nbhd.lattice_density)) {
    if (std::abs(evaluate_value(grid, model, s)) > nbhd.delta_band) continue;
    const Vec g = model.control_direction(s);
    double sigma = 0.0;
    for (int a = 0; a < model.dim(); ++a) {
      const double h = grid.spec().axes[a].spacing();
      Vec sp = s, sm = s;
      sp(a) += h;
      sm(a) -= h;
      const double da = (evaluate_value(grid, model, sp) - evaluate_value(grid, model, sm)) / (2.0 * h);
      sigma += da * g(a);
    }
    lo = std::min(lo, sigma);
    hi = std::max(hi, sigma);
    any = true;
  }
  if (!any) return Cone::NotApplicable;
  if (lo >= -tol_cone && hi <= tol_cone) return Cone::All;
  if (lo >= -tol_cone) return Cone::NonNeg;
  if (hi <= tol_cone) return Cone::NonPos;
  return Cone::Empty;
}

bool check_uncertainty_bound(const ValueGrid& grid, const SafetyModel& model, const Box& xbar,
                             const NeighborhoodSpec& nbhd) {
  check_dims(grid, model, xbar);
  const double floor = -nbhd.delta_band;
  const auto pts = xbar.lattice(nbhd.lattice_density);
  for (const Vec& s : pts) {
    if (evaluate_value(grid, model, s) < floor) return false;
  }
  const auto ds = model.disturbance_points();
  const auto us = control_samples(model, grid.spec().n_u);
  Vec nx(model.dim());
  for (const Vec& s : pts) {
    for (double u : us) {
      for (const Vec& d : ds) {
        model.step_into(s.data(), u, d.data(), nx.data());
        if (evaluate_value(grid, model, nx.data()) < floor) return false;
      }
    }
  }
  return true;
}

}  // namespace guardian
