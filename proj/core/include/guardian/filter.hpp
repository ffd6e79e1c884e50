#pragma once

#include <string>

#include "guardian/box.hpp"
#include "guardian/hj.hpp"
#include "guardian/systems.hpp"

namespace guardian {

/// The boundary band {s : |V(s)| <= delta_band} and the lattice density
/// used to sample uncertainty boxes.
struct NeighborhoodSpec {
  double delta_band = 0.0;
  int lattice_density = 5;

  static NeighborhoodSpec from_grid(const ValueGrid& grid, int lattice_density = 5);
  void validate() const;
};

/// Safe control cone over a set of states, for scalar u.
enum class Cone { NonNeg, NonPos, All, Empty, NotApplicable };

std::string to_string(Cone c);

struct FilterDecision {
  double u_applied = 0.0;
  bool active = false;
  double phi_nominal = 0.0;
  double phi_applied = 0.0;
  Box xbar;
  bool asm2_ok = true;
  Cone cone = Cone::NotApplicable;
};

/// Worst-case next value over a lattice on xbar (all vertices included)
/// and the disturbance points.
double phi(const ValueGrid& grid, const SafetyModel& model, const Box& xbar, double u,
           int lattice_density = 5);

/// argmax_u phi over the control samples (and u_nom if given); ties to smallest |u|.
double guardian_control(const ValueGrid& grid, const SafetyModel& model, const Box& xbar,
                        int lattice_density = 5, const double* u_nom = nullptr,
                        double* phi_best = nullptr);

/// Keep u_nom iff phi(xbar, u_nom) >= 0, otherwise apply guardian_control.
/// Active decisions also record the runtime uncertainty-bound check and the
/// cone of xbar.
FilterDecision guardian_filter(const ValueGrid& grid, const SafetyModel& model, const Box& xbar,
                               double u_nom, const NeighborhoodSpec& nbhd);

/// Classifies the sign of grad V(s) . g(s) over lattice points of s_box
/// that lie in the boundary band. NotApplicable if none does.
Cone check_safe_cone(const ValueGrid& grid, const SafetyModel& model, const Box& s_box,
                     const NeighborhoodSpec& nbhd, double tol_cone = 1e-6);

/// True iff every lattice point of xbar and each of its one-step images
/// (control samples x disturbance points) has V >= -delta_band.
bool check_uncertainty_bound(const ValueGrid& grid, const SafetyModel& model, const Box& xbar,
                             const NeighborhoodSpec& nbhd);

}  // namespace guardian
