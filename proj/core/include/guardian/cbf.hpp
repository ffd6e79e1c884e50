#pragma once

#include <string>

#include "guardian/box.hpp"

namespace guardian {

enum class CbfVariant { Plain, MeasurementRobust, Robust, RobustAdaptive };

std::string to_string(CbfVariant v);
/// Accepts "plain", "mr", "r", "r-qp".
CbfVariant cbf_variant_from_string(const std::string& s);

/// Discrete exponential CBF filter for x+ = x + dt (u + d), |d| <= d_max,
/// with the barrier pair h1 = 1 - x, h2 = 1 + x (Lipschitz constant L_h).
///
/// Each barrier requires h(x_hat+) >= (1 - gamma) h(x_hat) - margin under the
/// worst disturbance, i.e. for h1:
///   u <= (gamma (1 - x_hat) - margin_up) / dt - d_max
/// and mirrored for h2. Margins per variant:
///   plain: 0
///   mr:    (2 - gamma) L_h e_dir, e_dir the one-sided distance from x_hat to
///          the edge of the state bounds in that direction
///   r:     gamma L_h min(e_R, eps_R), e_R the global worst-case error and
///          eps_R = (u_hi - d_max) dt / (gamma L_h) the largest error for
///          which both constraints stay satisfiable everywhere in C
///   r-qp:  theta times the r margin, theta in [theta_min, 1] adapted from
///          the one-step innovation |x_hat - (x_hat_prev + dt u_prev)|
struct CbfConfig {
  CbfVariant variant = CbfVariant::Plain;
  double gamma = 0.5;
  double lipschitz = 1.0;
  double dt = 0.1;
  double u_lo = -2.0;
  double u_hi = 2.0;
  double d_max = 0.02;
  /// Global worst-case estimation error e_R (r, r-qp).
  double eps_global = 0.0;
  double theta_min = 0.25;
  double adapt_rate = 0.2;

  void validate() const;
  /// eps_R above.
  double existence_threshold() const;
  /// Width by which the r variant's invariant set exceeds [-1, 1]:
  /// max(0, e_R - eps_R).
  double inflation() const;
};

struct CbfStep {
  double u = 0.0;
  double lower = 0.0;  // admissible interval after intersecting with U
  double upper = 0.0;
  double margin_up = 0.0;
  double margin_dn = 0.0;
  double theta = 1.0;
};

class CbfFilter {
 public:
  explicit CbfFilter(CbfConfig cfg);

  /// Least-deviation admissible control (clamp of u_nom to the constraint
  /// interval). `xbar` is the state-bound box around x_hat (used by mr).
  /// Throws InfeasibleError if the interval is empty; the filter state is
  /// still advanced with u_nom clamped to U.
  CbfStep filter(double x_hat, const Box& xbar, double u_nom);
  void reset();
  const CbfConfig& config() const { return cfg_; }

 private:
  CbfConfig cfg_;
  double theta_ = 1.0;
  bool have_prev_ = false;
  double prev_prediction_ = 0.0;
};

}  // namespace guardian
