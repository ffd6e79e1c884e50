#pragma once

#include <memory>
#include <string>
#include <vector>

#include "guardian/box.hpp"
#include "guardian/mlp.hpp"

namespace guardian {

/// Scalar-input, control-affine discrete dynamics with an additive
/// disturbance and a constraint c (safe iff c >= 0). This is what the HJ
/// solver, the GUARDIAN filter and the cone checks operate on.
class SafetyModel {
 public:
  virtual ~SafetyModel() = default;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual double dt() const = 0;
  virtual double u_lo() const = 0;
  virtual double u_hi() const = 0;
  virtual Box disturbance_box() const = 0;
  /// out = f(s, u, d); no validation, no allocation.
  virtual void step_into(const double* s, double u, const double* d, double* out) const = 0;
  virtual double constraint(const Vec& s) const = 0;

  /// Checked step; throws DomainError if u is outside [u_lo, u_hi].
  Vec step(const Vec& s, double u, const Vec& d) const;
  /// g(s) = f(s, 1, 0) - f(s, 0, 0).
  Vec control_direction(const Vec& s) const;
  /// Disturbance candidates: vertices of the disturbance box plus its centre.
  std::vector<Vec> disturbance_points() const;
};

/// x+ = x + dt (u + d), c(x) = 1 - |x|.
class ScalarModel final : public SafetyModel {
 public:
  ScalarModel(double dt = 0.1, double u_lo = -2.0, double u_hi = 2.0, double d_max = 0.02);
  std::string name() const override { return "scalar"; }
  int dim() const override { return 1; }
  double dt() const override { return dt_; }
  double u_lo() const override { return u_lo_; }
  double u_hi() const override { return u_hi_; }
  Box disturbance_box() const override;
  void step_into(const double* s, double u, const double* d, double* out) const override;
  double constraint(const Vec& s) const override;

 private:
  double dt_, u_lo_, u_hi_, d_max_;
};

/// One axis of the double integrator, state (p, v):
/// p+ = p + dt (v + dt u / 2 + d_p), v+ = v + dt (u + d_v);
/// c = min(p - p_lo, p_hi - p).
class DoubleIntegratorAxis final : public SafetyModel {
 public:
  DoubleIntegratorAxis(double dt = 0.1, double u_max = 5.0, double d_p = 1e-5, double d_v = 1e-5,
                       double p_lo = 0.0, double p_hi = 10.0);
  std::string name() const override { return "double-integrator-axis"; }
  int dim() const override { return 2; }
  double dt() const override { return dt_; }
  double u_lo() const override { return -u_max_; }
  double u_hi() const override { return u_max_; }
  Box disturbance_box() const override;
  void step_into(const double* s, double u, const double* d, double* out) const override;
  double constraint(const Vec& s) const override;
  double p_lo() const { return p_lo_; }
  double p_hi() const { return p_hi_; }

 private:
  double dt_, u_max_, d_p_, d_v_, p_lo_, p_hi_;
};

struct TaxiParams {
  double speed = 5.0;         // m/s
  double wheelbase = 5.0;     // m
  double dt = 0.1;            // s
  double max_rudder_deg = 12.0;
  double d_x = 0.02;
  double d_y = 0.02;
  double d_theta = 0.01;
  double cte_limit = 10.0;    // runway half-width, m
  double gain_cte = -0.74;    // rudder deg per m
  double gain_he = -0.44;     // rudder deg per heading deg
  int obs_dim = 16;
  double feature_gain = 0.2;
  std::uint64_t feature_seed = 7;
  double cte_scale = 10.0;
  double he_scale = 7.0;
};

/// Taxi lateral dynamics on (cte, he) with u = tan(rudder):
/// cte+ = cte + dt (v sin he + d_y), he+ = he + dt (v/l u + d_theta).
class TaxiLateral final : public SafetyModel {
 public:
  explicit TaxiLateral(TaxiParams p = {});
  std::string name() const override { return "taxi-lateral"; }
  int dim() const override { return 2; }
  double dt() const override { return p_.dt; }
  double u_lo() const override;
  double u_hi() const override;
  Box disturbance_box() const override;
  void step_into(const double* s, double u, const double* d, double* out) const override;
  double constraint(const Vec& s) const override;

 private:
  TaxiParams p_;
};

/// Which estimate coordinates and which control input a scalar filter instance governs.
struct FilterChannel {
  std::vector<int> estimate_indices;
  int control_index = 0;
  std::shared_ptr<const SafetyModel> model;
};

/// Full benchmark system: dynamics, observation, constraint and nominal controller.
class System {
 public:
  virtual ~System() = default;
  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  /// Dimension of the estimator output (the quantities X-bar bounds).
  virtual int estimate_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual double dt() const = 0;
  virtual Box control_box() const = 0;
  virtual Box disturbance_box() const = 0;
  /// Observation noise box of one snapshot.
  virtual Box obs_noise_box() const;
  /// Number of stacked snapshots in one observation.
  virtual int history_length() const { return 1; }
  virtual int snapshot_dim() const = 0;
  /// Noiseless observation of a single state.
  virtual Vec snapshot(const Vec& x) const = 0;
  virtual Vec step_unchecked(const Vec& x, const Vec& u, const Vec& d) const = 0;
  virtual double constraint(const Vec& x) const = 0;
  /// Estimate-space coordinates of a true state.
  virtual Vec estimate_of(const Vec& x) const = 0;
  virtual Vec nominal_control(const Vec& x_hat, double t) const = 0;
  virtual std::vector<FilterChannel> channels() const = 0;
  /// Earlier states preceding x for the initial observation history
  /// (newest first, history_length() - 1 entries).
  virtual std::vector<Vec> initial_history(const Vec& x) const;

  int observation_dim() const { return snapshot_dim() * history_length(); }
  /// Checked step; u outside the control box is rejected.
  Vec step(const Vec& x, const Vec& u, const Vec& d) const;
  /// Stacked observation of `states` (newest first) plus noise.
  Vec observe(const std::vector<Vec>& states, const Vec& noise) const;
  Vec observe(const Vec& x) const;
};

struct ScalarParams {
  double dt = 0.1;
  double u_lo = -2.0;
  double u_hi = 2.0;
  double d_max = 0.02;
  double d_obs = 0.0;
  double switch_time = 6.0;
  double ref_before = -0.95;
  double ref_after = 0.95;
};

/// Scalar system with observation y = log(4/(x+3) - 1) / 4.
class ScalarSystem final : public System {
 public:
  explicit ScalarSystem(ScalarParams p = {});
  std::string name() const override { return "scalar"; }
  int state_dim() const override { return 1; }
  int estimate_dim() const override { return 1; }
  int control_dim() const override { return 1; }
  double dt() const override { return p_.dt; }
  Box control_box() const override;
  Box disturbance_box() const override;
  Box obs_noise_box() const override;
  int snapshot_dim() const override { return 1; }
  Vec snapshot(const Vec& x) const override;
  Vec step_unchecked(const Vec& x, const Vec& u, const Vec& d) const override;
  double constraint(const Vec& x) const override;
  Vec estimate_of(const Vec& x) const override { return x; }
  Vec nominal_control(const Vec& x_hat, double t) const override;
  std::vector<FilterChannel> channels() const override;

  const ScalarParams& params() const { return p_; }
  double reference(double t) const;
  /// Exact inverse of the observation map, 4 sigmoid(-4 y) - 3, as a network.
  static MlpModel exact_estimator();

 private:
  ScalarParams p_;
  std::shared_ptr<const ScalarModel> model_;
};

struct LandmarkParams {
  double dt = 0.1;
  double u_max = 5.0;
  double d_p = 1e-5;
  double d_v = 1e-5;
  double region_lo = 0.0;
  double region_hi = 10.0;
  std::vector<Eigen::Vector2d> landmarks = {{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  Eigen::Vector2d center{5.0, 5.0};
  double radius = 4.5;
  double omega = 0.5;
  double kp = 3.0;
  double kd = 3.0;
};

/// Planar double integrator (px, py, vx, vy) observed through ranges to
/// landmarks, with a three-snapshot measurement history.
class LandmarkSystem final : public System {
 public:
  explicit LandmarkSystem(LandmarkParams p = {});
  std::string name() const override { return "landmark"; }
  int state_dim() const override { return 4; }
  int estimate_dim() const override { return 4; }
  int control_dim() const override { return 2; }
  double dt() const override { return p_.dt; }
  Box control_box() const override;
  Box disturbance_box() const override;
  int history_length() const override { return 3; }
  int snapshot_dim() const override { return static_cast<int>(p_.landmarks.size()); }
  Vec snapshot(const Vec& x) const override;
  Vec step_unchecked(const Vec& x, const Vec& u, const Vec& d) const override;
  double constraint(const Vec& x) const override;
  Vec estimate_of(const Vec& x) const override { return x; }
  Vec nominal_control(const Vec& x_hat, double t) const override;
  std::vector<FilterChannel> channels() const override;
  std::vector<Vec> initial_history(const Vec& x) const override;

  const LandmarkParams& params() const { return p_; }
  /// Reference position, velocity and acceleration on the circle at time t.
  void reference(double t, Eigen::Vector2d& p, Eigen::Vector2d& v, Eigen::Vector2d& a) const;
  Vec reference_state(double t) const;

 private:
  LandmarkParams p_;
  std::shared_ptr<const DoubleIntegratorAxis> axis_;
};

/// Aircraft taxiing kinematics, state (dtp, cte, he), control u = tan(rudder),
/// observed through a fixed random tanh feature map of (cte, he).
class TaxiSystem final : public System {
 public:
  explicit TaxiSystem(TaxiParams p = {});
  std::string name() const override { return "taxi"; }
  int state_dim() const override { return 3; }
  int estimate_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  double dt() const override { return p_.dt; }
  Box control_box() const override;
  Box disturbance_box() const override;
  int snapshot_dim() const override { return p_.obs_dim; }
  Vec snapshot(const Vec& x) const override;
  Vec step_unchecked(const Vec& x, const Vec& u, const Vec& d) const override;
  double constraint(const Vec& x) const override;
  Vec estimate_of(const Vec& x) const override;
  Vec nominal_control(const Vec& x_hat, double t) const override;
  std::vector<FilterChannel> channels() const override;

  const TaxiParams& params() const { return p_; }
  static double rudder_deg_to_control(double deg);
  static double control_to_rudder_deg(double u);

 private:
  TaxiParams p_;
  Mat mix_;
  Vec mix_bias_;
  std::shared_ptr<const TaxiLateral> lateral_;
};

}  // namespace guardian
