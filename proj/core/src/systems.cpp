#include "guardian/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "guardian/error.hpp"
#include "guardian/rng.hpp"

namespace guardian {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

Vec SafetyModel::step(const Vec& s, double u, const Vec& d) const {
  if (s.size() != dim() || d.size() != dim()) throw DimensionError(name() + ": step dimension mismatch");
  if (u < u_lo() || u > u_hi()) {
    throw DomainError(name() + ": control " + std::to_string(u) + " outside [" +
                      std::to_string(u_lo()) + ", " + std::to_string(u_hi()) + "]");
  }
  Vec out(dim());
  step_into(s.data(), u, d.data(), out.data());
  return out;
}

Vec SafetyModel::control_direction(const Vec& s) const {
  const Vec zero = Vec::Zero(dim());
  Vec a(dim()), b(dim());
  step_into(s.data(), 1.0, zero.data(), a.data());
  step_into(s.data(), 0.0, zero.data(), b.data());
  return a - b;
}

std::vector<Vec> SafetyModel::disturbance_points() const {
  const Box d = disturbance_box();
  std::vector<Vec> pts = d.vertices();
  if (!d.is_degenerate()) pts.push_back(d.center());
  return pts;
}

ScalarModel::ScalarModel(double dt, double u_lo, double u_hi, double d_max)
    : dt_(dt), u_lo_(u_lo), u_hi_(u_hi), d_max_(d_max) {
  if (!(u_lo < u_hi)) throw DomainError("ScalarModel: u_lo must be < u_hi");
}

Box ScalarModel::disturbance_box() const { return Box::centered(Vec::Zero(1), d_max_); }

void ScalarModel::step_into(const double* s, double u, const double* d, double* out) const {
  out[0] = s[0] + dt_ * (u + d[0]);
}

double ScalarModel::constraint(const Vec& s) const { return 1.0 - std::abs(s(0)); }

DoubleIntegratorAxis::DoubleIntegratorAxis(double dt, double u_max, double d_p, double d_v,
                                           double p_lo, double p_hi)
    : dt_(dt), u_max_(u_max), d_p_(d_p), d_v_(d_v), p_lo_(p_lo), p_hi_(p_hi) {
  if (!(u_max > 0.0)) throw DomainError("DoubleIntegratorAxis: u_max must be positive");
  if (!(p_lo < p_hi)) throw DomainError("DoubleIntegratorAxis: p_lo must be < p_hi");
}

Box DoubleIntegratorAxis::disturbance_box() const {
  return Box(Vec((Vec(2) << -d_p_, -d_v_).finished()), Vec((Vec(2) << d_p_, d_v_).finished()));
}

void DoubleIntegratorAxis::step_into(const double* s, double u, const double* d,
                                     double* out) const {
  out[0] = s[0] + dt_ * (s[1] + 0.5 * dt_ * u + d[0]);
  out[1] = s[1] + dt_ * (u + d[1]);
}

double DoubleIntegratorAxis::constraint(const Vec& s) const {
  return std::min(s(0) - p_lo_, p_hi_ - s(0));
}

TaxiLateral::TaxiLateral(TaxiParams p) : p_(std::move(p)) {}

double TaxiLateral::u_lo() const { return -std::tan(p_.max_rudder_deg * kDeg); }
double TaxiLateral::u_hi() const { return std::tan(p_.max_rudder_deg * kDeg); }

Box TaxiLateral::disturbance_box() const {
  return Box(Vec((Vec(2) << -p_.d_y, -p_.d_theta).finished()),
             Vec((Vec(2) << p_.d_y, p_.d_theta).finished()));
}

void TaxiLateral::step_into(const double* s, double u, const double* d, double* out) const {
  out[0] = s[0] + p_.dt * (p_.speed * std::sin(s[1]) + d[0]);
  out[1] = s[1] + p_.dt * (p_.speed / p_.wheelbase * u + d[1]);
}

double TaxiLateral::constraint(const Vec& s) const { return p_.cte_limit - std::abs(s(0)); }

Box System::obs_noise_box() const { return Box::point(Vec::Zero(snapshot_dim())); }

std::vector<Vec> System::initial_history(const Vec& x) const {
  return std::vector<Vec>(history_length() - 1, x);
}

Vec System::step(const Vec& x, const Vec& u, const Vec& d) const {
  if (x.size() != state_dim() || u.size() != control_dim() || d.size() != state_dim()) {
    throw DimensionError(name() + ": step dimension mismatch");
  }
  if (!control_box().contains(u)) throw DomainError(name() + ": control outside bounds");
  return step_unchecked(x, u, d);
}

Vec System::observe(const std::vector<Vec>& states, const Vec& noise) const {
  if (static_cast<int>(states.size()) != history_length()) {
    throw DimensionError(name() + ": observe needs " + std::to_string(history_length()) +
                         " states");
  }
  if (noise.size() != observation_dim()) throw DimensionError(name() + ": noise length mismatch");
  Vec y(observation_dim());
  const int m = snapshot_dim();
  for (int k = 0; k < history_length(); ++k) y.segment(k * m, m) = snapshot(states[k]);
  return y + noise;
}

Vec System::observe(const Vec& x) const {
  std::vector<Vec> states{x};
  for (const Vec& p : initial_history(x)) states.push_back(p);
  return observe(states, Vec::Zero(observation_dim()));
}

// ---------------------------------------------------------------- scalar

ScalarSystem::ScalarSystem(ScalarParams p)
    : p_(p), model_(std::make_shared<ScalarModel>(p.dt, p.u_lo, p.u_hi, p.d_max)) {}

Box ScalarSystem::control_box() const { return Box(Vec::Constant(1, p_.u_lo), Vec::Constant(1, p_.u_hi)); }
Box ScalarSystem::disturbance_box() const { return model_->disturbance_box(); }
Box ScalarSystem::obs_noise_box() const { return Box::centered(Vec::Zero(1), p_.d_obs); }

Vec ScalarSystem::snapshot(const Vec& x) const {
  const double v = x(0);
  if (!(v > -3.0 && v < 1.0)) {
    throw DomainError("scalar observation undefined at x = " + std::to_string(v) +
                      " (requires -3 < x < 1)");
  }
  return Vec::Constant(1, 0.25 * std::log(4.0 / (v + 3.0) - 1.0));
}

Vec ScalarSystem::step_unchecked(const Vec& x, const Vec& u, const Vec& d) const {
  Vec out(1);
  model_->step_into(x.data(), u(0), d.data(), out.data());
  return out;
}

double ScalarSystem::constraint(const Vec& x) const { return model_->constraint(x); }

double ScalarSystem::reference(double t) const {
  // Small guard so that t = switch_time computed as k * dt still switches.
  return t < p_.switch_time - 1e-9 ? p_.ref_before : p_.ref_after;
}

Vec ScalarSystem::nominal_control(const Vec& x_hat, double t) const {
  return Vec::Constant(1, std::clamp(reference(t) - x_hat(0), p_.u_lo, p_.u_hi));
}

std::vector<FilterChannel> ScalarSystem::channels() const { return {{{0}, 0, model_}}; }

MlpModel ScalarSystem::exact_estimator() {
  Layer a;
  a.weight = Mat::Constant(1, 1, -4.0);
  a.bias = Vec::Zero(1);
  a.activation = Activation::Sigmoid;
  Layer b;
  b.weight = Mat::Constant(1, 1, 4.0);
  b.bias = Vec::Constant(1, -3.0);
  b.activation = Activation::Identity;
  return MlpModel(1, {a, b});
}

// -------------------------------------------------------------- landmark

LandmarkSystem::LandmarkSystem(LandmarkParams p)
    : p_(std::move(p)),
      axis_(std::make_shared<DoubleIntegratorAxis>(p_.dt, p_.u_max, p_.d_p, p_.d_v, p_.region_lo,
                                                   p_.region_hi)) {
  if (p_.landmarks.empty()) throw DomainError("LandmarkSystem: no landmarks");
}

Box LandmarkSystem::control_box() const { return Box::centered(Vec::Zero(2), p_.u_max); }

Box LandmarkSystem::disturbance_box() const {
  Vec r(4);
  r << p_.d_p, p_.d_p, p_.d_v, p_.d_v;
  return Box::centered(Vec::Zero(4), r);
}

Vec LandmarkSystem::snapshot(const Vec& x) const {
  Vec y(snapshot_dim());
  const Eigen::Vector2d pos(x(0), x(1));
  for (int i = 0; i < snapshot_dim(); ++i) y(i) = (p_.landmarks[i] - pos).norm();
  return y;
}

Vec LandmarkSystem::step_unchecked(const Vec& x, const Vec& u, const Vec& d) const {
  Vec out(4);
  for (int a = 0; a < 2; ++a) {
    const double s[2] = {x(a), x(2 + a)};
    const double dd[2] = {d(a), d(2 + a)};
    double o[2];
    axis_->step_into(s, u(a), dd, o);
    out(a) = o[0];
    out(2 + a) = o[1];
  }
  return out;
}

double LandmarkSystem::constraint(const Vec& x) const {
  return std::min({x(0) - p_.region_lo, p_.region_hi - x(0), x(1) - p_.region_lo,
                   p_.region_hi - x(1)});
}

void LandmarkSystem::reference(double t, Eigen::Vector2d& p, Eigen::Vector2d& v,
                               Eigen::Vector2d& a) const {
  const double c = std::cos(p_.omega * t), s = std::sin(p_.omega * t);
  p = p_.center + p_.radius * Eigen::Vector2d(c, s);
  v = p_.radius * p_.omega * Eigen::Vector2d(-s, c);
  a = -p_.omega * p_.omega * p_.radius * Eigen::Vector2d(c, s);
}

Vec LandmarkSystem::reference_state(double t) const {
  Eigen::Vector2d p, v, a;
  reference(t, p, v, a);
  Vec x(4);
  x << p, v;
  return x;
}

Vec LandmarkSystem::nominal_control(const Vec& x_hat, double t) const {
  Eigen::Vector2d p, v, a;
  reference(t, p, v, a);
  Vec u(2);
  for (int i = 0; i < 2; ++i) {
    u(i) = a(i) + p_.kp * (p(i) - x_hat(i)) + p_.kd * (v(i) - x_hat(2 + i));
    u(i) = std::clamp(u(i), -p_.u_max, p_.u_max);
  }
  return u;
}

std::vector<FilterChannel> LandmarkSystem::channels() const {
  return {{{0, 2}, 0, axis_}, {{1, 3}, 1, axis_}};
}

std::vector<Vec> LandmarkSystem::initial_history(const Vec& x) const {
  std::vector<Vec> out;
  Vec cur = x;
  for (int k = 1; k < history_length(); ++k) {
    Vec prev = cur;
    prev(0) -= p_.dt * cur(2);
    prev(1) -= p_.dt * cur(3);
    out.push_back(prev);
    cur = prev;
  }
  return out;
}

// ------------------------------------------------------------------ taxi

TaxiSystem::TaxiSystem(TaxiParams p) : p_(std::move(p)), lateral_(std::make_shared<TaxiLateral>(p_)) {
  if (p_.obs_dim <= 0) throw DomainError("TaxiSystem: obs_dim must be positive");
  Rng rng(p_.feature_seed);
  mix_.resize(p_.obs_dim, 2);
  mix_bias_.resize(p_.obs_dim);
  for (int i = 0; i < p_.obs_dim; ++i) {
    mix_(i, 0) = rng.uniform(-2.0, 2.0);
    mix_(i, 1) = rng.uniform(-2.0, 2.0);
    mix_bias_(i) = rng.uniform(-0.5, 0.5);
  }
}

double TaxiSystem::rudder_deg_to_control(double deg) { return std::tan(deg * kDeg); }
double TaxiSystem::control_to_rudder_deg(double u) { return std::atan(u) / kDeg; }

Box TaxiSystem::control_box() const {
  return Box(Vec::Constant(1, lateral_->u_lo()), Vec::Constant(1, lateral_->u_hi()));
}

Box TaxiSystem::disturbance_box() const {
  Vec r(3);
  r << p_.d_x, p_.d_y, p_.d_theta;
  return Box::centered(Vec::Zero(3), r);
}

Vec TaxiSystem::snapshot(const Vec& x) const {
  const Vec s = (Vec(2) << x(1) / p_.cte_scale, x(2) / p_.he_scale).finished();
  return p_.feature_gain * (mix_ * s + mix_bias_).array().tanh().matrix();
}

Vec TaxiSystem::step_unchecked(const Vec& x, const Vec& u, const Vec& d) const {
  Vec out(3);
  out(0) = x(0) + p_.dt * (p_.speed * std::cos(x(2)) + d(0));
  const double s[2] = {x(1), x(2)};
  const double dd[2] = {d(1), d(2)};
  double o[2];
  lateral_->step_into(s, u(0), dd, o);
  out(1) = o[0];
  out(2) = o[1];
  return out;
}

double TaxiSystem::constraint(const Vec& x) const { return p_.cte_limit - std::abs(x(1)); }

Vec TaxiSystem::estimate_of(const Vec& x) const { return x.segment(1, 2); }

Vec TaxiSystem::nominal_control(const Vec& x_hat, double) const {
  double deg = p_.gain_cte * x_hat(0) + p_.gain_he * x_hat(1) / kDeg;
  deg = std::clamp(deg, -p_.max_rudder_deg, p_.max_rudder_deg);
  return Vec::Constant(1, std::clamp(rudder_deg_to_control(deg), lateral_->u_lo(), lateral_->u_hi()));
}

std::vector<FilterChannel> TaxiSystem::channels() const { return {{{0, 1}, 0, lateral_}}; }

}  // namespace guardian
