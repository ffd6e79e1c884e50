#include "guardian/rollout.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "guardian/attack.hpp"
#include "guardian/error.hpp"
#include "guardian/nnv.hpp"
#include "guardian/rng.hpp"
#include "parallel.hpp"

namespace guardian {

double TrajectoryLog::min_constraint() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : steps) m = std::min(m, r.constraint);
  return m;
}

int TrajectoryLog::infeasible_steps() const {
  int n = 0;
  for (const auto& r : steps) n += r.infeasible ? 1 : 0;
  return n;
}

int TrajectoryLog::active_steps() const {
  int n = 0;
  for (const auto& r : steps) n += r.active ? 1 : 0;
  return n;
}

int TrajectoryLog::containment_failures(const System& sys) const {
  int n = 0;
  for (const auto& r : steps) {
    if (r.has_xbar && !r.xbar.contains(sys.estimate_of(r.x), 1e-9)) ++n;
  }
  return n;
}

double TrajectoryLog::tracking_error(int index, double ref, double t_lo, double t_hi) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : steps) {
    if (r.time >= t_lo - 1e-9 && r.time <= t_hi + 1e-9) {
      sum += std::abs(r.x(index) - ref);
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

double TrajectoryLog::mean_estimation_error(const std::vector<int>& idx) const {
  if (steps.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : steps) {
    double sq = 0.0;
    for (int i : idx) sq += (r.x_hat(i) - r.x(i)) * (r.x_hat(i) - r.x(i));
    sum += std::sqrt(sq);
  }
  return sum / static_cast<double>(steps.size());
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

Vec sample_box(Rng& rng, const Box& b) {
  Vec v(b.dim());
  for (int i = 0; i < b.dim(); ++i) v(i) = rng.uniform(b.lower(i), b.upper(i));
  return v;
}

Vec gather(const Vec& v, const std::vector<int>& idx) {
  Vec out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out(k) = v(idx[k]);
  return out;
}

// Worst-case estimation error of a scalar estimator over [-1, 1) under +-eps.
// The observation is singular at x = 1, where the estimator is flattest.
double global_estimation_error(const Assets& a, double eps) {
  double worst = 0.0;
  const int n = 4001;
  for (int k = 0; k + 1 < n; ++k) {
    const double x = -1.0 + 2.0 * k / (n - 1);
    const Vec xv = Vec::Constant(1, x);
    const Box b = state_uncertainty_set(a.estimator, a.system->observe(xv), eps, Vec::Zero(1));
    worst = std::max({worst, b.upper(0) - x, x - b.lower(0)});
  }
  return worst;
}

}  // namespace

TrajectoryLog run_scenario(const Scenario& s, const Assets& a) {
  const System& sys = *a.system;
  if (s.x0.size() != sys.state_dim()) {
    throw DimensionError("scenario '" + s.name + "': initial state has length " +
                         std::to_string(s.x0.size()) + ", system needs " + std::to_string(sys.state_dim()));
  }
  TrajectoryLog log;
  log.scenario = s.name;
  log.system = sys.name();
  log.filter = to_string(s.filter) + (s.filter == FilterKind::Cbf ? ":" + to_string(s.cbf.variant) : "");
  log.eps = s.attack.eps;

  Rng dist_rng(substream_seed(s.seed, Stream::Disturbance));
  Rng noise_rng(substream_seed(s.seed, Stream::Disturbance, 1));
  const Box d_box = sys.disturbance_box();
  Box noise_box = sys.obs_noise_box();
  {
    Vec lo(sys.observation_dim()), hi(sys.observation_dim());
    for (int k = 0; k < sys.history_length(); ++k) {
      lo.segment(k * sys.snapshot_dim(), sys.snapshot_dim()) = noise_box.lower();
      hi.segment(k * sys.snapshot_dim(), sys.snapshot_dim()) = noise_box.upper();
    }
    noise_box = Box(lo, hi);
  }
  const bool noisy = !noise_box.is_degenerate();

  Vec offset = Vec::Zero(sys.observation_dim());
  if (s.attack_kind == AttackKind::Offset) {
    if (s.attack_offset.size() == 1) offset.setConstant(s.attack_offset(0));
    else if (s.attack_offset.size() == sys.observation_dim()) offset = s.attack_offset;
    else throw DimensionError("scenario '" + s.name + "': attack.offset length mismatch");
  }
  if (s.attack_kind == AttackKind::Pgd && s.attack_target.size() != sys.estimate_dim()) {
    throw DimensionError("scenario '" + s.name + "': attack.target must have estimate dimension");
  }

  std::unique_ptr<CbfFilter> cbf;
  if (s.filter == FilterKind::Cbf) {
    CbfConfig cfg = s.cbf;
    if (cfg.eps_global < 0.0) cfg.eps_global = global_estimation_error(a, s.attack.eps);
    cbf = std::make_unique<CbfFilter>(cfg);
  }
  const bool need_xbar = s.filter == FilterKind::Guardian ||
                         (s.filter == FilterKind::Cbf && s.cbf.variant == CbfVariant::MeasurementRobust);
  const NeighborhoodSpec nbhd = NeighborhoodSpec::from_grid(*a.grid, s.lattice_density);
  const Box u_box = sys.control_box();

  Vec x = s.x0;
  std::vector<Vec> hist{x};
  for (const Vec& p : sys.initial_history(x)) hist.push_back(p);

  for (int k = 0; k <= s.horizon; ++k) {
    try {
      const auto t_start = Clock::now();
      StepRecord r;
      r.step = k;
      r.time = s.t0 + k * sys.dt();
      r.x = x;
      const Vec noise = noisy ? sample_box(noise_rng, noise_box) : Vec::Zero(sys.observation_dim());
      r.y = sys.observe(hist, noise);

      Vec dy = Vec::Zero(r.y.size());
      if (s.attack_kind == AttackKind::Offset) {
        dy = offset;
      } else if (s.attack_kind == AttackKind::Pgd) {
        const auto t0 = Clock::now();
        dy = pgd_attack(a.estimator, r.y, s.attack_target, s.attack);
        r.sec_attack = seconds_since(t0);
      }
      r.perturbation_norm = dy.size() ? dy.cwiseAbs().maxCoeff() : 0.0;
      if (r.perturbation_norm > s.attack.eps) throw Error("perturbation exceeds eps");
      const Vec y_att = r.y + dy;
      r.x_hat = forward(a.estimator, y_att);

      if (need_xbar) {
        const auto t0 = Clock::now();
        r.xbar = state_uncertainty_set(a.estimator, y_att, s.attack.eps, a.est_err);
        r.has_xbar = true;
        r.sec_nnv = seconds_since(t0);
      }

      r.u_nominal = sys.nominal_control(r.x_hat, r.time);
      r.u_applied = r.u_nominal;
      r.phi_nominal = std::numeric_limits<double>::infinity();
      r.phi_applied = std::numeric_limits<double>::infinity();
      if (s.filter != FilterKind::None) {
        const auto t0 = Clock::now();
        std::string cones;
        for (const FilterChannel& ch : a.channels) {
          const double u_nom = r.u_nominal(ch.control_index);
          double u = u_nom;
          if (s.filter == FilterKind::HjNominal) {
            const auto d = nominal_filter(*a.grid, *ch.model, gather(r.x_hat, ch.estimate_indices), u_nom);
            u = d.u;
            r.active = r.active || d.active;
            r.phi_nominal = std::min(r.phi_nominal, d.q_nominal);
            r.phi_applied = std::min(r.phi_applied, d.q_applied);
          } else if (s.filter == FilterKind::Guardian) {
            const Box xb = r.xbar.slice(ch.estimate_indices);
            const auto d = guardian_filter(*a.grid, *ch.model, xb, u_nom, nbhd);
            u = d.u_applied;
            r.active = r.active || d.active;
            r.phi_nominal = std::min(r.phi_nominal, d.phi_nominal);
            r.phi_applied = std::min(r.phi_applied, d.phi_applied);
            r.asm2_ok = r.asm2_ok && d.asm2_ok;
            if (d.active) cones += (cones.empty() ? "" : "|") + to_string(d.cone);
          } else {
            const Box xb = r.has_xbar ? r.xbar : Box::point(r.x_hat);
            try {
              const CbfStep st = cbf->filter(r.x_hat(0), xb, u_nom);
              u = st.u;
            } catch (const InfeasibleError&) {
              r.infeasible = true;
              u = std::clamp(u_nom, ch.model->u_lo(), ch.model->u_hi());
            }
            r.active = r.active || (u != u_nom);
          }
          r.u_applied(ch.control_index) = u;
        }
        r.cone = cones;
        r.sec_filter = seconds_since(t0);
      }
      r.u_applied = u_box.clamp(r.u_applied);

      r.constraint = sys.constraint(x);
      r.value = std::numeric_limits<double>::infinity();
      const Vec xe = sys.estimate_of(x);
      for (const FilterChannel& ch : a.channels) {
        r.value = std::min(r.value, evaluate_value(*a.grid, *ch.model, gather(xe, ch.estimate_indices)));
      }

      if (k < s.horizon) {
        const Vec d = s.disturbance == DisturbanceMode::Uniform ? sample_box(dist_rng, d_box)
                                                                : Vec::Zero(sys.state_dim());
        x = sys.step(x, r.u_applied, d);
        hist.insert(hist.begin(), x);
        hist.pop_back();
      }
      r.sec_total = seconds_since(t_start);
      r.sec_other = r.sec_total - std::max(0.0, r.sec_attack) - std::max(0.0, r.sec_nnv) -
                    std::max(0.0, r.sec_filter);
      log.steps.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error("scenario '" + s.name + "' step " + std::to_string(k) + ": " + e.what());
    }
  }
  return log;
}

std::vector<std::string> csv_columns(const System& sys) {
  std::vector<std::string> c{"step", "time"};
  for (int i = 0; i < sys.state_dim(); ++i) c.push_back("x_" + std::to_string(i));
  for (int i = 0; i < sys.observation_dim(); ++i) c.push_back("y_" + std::to_string(i));
  c.push_back("perturbation_norm");
  for (int i = 0; i < sys.estimate_dim(); ++i) c.push_back("xhat_" + std::to_string(i));
  for (int i = 0; i < sys.estimate_dim(); ++i) c.push_back("xbar_lo_" + std::to_string(i));
  for (int i = 0; i < sys.estimate_dim(); ++i) c.push_back("xbar_hi_" + std::to_string(i));
  for (int i = 0; i < sys.control_dim(); ++i) c.push_back("u_nominal_" + std::to_string(i));
  for (int i = 0; i < sys.control_dim(); ++i) c.push_back("u_applied_" + std::to_string(i));
  for (const char* n : {"active", "phi_nominal", "phi_applied", "c", "v", "asm2_ok", "cone",
                        "infeasible", "sec_attack", "sec_nnv", "sec_filter", "sec_other", "sec_total"}) {
    c.push_back(n);
  }
  return c;
}

void write_trajectory_csv(const TrajectoryLog& log, const System& sys, const std::string& path) {
  std::ofstream o(path);
  if (!o) throw Error("write_trajectory_csv: cannot open '" + path + "'");
  o << std::setprecision(17);
  const auto cols = csv_columns(sys);
  o << "# scenario=" << log.scenario << " system=" << log.system << " filter=" << log.filter
    << " eps=" << log.eps << " columns:";
  for (const auto& c : cols) o << ' ' << c;
  o << '\n';
  for (std::size_t i = 0; i < cols.size(); ++i) o << (i ? "," : "") << cols[i];
  o << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto num = [&](double v) -> std::ostream& { return o << ',' << v; };
  for (const auto& r : log.steps) {
    o << r.step << ',' << r.time;
    for (Eigen::Index i = 0; i < r.x.size(); ++i) num(r.x(i));
    for (Eigen::Index i = 0; i < r.y.size(); ++i) num(r.y(i));
    num(r.perturbation_norm);
    for (Eigen::Index i = 0; i < r.x_hat.size(); ++i) num(r.x_hat(i));
    for (int i = 0; i < sys.estimate_dim(); ++i) num(r.has_xbar ? r.xbar.lower(i) : nan);
    for (int i = 0; i < sys.estimate_dim(); ++i) num(r.has_xbar ? r.xbar.upper(i) : nan);
    for (Eigen::Index i = 0; i < r.u_nominal.size(); ++i) num(r.u_nominal(i));
    for (Eigen::Index i = 0; i < r.u_applied.size(); ++i) num(r.u_applied(i));
    o << ',' << (r.active ? 1 : 0);
    num(r.phi_nominal);
    num(r.phi_applied);
    num(r.constraint);
    num(r.value);
    o << ',' << (r.asm2_ok ? 1 : 0) << ',' << r.cone << ',' << (r.infeasible ? 1 : 0);
    num(r.sec_attack < 0 ? nan : r.sec_attack);
    num(r.sec_nnv < 0 ? nan : r.sec_nnv);
    num(r.sec_filter < 0 ? nan : r.sec_filter);
    num(r.sec_other);
    num(r.sec_total);
    o << '\n';
  }
}

Vec project_into_set(const Vec& x, const Box& xbar) { return xbar.clamp(x); }

McSummary monte_carlo_rollouts(const Scenario& s, const Assets& a, const TrajectoryLog& ref, int n) {
  McSummary sum;
  sum.rollouts = std::max(0, n);
  if (n <= 0) return sum;
  if (ref.steps.empty()) throw DomainError("monte_carlo_rollouts: empty reference run");
  for (const auto& r : ref.steps) {
    if (!r.has_xbar) throw DomainError("monte_carlo_rollouts: reference run has no uncertainty sets");
  }
  for (const auto& r : ref.steps) {
    for (const FilterChannel& ch : a.channels) {
      const Box xb = r.xbar.slice(ch.estimate_indices);
      bool unsafe = false;
      for (const Vec& p : xb.lattice(s.lattice_density)) {
        if (evaluate_value(*a.grid, *ch.model, p) < 0.0) {
          unsafe = true;
          break;
        }
      }
      if (unsafe) {
        ++sum.steps_xbar_unsafe;
        break;
      }
    }
  }
  std::vector<char> violated(static_cast<std::size_t>(n), 0);
  detail::parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    Rng rng(substream_seed(s.seed, Stream::MonteCarlo, i));
    for (const FilterChannel& ch : a.channels) {
      const SafetyModel& m = *ch.model;
      const Box d_box = m.disturbance_box();
      Vec xs = sample_box(rng, ref.steps[0].xbar.slice(ch.estimate_indices));
      Vec nx(m.dim());
      bool bad = m.constraint(xs) < 0.0;
      for (std::size_t t = 0; t + 1 < ref.steps.size() && !bad; ++t) {
        const double u = ref.steps[t].u_applied(ch.control_index);
        const Vec d = sample_box(rng, d_box);
        m.step_into(xs.data(), u, d.data(), nx.data());
        xs = project_into_set(nx, ref.steps[t + 1].xbar.slice(ch.estimate_indices));
        bad = m.constraint(xs) < 0.0;
      }
      if (bad) {
        violated[i] = 1;
        break;
      }
    }
  });
  for (char v : violated) sum.violations += v;
  sum.fraction = static_cast<double>(sum.violations) / n;
  return sum;
}

namespace {

PhaseStats stats(const std::vector<double>& v) {
  PhaseStats p;
  p.count = static_cast<int>(v.size());
  if (v.empty()) return p;
  double s = 0.0;
  for (double x : v) s += x;
  p.mean = s / v.size();
  double q = 0.0;
  for (double x : v) q += (x - p.mean) * (x - p.mean);
  p.stddev = v.size() > 1 ? std::sqrt(q / (v.size() - 1)) : 0.0;
  return p;
}

}  // namespace

TimingReport timing_report(const TrajectoryLog& log) {
  std::vector<double> total, attack, nnv, filter, other;
  for (const auto& r : log.steps) {
    total.push_back(r.sec_total);
    other.push_back(r.sec_other);
    if (r.sec_attack >= 0) attack.push_back(r.sec_attack);
    if (r.sec_nnv >= 0) nnv.push_back(r.sec_nnv);
    if (r.sec_filter >= 0) filter.push_back(r.sec_filter);
  }
  TimingReport t;
  t.total = stats(total);
  t.attack = stats(attack);
  t.nnv = stats(nnv);
  t.filter = stats(filter);
  t.other = stats(other);
  return t;
}

}  // namespace guardian
