// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "guardian/attack.hpp"
#include "guardian/experiments.hpp"
#include "guardian/filter.hpp"
#include "guardian/hj.hpp"
#include "guardian/nnv.hpp"
#include "guardian/rng.hpp"
#include "guardian/rollout.hpp"
#include "guardian/scenario.hpp"
#include "guardian/sensitivity.hpp"

using namespace guardian;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string config_path(const std::string& name) { return std::string(GUARDIAN_CONFIG_DIR) + "/" + name; }

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec sample(Rng& rng, const Box& b) {
  Vec z(b.dim());
  for (int i = 0; i < b.dim(); ++i) z(i) = rng.uniform(b.lower(i), b.upper(i));
  return z;
}

Box random_box(Rng& rng, int n, double center_r, double max_radius) {
  Vec lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    const double c = rng.uniform(-center_r, center_r);
    const double r = rng.uniform(0.0, max_radius);
    lo(i) = c - r;
    hi(i) = c + r;
  }
  return Box(lo, hi);
}

Activation pick(Rng& rng) {
  switch (rng.below(3)) {
    case 0: return Activation::Relu;
    case 1: return Activation::Tanh;
    default: return Activation::Sigmoid;
  }
}

// ---------------------------------------------------------------------------

Outcome nnv_soundness() {
  Rng rng(20240601);
  const int n_cases = 100000;
  int violations = 0;
  for (int k = 0; k < n_cases; ++k) {
    const int in = 1 + static_cast<int>(rng.below(4));
    const int h = 2 + static_cast<int>(rng.below(7));
    const int out = 1 + static_cast<int>(rng.below(3));
    const int depth = 1 + static_cast<int>(rng.below(3));
    std::vector<int> dims{in};
    for (int l = 0; l < depth; ++l) dims.push_back(h);
    dims.push_back(out);
    const auto m = MlpModel::random(dims, pick(rng), 1000000 + k);
    const Box dom = random_box(rng, in, 2.0, 1.0);
    CrownOptions opt;
    opt.backward_intermediate = (k % 2) == 1;
    const auto lb = crown_bounds(m, dom, opt);
    const Box set = state_uncertainty_set(m, dom.center(), dom.width().maxCoeff() / 2, Vec::Zero(out));
    const Box box = concretize(lb);
    const Vec z = sample(rng, dom);
    const Vec y = forward(m, z);
    const Vec l = lb.psi * z + lb.alpha, u = lb.xi * z + lb.beta;
    for (int i = 0; i < out; ++i) {
      const bool bad = y(i) < box.lower(i) || y(i) > box.upper(i) || y(i) < l(i) - 1e-12 ||
                       y(i) > u(i) + 1e-12;
      if (bad) ++violations;
    }
    // Uncertainty set over the cube of half-width max radius around the box centre.
    const Box cube = Box::centered(dom.center(), dom.width().maxCoeff() / 2);
    const Vec zc = sample(rng, cube);
    if (!set.contains(forward(m, zc))) ++violations;
  }
  double affine_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int in = 1 + static_cast<int>(rng.below(5));
    Layer a{Mat::Random(5, in), Vec::Random(5), Activation::Identity};
    Layer b{Mat::Random(3, 5), Vec::Random(3), Activation::Identity};
    const MlpModel m(in, {a, b});
    const Mat w = b.weight * a.weight;
    const Vec c = b.weight * a.bias + b.bias;
    const Box dom = random_box(rng, in, 1.0, 0.5);
    const auto lb = crown_bounds(m, dom);
    affine_err = std::max({affine_err, (lb.psi - w).cwiseAbs().maxCoeff(), (lb.xi - w).cwiseAbs().maxCoeff(),
                           (lb.alpha - c).cwiseAbs().maxCoeff(), (lb.beta - c).cwiseAbs().maxCoeff()});
    // Exact range of the affine map over the box.
    const Box out = concretize(lb);
    const Vec mid = w * dom.center() + c;
    const Vec rad = w.cwiseAbs() * (dom.width() / 2);
    affine_err = std::max({affine_err, (out.lower() - (mid - rad)).cwiseAbs().maxCoeff(),
                           (out.upper() - (mid + rad)).cwiseAbs().maxCoeff()});
  }
  return {violations == 0 && affine_err <= 1e-9,
          fmt("%d cases, %d containment violations; affine max error %.2e", n_cases, violations, affine_err)};
}

Outcome gradient_correctness() {
  Rng rng(11);
  const double h = 1e-5;
  int bad = 0;
  double worst = 0.0;
  const int n_cases = 200;
  for (int k = 0; k < n_cases; ++k) {
    const int in = 2 + static_cast<int>(rng.below(5));
    const int out = 1 + static_cast<int>(rng.below(3));
    const Activation act = rng.below(2) ? Activation::Tanh : Activation::Sigmoid;
    const auto m = MlpModel::random({in, 8, 6, out}, act, 700 + k);
    Vec z(in), t(out);
    for (int i = 0; i < in; ++i) z(i) = rng.uniform(-1.5, 1.5);
    for (int i = 0; i < out; ++i) t(i) = rng.uniform(-1, 1);
    auto loss = [&](const Vec& v) { return (forward(m, v) - t).squaredNorm() / out; };
    const Vec g = grad_input(m, z, t);
    Vec fd(in);
    for (int i = 0; i < in; ++i) {
      Vec zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      fd(i) = (loss(zp) - loss(zm)) / (2 * h);
    }
    const double rel = (g - fd).norm() / std::max(fd.norm(), 1e-8);
    worst = std::max(worst, rel);
    if (rel > 1e-4) ++bad;
  }
  return {bad == 0, fmt("%d cases, worst relative error %.2e", n_cases, worst)};
}

Outcome hj_scalar() {
  const auto t0 = Clock::now();
  const ScalarModel m;
  GridSpec s;
  s.axes = {GridAxis{-1.5, 1.5, 31}};
  s.n_u = 41;
  const ValueGrid g = value_iteration(m, s, 1e-4, 500);
  const double secs = seconds_since(t0);
  // Zero-level set: outermost nonnegative nodes on each side.
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t k = 0; k < g.values().size(); ++k) {
    if (g.values()[k] >= 0.0) {
      lo = std::min(lo, g.spec().node(k)(0));
      hi = std::max(hi, g.spec().node(k)(0));
    }
  }
  const double h = s.axes[0].spacing();
  const bool ok = g.converged && g.residual <= 1e-4 && std::abs(lo + 1.0) <= h && std::abs(hi - 1.0) <= h &&
                  secs < 10.0;
  return {ok, fmt("safe nodes [%.3f, %.3f], cell %.3f, residual %.1e after %d sweeps, %.2f s", lo, hi, h,
                  g.residual, g.iterations, secs)};
}

Outcome hj_double_integrator() {
  const double p_max = 5.0, u_max = 5.0;
  const DoubleIntegratorAxis m(0.1, u_max, 1e-5, 1e-5, -p_max, p_max);
  GridSpec s;
  s.axes = {GridAxis{-6, 6, 121}, GridAxis{-12, 12, 121}};
  const ValueGrid g = value_iteration(m, s);
  // Analytic viability: |p| <= p_max and the braking stop point within limits.
  auto margin = [&](double p, double v) {
    const double stop = p + v * std::abs(v) / (2 * u_max);
    return std::min({p_max - std::abs(p), p_max - stop, stop + p_max});
  };
  const double hp = s.axes[0].spacing(), hv = s.axes[1].spacing();
  int mismatches = 0, far = 0;
  for (std::size_t k = 0; k < g.values().size(); ++k) {
    const Vec x = s.node(k);
    const bool safe = g.values()[k] >= 0.0;
    if (safe == (margin(x(0), x(1)) >= 0.0)) continue;
    ++mismatches;
    // The analytic boundary must pass within one cell of the node.
    bool near = false;
    for (int i = -10; i <= 10 && !near; ++i) {
      for (int j = -10; j <= 10 && !near; ++j) {
        const double mm = margin(x(0) + hp * i / 10.0, x(1) + hv * j / 10.0);
        near = (mm >= 0.0) == safe;
      }
    }
    if (!near) ++far;
  }
  return {g.converged && far == 0,
          fmt("%zu nodes, %d differ from the envelope, %d of them farther than one cell; residual %.1e",
              g.values().size(), mismatches, far, g.residual)};
}

Outcome scalar_eps01() {
  const auto t0 = Clock::now();
  Scenario s = load_scenario(config_path("scalar_eps0.1.toml"));
  const Assets a = prepare_assets(s);
  const double ref = s.scalar.ref_after;
  auto run = [&](const std::string& filter) {
    Scenario si = s;
    parse_filter(filter, si.filter, si.cbf.variant);
    return run_scenario(si, a);
  };
  const auto g = run("guardian"), rqp = run("cbf:r-qp"), r = run("cbf:r"), mr = run("cbf:mr");
  const double eg = g.tracking_error(0, ref, 10, 15);
  const double er = r.tracking_error(0, ref, 10, 15);
  const double emr = mr.tracking_error(0, ref, 10, 15);
  double rqp_min = INFINITY;
  for (const auto& st : rqp.steps) rqp_min = std::min(rqp_min, st.x(0));
  const double secs = seconds_since(t0);
  const bool ok = !g.left_safe_set() && rqp_min < -1.0 && !r.left_safe_set() && !mr.left_safe_set() &&
                  er > eg && emr > eg && secs < 60.0;
  return {ok, fmt("guardian min c %.3f, r-qp min x %.3f, r min c %.3f, mr min c %.3f; "
                  "error on [10,15]: guardian %.3f, r %.3f, mr %.3f; %.1f s",
                  g.min_constraint(), rqp_min, r.min_constraint(), mr.min_constraint(), eg, er, emr, secs)};
}

Outcome scalar_eps02() {
  Scenario s = load_scenario(config_path("scalar_eps0.2.toml"));
  const Assets a = prepare_assets(s);
  auto run = [&](const std::string& filter) {
    Scenario si = s;
    parse_filter(filter, si.filter, si.cbf.variant);
    return run_scenario(si, a);
  };
  const auto g = run("guardian"), r = run("cbf:r"), rqp = run("cbf:r-qp"), mr = run("cbf:mr");
  const bool ok = !g.left_safe_set() && r.left_safe_set() && rqp.left_safe_set() && mr.infeasible_steps() >= 1;
  return {ok, fmt("guardian min c %.3f, r min c %.3f, r-qp min c %.3f, mr infeasible steps %d",
                  g.min_constraint(), r.min_constraint(), rqp.min_constraint(), mr.infeasible_steps())};
}

struct LandmarkSetup {
  Scenario s;
  Assets a;
};

LandmarkSetup landmark_setup(const char* file) {
  LandmarkSetup l;
  l.s = load_scenario(config_path(file));
  const auto sys = make_system(l.s);
  const TrainedEstimator est = train_estimator(*sys, l.s.recipe, l.s.seed);
  l.a = prepare_assets(l.s, &est.model, &est.meta.est_err, nullptr);
  return l;
}

LandmarkSetup* g_triangle = nullptr;

Outcome landmark_reproduction() {
  const auto t0 = Clock::now();
  std::ostringstream d;
  bool ok = true;
  double err[2] = {0, 0};
  static LandmarkSetup tri;
  int idx = 0;
  for (const char* file : {"landmark_square.toml", "landmark_triangle.toml"}) {
    LandmarkSetup l = landmark_setup(file);
    Scenario hj = l.s, gd = l.s;
    hj.filter = FilterKind::HjNominal;
    gd.filter = FilterKind::Guardian;
    const BatchResult rh = run_reference_batch(hj, l.a, l.s.rollouts);
    const BatchResult rg = run_reference_batch(gd, l.a, l.s.rollouts);
    ok = ok && rh.exits >= 1 && rg.exits == 0;
    err[idx] = rg.mean_error;
    d << l.s.name << ": hj-nominal " << rh.exits << "/" << rh.rollouts << " exit, guardian " << rg.exits << "/"
      << rg.rollouts << " exit, mean error " << fmt("%.3f", rg.mean_error) << "; ";
    if (idx == 1) {
      tri = std::move(l);
      g_triangle = &tri;
    }
    ++idx;
  }
  const double secs = seconds_since(t0);
  ok = ok && err[1] > err[0] && secs < 600.0;
  d << fmt("%.0f s including training", secs);
  return {ok, d.str()};
}

Outcome heatmap_trend() {
  if (!g_triangle) {
    static LandmarkSetup tri = landmark_setup("landmark_triangle.toml");
    g_triangle = &tri;
  }
  const auto* sys = dynamic_cast<const LandmarkSystem*>(g_triangle->a.system.get());
  const GridSpec grid = heatmap_grid(*sys, 20);
  const double eps = g_triangle->s.attack.eps;
  const auto fim = fim_heatmap(*sys, grid, eps);
  const auto vol = nnv_heatmap(g_triangle->a.estimator, *sys, grid, eps);
  const double rho = spearman(fim.values, vol.values);
  return {rho >= 0.5, fmt("spearman(fim_kappa, nnv_volume) = %.4f over %zu cells", rho, grid.node_count())};
}

Outcome taxi_reproduction() {
  Scenario s = load_scenario(config_path("taxi.toml"));
  const auto sys = make_system(s);
  const TrainedEstimator est = train_estimator(*sys, s.recipe, s.seed);
  const Assets a = prepare_assets(s, &est.model, &est.meta.est_err, nullptr);
  Scenario none = s, gd = s;
  none.filter = FilterKind::None;
  gd.filter = FilterKind::Guardian;
  const auto ln = run_scenario(none, a);
  const auto lg = run_scenario(gd, a);
  const auto mc = monte_carlo_rollouts(gd, a, lg, 10000);
  double worst_step = 0.0;
  for (const auto& r : lg.steps) worst_step = std::max(worst_step, std::max(0.0, r.sec_nnv) + std::max(0.0, r.sec_filter));
  const bool ok = ln.left_safe_set() && !lg.left_safe_set() && mc.violations == 0 && worst_step <= 0.1;
  return {ok, fmt("unfiltered min c %.3f, guardian min c %.3f, MC %d/%d violations, worst filter step %.4f s",
                  ln.min_constraint(), lg.min_constraint(), mc.violations, mc.rollouts, worst_step)};
}

Outcome degenerate_reduction() {
  // Scalar system through the full pipeline: observation, exact estimator, eps = 0.
  const ScalarSystem sys;
  const auto est = ScalarSystem::exact_estimator();
  const ScalarModel& m = *std::static_pointer_cast<const ScalarModel>(sys.channels().front().model);
  GridSpec sg;
  sg.axes = {GridAxis{-1.5, 1.5, 31}};
  const ValueGrid g = value_iteration(m, sg);
  const NeighborhoodSpec nb = NeighborhoodSpec::from_grid(g);
  // Double integrator axis with point estimates.
  const DoubleIntegratorAxis di;
  GridSpec dg;
  dg.axes = {GridAxis{-1, 11, 61}, GridAxis{-12, 12, 61}};
  const ValueGrid gd = value_iteration(di, dg);
  const NeighborhoodSpec nbd = NeighborhoodSpec::from_grid(gd);

  Rng rng(31337);
  int differ = 0, active = 0;
  const int n = 1000;
  for (int k = 0; k < n; ++k) {
    const double x = rng.uniform(-1.2, 0.99);
    const Vec y = sys.observe(Vec::Constant(1, x));
    const Box xbar = state_uncertainty_set(est, y, 0.0, Vec::Zero(1));
    const Vec xh = forward(est, y);
    const double u_nom = rng.uniform(m.u_lo(), m.u_hi());
    const auto a = guardian_filter(g, m, xbar, u_nom, nb);
    const auto b = nominal_filter(g, m, xh, u_nom);
    if (a.u_applied != b.u || a.active != b.active) ++differ;
    active += b.active;

    Vec s(2);
    s << rng.uniform(-0.5, 10.5), rng.uniform(-8, 8);
    const double v_nom = rng.uniform(di.u_lo(), di.u_hi());
    const auto c = guardian_filter(gd, di, Box::point(s), v_nom, nbd);
    const auto e = nominal_filter(gd, di, s, v_nom);
    if (c.u_applied != e.u || c.active != e.active) ++differ;
    active += e.active;
  }
  return {differ == 0, fmt("%d states per system, %d differing decisions, %d overrides", n, differ, active)};
}

Outcome cone_properties() {
  const ScalarModel m;
  GridSpec sg;
  sg.axes = {GridAxis{-1.5, 1.5, 31}};
  const ValueGrid g = value_iteration(m, sg);
  const NeighborhoodSpec nb = NeighborhoodSpec::from_grid(g);
  const DoubleIntegratorAxis di;
  GridSpec dg;
  dg.axes = {GridAxis{-1, 11, 61}, GridAxis{-12, 12, 61}};
  const ValueGrid gd = value_iteration(di, dg);
  const NeighborhoodSpec nbd = NeighborhoodSpec::from_grid(gd);

  Rng rng(4242);
  int boxes = 0, mono_viol = 0, extreme_checked = 0, extreme_viol = 0, tries = 0;
  double worst = 0.0;
  auto examine = [&](const ValueGrid& grid, const SafetyModel& model, const NeighborhoodSpec& n, const Box& b) {
    const Cone cone = check_safe_cone(grid, model, b, n);
    if (cone != Cone::NonNeg && cone != Cone::NonPos) return;
    ++boxes;
    const double tol = grid.cell_variation();
    const auto us = control_samples(model, grid.spec().n_u);
    double prev = phi(grid, model, b, us[0], n.lattice_density);
    for (std::size_t i = 1; i < us.size(); ++i) {
      const double cur = phi(grid, model, b, us[i], n.lattice_density);
      const double drop = cone == Cone::NonNeg ? prev - cur : cur - prev;
      worst = std::max(worst, drop);
      if (drop > tol) ++mono_viol;
      prev = cur;
    }
    double best = 0.0;
    const double u = guardian_control(grid, model, b, n.lattice_density, nullptr, &best);
    if (best < 0.0) {
      ++extreme_checked;
      const double want = cone == Cone::NonNeg ? model.u_hi() : model.u_lo();
      if (u != want) ++extreme_viol;
    }
  };
  while (boxes < 200 && tries < 100000) {
    ++tries;
    if (tries % 2) {
      const double c = rng.uniform(-1.3, 1.3), w = rng.uniform(0.0, 0.3);
      examine(g, m, nb, Box(Vec::Constant(1, c - w / 2), Vec::Constant(1, c + w / 2)));
    } else {
      Vec lo(2), hi(2);
      lo << rng.uniform(-0.5, 10.5), rng.uniform(-9, 9);
      hi << lo(0) + rng.uniform(0, 0.4), lo(1) + rng.uniform(0, 0.8);
      examine(gd, di, nbd, Box(lo, hi));
    }
  }
  const bool ok = boxes >= 200 && mono_viol == 0 && extreme_viol == 0;
  return {ok, fmt("%d boxes with a definite cone, %d monotonicity violations (worst step %.2e), "
                  "extreme control %d/%d",
                  boxes, mono_viol, worst, extreme_checked - extreme_viol, extreme_checked)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"nnv-soundness", nnv_soundness},
      {"gradient-correctness", gradient_correctness},
      {"hj-oracle-scalar", hj_scalar},
      {"hj-oracle-double-integrator", hj_double_integrator},
      {"scalar-eps-0.1", scalar_eps01},
      {"scalar-eps-0.2", scalar_eps02},
      {"landmark-attack", landmark_reproduction},
      {"heatmap-trend", heatmap_trend},
      {"taxi-attack", taxi_reproduction},
      {"degenerate-reduction", degenerate_reduction},
      {"cone-properties", cone_properties},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
