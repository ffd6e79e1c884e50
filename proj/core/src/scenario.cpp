#include "guardian/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "guardian/error.hpp"
#include "guardian/nnv.hpp"

namespace guardian {

std::string to_string(FilterKind f) {
  switch (f) {
    case FilterKind::None: return "none";
    case FilterKind::HjNominal: return "hj-nominal";
    case FilterKind::Guardian: return "guardian";
    case FilterKind::Cbf: return "cbf";
  }
  return "none";
}

void parse_filter(const std::string& s, FilterKind& kind, CbfVariant& variant) {
  if (s == "none") kind = FilterKind::None;
  else if (s == "hj-nominal") kind = FilterKind::HjNominal;
  else if (s == "guardian") kind = FilterKind::Guardian;
  else if (s.rfind("cbf:", 0) == 0) {
    kind = FilterKind::Cbf;
    variant = cbf_variant_from_string(s.substr(4));
  } else {
    throw ParseError("unknown filter '" + s + "'");
  }
}

namespace {

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

GridSpec default_grid(const std::string& system) {
  GridSpec g;
  if (system == "scalar") g.axes = {{-1.5, 1.5, 31}};
  else if (system == "landmark") g.axes = {{-1.0, 11.0, 121}, {-12.0, 12.0, 121}};
  else g.axes = {{-12.0, 12.0, 81}, {-0.8, 0.8, 81}};
  return g;
}

}  // namespace

Scenario scenario_from_config(const Config& c) {
  Scenario s;
  s.config_hash = c.hash();
  s.name = c.get_string("scenario.name", s.name);
  s.system = c.get_string("scenario.system");
  if (s.system != "scalar" && s.system != "landmark" && s.system != "taxi") {
    throw ParseError(c.source() + ": unknown system '" + s.system + "'");
  }
  s.horizon = static_cast<int>(c.get_int("scenario.horizon", s.horizon));
  s.seed = static_cast<std::uint64_t>(c.get_int("scenario.seed", 0));
  CbfVariant variant = CbfVariant::Plain;
  parse_filter(c.get_string("scenario.filter", "none"), s.filter, variant);
  s.cbf.variant = variant;
  const std::string dist = c.get_string("scenario.disturbance", "uniform");
  if (dist == "uniform") s.disturbance = DisturbanceMode::Uniform;
  else if (dist == "zero") s.disturbance = DisturbanceMode::Zero;
  else throw ParseError(c.source() + ": unknown disturbance mode '" + dist + "'");
  s.mc_rollouts = static_cast<int>(c.get_int("scenario.mc_rollouts", s.mc_rollouts));
  s.rollouts = static_cast<int>(c.get_int("scenario.rollouts", s.rollouts));

  if (s.system == "scalar") {
    auto& p = s.scalar;
    p.dt = c.get_double("system.dt", p.dt);
    p.u_lo = c.get_double("system.u_lo", p.u_lo);
    p.u_hi = c.get_double("system.u_hi", p.u_hi);
    p.d_max = c.get_double("system.d_max", p.d_max);
    p.d_obs = c.get_double("system.d_obs", p.d_obs);
    p.switch_time = c.get_double("system.switch_time", p.switch_time);
    p.ref_before = c.get_double("system.ref_before", p.ref_before);
    p.ref_after = c.get_double("system.ref_after", p.ref_after);
  } else if (s.system == "landmark") {
    auto& p = s.landmark;
    p.dt = c.get_double("system.dt", p.dt);
    p.u_max = c.get_double("system.u_max", p.u_max);
    p.d_p = c.get_double("system.d_p", p.d_p);
    p.d_v = c.get_double("system.d_v", p.d_v);
    p.region_lo = c.get_double("system.region_lo", p.region_lo);
    p.region_hi = c.get_double("system.region_hi", p.region_hi);
    if (c.has("system.landmarks")) {
      p.landmarks.clear();
      for (const auto& row : c.get_matrix("system.landmarks")) {
        if (row.size() != 2) throw ParseError(c.source() + ": landmarks must be [x, y] pairs");
        p.landmarks.emplace_back(row[0], row[1]);
      }
    }
    const auto ctr = c.get_doubles("system.center", {p.center.x(), p.center.y()});
    if (ctr.size() != 2) throw ParseError(c.source() + ": system.center must have 2 entries");
    p.center = {ctr[0], ctr[1]};
    p.radius = c.get_double("system.radius", p.radius);
    p.omega = c.get_double("system.omega", p.omega);
    p.kp = c.get_double("system.kp", p.kp);
    p.kd = c.get_double("system.kd", p.kd);
  } else {
    auto& p = s.taxi;
    p.speed = c.get_double("system.speed", p.speed);
    p.wheelbase = c.get_double("system.wheelbase", p.wheelbase);
    p.dt = c.get_double("system.dt", p.dt);
    p.max_rudder_deg = c.get_double("system.max_rudder_deg", p.max_rudder_deg);
    p.d_x = c.get_double("system.d_x", p.d_x);
    p.d_y = c.get_double("system.d_y", p.d_y);
    p.d_theta = c.get_double("system.d_theta", p.d_theta);
    p.cte_limit = c.get_double("system.cte_limit", p.cte_limit);
    p.gain_cte = c.get_double("system.gain_cte", p.gain_cte);
    p.gain_he = c.get_double("system.gain_he", p.gain_he);
    p.obs_dim = static_cast<int>(c.get_int("system.obs_dim", p.obs_dim));
    p.feature_gain = c.get_double("system.feature_gain", p.feature_gain);
    p.feature_seed = static_cast<std::uint64_t>(c.get_int("system.feature_seed", static_cast<std::int64_t>(p.feature_seed)));
    p.cte_scale = c.get_double("system.cte_scale", p.cte_scale);
    p.he_scale = c.get_double("system.he_scale", p.he_scale);
  }

  s.estimator_kind = c.get_string("estimator.kind", s.system == "scalar" ? "exact" : "mlp");
  if (s.estimator_kind != "exact" && s.estimator_kind != "mlp") {
    throw ParseError(c.source() + ": estimator.kind must be 'exact' or 'mlp'");
  }
  if (s.estimator_kind == "exact" && s.system != "scalar") {
    throw ParseError(c.source() + ": the exact estimator exists only for the scalar system");
  }
  if (c.has("estimator.model")) s.model_path = c.get_path("estimator.model");
  if (c.has("estimator.est_err")) s.est_err = to_vec(c.get_doubles("estimator.est_err"));

  auto& r = s.recipe;
  if (c.has("training.hidden")) {
    r.hidden.clear();
    for (double h : c.get_doubles("training.hidden")) r.hidden.push_back(static_cast<int>(h));
  }
  if (c.has("training.activation")) r.activation = activation_from_string(c.get_string("training.activation"));
  r.samples = static_cast<int>(c.get_int("training.samples", r.samples));
  r.validation = static_cast<int>(c.get_int("training.validation", r.validation));
  r.train.epochs = static_cast<int>(c.get_int("training.epochs", r.train.epochs));
  r.train.batch_size = static_cast<int>(c.get_int("training.batch_size", r.train.batch_size));
  r.train.learning_rate = c.get_double("training.learning_rate", r.train.learning_rate);
  r.train.seed = static_cast<std::uint64_t>(c.get_int("training.seed", static_cast<std::int64_t>(s.seed)));
  const std::string opt = c.get_string("training.optimizer", "adam");
  if (opt == "adam") r.train.optimizer = Optimizer::Adam;
  else if (opt == "sgd") r.train.optimizer = Optimizer::Sgd;
  else throw ParseError(c.source() + ": unknown optimizer '" + opt + "'");
  r.safety_factor = c.get_double("training.safety_factor", r.safety_factor);
  r.velocity_range = c.get_double("training.velocity_range", r.velocity_range);
  r.position_margin = c.get_double("training.position_margin", r.position_margin);
  r.cte_range = c.get_double("training.cte_range", r.cte_range);
  r.he_range = c.get_double("training.he_range", r.he_range);

  const std::string ak = c.get_string("attack.kind", "none");
  if (ak == "none") s.attack_kind = AttackKind::None;
  else if (ak == "offset") s.attack_kind = AttackKind::Offset;
  else if (ak == "pgd") s.attack_kind = AttackKind::Pgd;
  else throw ParseError(c.source() + ": unknown attack kind '" + ak + "'");
  s.attack.eps = c.get_double("attack.eps", 0.0);
  s.attack.step_alpha = c.get_double("attack.alpha", -1.0);
  s.attack.n_iters = static_cast<int>(c.get_int("attack.iters", -1));
  if (c.has("attack.offset")) s.attack_offset = to_vec(c.get_doubles("attack.offset"));
  if (c.has("attack.target")) s.attack_target = to_vec(c.get_doubles("attack.target"));
  if (s.attack.eps < 0.0) throw ParseError(c.source() + ": attack.eps must be >= 0");
  if (s.attack_kind == AttackKind::Offset) {
    if (s.attack_offset.size() == 0) throw ParseError(c.source() + ": offset attack needs attack.offset");
    if (s.attack_offset.cwiseAbs().maxCoeff() > s.attack.eps) {
      throw ParseError(c.source() + ": attack.offset exceeds attack.eps");
    }
  }

  s.lattice_density = static_cast<int>(c.get_int("filter.lattice_density", s.lattice_density));

  s.cbf.gamma = c.get_double("cbf.gamma", s.cbf.gamma);
  s.cbf.lipschitz = c.get_double("cbf.lipschitz", s.cbf.lipschitz);
  s.cbf.theta_min = c.get_double("cbf.theta_min", s.cbf.theta_min);
  s.cbf.adapt_rate = c.get_double("cbf.adapt_rate", s.cbf.adapt_rate);
  s.cbf.eps_global = c.get_double("cbf.eps_global", -1.0);
  s.cbf.dt = s.scalar.dt;
  s.cbf.u_lo = s.scalar.u_lo;
  s.cbf.u_hi = s.scalar.u_hi;
  s.cbf.d_max = s.scalar.d_max;
  if (s.filter == FilterKind::Cbf && s.system != "scalar") {
    throw ParseError(c.source() + ": CBF baselines are defined for the scalar system only");
  }

  s.grid = default_grid(s.system);
  if (c.has("grid.lo") || c.has("grid.hi") || c.has("grid.nodes")) {
    const auto lo = c.get_doubles("grid.lo");
    const auto hi = c.get_doubles("grid.hi");
    const auto n = c.get_doubles("grid.nodes");
    if (lo.size() != hi.size() || lo.size() != n.size()) {
      throw ParseError(c.source() + ": grid.lo/hi/nodes lengths differ");
    }
    s.grid.axes.clear();
    for (std::size_t a = 0; a < lo.size(); ++a) s.grid.axes.push_back({lo[a], hi[a], static_cast<int>(n[a])});
  }
  s.grid.n_u = static_cast<int>(c.get_int("grid.n_u", s.grid.n_u));
  s.grid.validate();
  s.hj_tol = c.get_double("grid.tol", s.hj_tol);
  s.hj_max_iters = static_cast<int>(c.get_int("grid.max_iters", s.hj_max_iters));
  if (c.has("grid.file")) s.grid_path = c.get_path("grid.file");

  if (c.has("initial.state")) s.x0 = to_vec(c.get_doubles("initial.state"));
  s.t0 = c.get_double("initial.time", 0.0);
  s.initial_spread = c.get_double("initial.spread", s.initial_spread);
  return s;
}

Scenario load_scenario(const std::string& path) { return scenario_from_config(Config::load(path)); }

std::shared_ptr<const System> make_system(const Scenario& s) {
  if (s.system == "scalar") return std::make_shared<ScalarSystem>(s.scalar);
  if (s.system == "landmark") return std::make_shared<LandmarkSystem>(s.landmark);
  if (s.system == "taxi") return std::make_shared<TaxiSystem>(s.taxi);
  throw DomainError("unknown system '" + s.system + "'");
}

namespace {

std::string meta_path(const std::string& model_path) { return model_path + ".meta"; }

void write_vec(std::ostream& o, const char* key, const Vec& v) {
  o << key << " = [";
  for (Eigen::Index i = 0; i < v.size(); ++i) o << (i ? ", " : "") << v(i);
  o << "]\n";
}

}  // namespace

void save_estimator_meta(const EstimatorMeta& m, const std::string& model_path) {
  std::ofstream o(meta_path(model_path));
  if (!o) throw Error("cannot write estimator sidecar for '" + model_path + "'");
  o << std::setprecision(17);
  o << "# measured on held-out data\n";
  write_vec(o, "est_err", m.est_err);
  write_vec(o, "val_max_error", m.val_max_error);
  write_vec(o, "val_rmse", m.val_rmse);
  o << "final_loss = " << m.final_loss << "\n";
}

EstimatorMeta load_estimator_meta(const std::string& model_path) {
  const Config c = Config::load(meta_path(model_path));
  EstimatorMeta m;
  m.est_err = to_vec(c.get_doubles("est_err"));
  m.val_max_error = to_vec(c.get_doubles("val_max_error", {}));
  m.val_rmse = to_vec(c.get_doubles("val_rmse", {}));
  m.final_loss = c.get_double("final_loss", 0.0);
  return m;
}

ValueGrid solve_scenario_grid(const Scenario& s) {
  const auto sys = make_system(s);
  return value_iteration(*sys->channels().front().model, s.grid, s.hj_tol, s.hj_max_iters);
}

namespace {

// A cached grid is reused only if it was solved for the same axes and tolerance.
bool grid_matches(const Scenario& s, const ValueGrid& g) {
  const GridSpec& a = g.spec();
  if (a.dim() != s.grid.dim() || a.n_u != s.grid.n_u || g.tol != s.hj_tol) return false;
  for (int i = 0; i < a.dim(); ++i) {
    const GridAxis& x = a.axes[i];
    const GridAxis& y = s.grid.axes[i];
    if (x.lo != y.lo || x.hi != y.hi || x.n != y.n) return false;
  }
  return true;
}

}  // namespace

Assets prepare_assets(const Scenario& s) { return prepare_assets(s, nullptr, nullptr, nullptr); }

Assets prepare_assets(const Scenario& s, const MlpModel* estimator, const Vec* est_err,
                      std::shared_ptr<const ValueGrid> grid) {
  Assets a;
  a.system = make_system(s);
  a.channels = a.system->channels();
  if (estimator) {
    a.estimator = *estimator;
  } else if (s.estimator_kind == "exact") {
    a.estimator = ScalarSystem::exact_estimator();
  } else {
    if (s.model_path.empty()) throw ParseError("scenario '" + s.name + "': estimator.model not set");
    a.estimator = load_model(s.model_path);
  }
  if (est_err) {
    a.est_err = *est_err;
  } else if (s.est_err.size() > 0) {
    a.est_err = s.est_err;
  } else if (s.estimator_kind == "exact") {
    a.est_err = Vec::Zero(1);
  } else {
    a.est_err = load_estimator_meta(s.model_path).est_err;
  }
  if (a.estimator.input_dim() != a.system->observation_dim() ||
      a.estimator.output_dim() != a.system->estimate_dim()) {
    throw DimensionError("scenario '" + s.name + "': estimator dimensions do not match the system");
  }
  if (a.est_err.size() != a.system->estimate_dim()) {
    throw DimensionError("scenario '" + s.name + "': est_err length does not match the estimate");
  }
  if (grid) {
    a.grid = std::move(grid);
  } else if (!s.grid_path.empty() && std::filesystem::exists(s.grid_path) &&
             grid_matches(s, load_grid(s.grid_path))) {
    a.grid = std::make_shared<ValueGrid>(load_grid(s.grid_path));
  } else {
    auto g = std::make_shared<ValueGrid>(solve_scenario_grid(s));
    if (!s.grid_path.empty()) {
      const auto parent = std::filesystem::path(s.grid_path).parent_path();
      if (!parent.empty()) std::filesystem::create_directories(parent);
      save_grid(*g, s.grid_path);
    }
    a.grid = g;
  }
  return a;
}

}  // namespace guardian
