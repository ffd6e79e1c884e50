#include "guardian/nnv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "guardian/error.hpp"

namespace guardian {

namespace {

// Outward slack that absorbs rounding in the relaxation and substitution.
double slack(double v) { return 1e-12 * (1.0 + std::abs(v)); }

// Points in [lo, hi] where act'(z) = k, for the smooth activations.
std::vector<double> tangent_points(Activation act, double k, double lo, double hi) {
  std::vector<double> pts;
  if (act == Activation::Sigmoid) {
    if (k <= 0.0 || k > 0.25) return pts;
    const double r = std::sqrt(std::max(0.0, 1.0 - 4.0 * k));
    for (double s : {0.5 * (1.0 - r), 0.5 * (1.0 + r)}) {
      if (s <= 0.0 || s >= 1.0) continue;
      pts.push_back(std::log(s / (1.0 - s)));
    }
  } else if (act == Activation::Tanh) {
    if (k <= 0.0 || k > 1.0) return pts;
    const double t = std::sqrt(std::max(0.0, 1.0 - k));
    if (t < 1.0) {
      pts.push_back(std::atanh(t));
      pts.push_back(-std::atanh(t));
    }
  }
  std::vector<double> in;
  for (double p : pts)
    if (p > lo && p < hi) in.push_back(p);
  return in;
}

// Tightest intercepts (lower, upper) for a line of slope k around act on [lo, hi].
std::pair<double, double> intercepts(Activation act, double k, double lo, double hi) {
  std::vector<double> pts = tangent_points(act, k, lo, hi);
  pts.push_back(lo);
  pts.push_back(hi);
  double mn = std::numeric_limits<double>::infinity();
  double mx = -mn;
  for (double z : pts) {
    const double r = activate(act, z) - k * z;
    mn = std::min(mn, r);
    mx = std::max(mx, r);
  }
  return {mn - slack(mn), mx + slack(mx)};
}

}  // namespace

NeuronRelaxation relax_neuron(Activation act, double lo, double hi) {
  NeuronRelaxation r;
  if (act == Activation::Identity) {
    r.lower_slope = r.upper_slope = 1.0;
    return r;
  }
  if (lo == hi) {
    const double k = activate_derivative(act, lo);
    const double c = activate(act, lo) - k * lo;
    r.lower_slope = r.upper_slope = k;
    r.lower_icpt = c - slack(c);
    r.upper_icpt = c + slack(c);
    return r;
  }
  if (act == Activation::Relu) {
    if (lo >= 0.0) {
      r.lower_slope = r.upper_slope = 1.0;
    } else if (hi <= 0.0) {
      // all zero
    } else {
      const double k = hi / (hi - lo);
      r.upper_slope = k;
      r.upper_icpt = -k * lo;
      r.upper_icpt += slack(r.upper_icpt);
      r.lower_slope = (std::abs(lo) >= std::abs(hi)) ? 0.0 : 1.0;
    }
    return r;
  }
  const double secant = (activate(act, hi) - activate(act, lo)) / (hi - lo);
  const double mid = 0.5 * (lo + hi);
  const double tangent = activate_derivative(act, mid);
  double kl, ku;
  if (hi <= 0.0) {  // convex side
    kl = tangent;
    ku = secant;
  } else if (lo >= 0.0) {  // concave side
    kl = secant;
    ku = tangent;
  } else {
    kl = ku = secant;
  }
  r.lower_slope = kl;
  r.upper_slope = ku;
  r.lower_icpt = intercepts(act, kl, lo, hi).first;
  r.upper_icpt = intercepts(act, ku, lo, hi).second;
  return r;
}

std::vector<Box> interval_bounds(const MlpModel& model, const Box& domain) {
  if (domain.dim() != model.input_dim()) {
    throw DimensionError("interval_bounds: domain dimension mismatch");
  }
  std::vector<Box> out;
  Vec lo = domain.lower(), hi = domain.upper();
  int k = 0;
  for (const Layer& l : model.layers()) {
    const Vec c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
    const Vec zc = l.weight * c + l.bias;
    Vec zr = l.weight.cwiseAbs() * r;
    zr += zc.unaryExpr([](double v) { return slack(v); });
    const Vec zl = zc - zr, zu = zc + zr;
    if (!zl.allFinite() || !zu.allFinite()) {
      throw BoundExplosionError(k, "interval bounds non-finite at layer " + std::to_string(k));
    }
    out.emplace_back(zl, zu);
    lo = zl.unaryExpr([&](double v) { return activate(l.activation, v); });
    hi = zu.unaryExpr([&](double v) { return activate(l.activation, v); });
    ++k;
  }
  return out;
}

namespace {

struct Relaxations {
  std::vector<std::vector<NeuronRelaxation>> layer;  // per hidden layer
};

// Backward substitution of the linear function C*z_m + d where z_m is the
// pre-activation of layer m, through relaxations of layers < m.
// upper=true produces an upper envelope, otherwise a lower one.
void substitute(const MlpModel& model, const Relaxations& rel, int m, Mat lam, Vec bias,
                bool upper, Mat& coef, Vec& icpt) {
  const auto& layers = model.layers();
  // lam multiplies z_m = W_m a_{m-1} + b_m
  for (int k = m; k >= 0; --k) {
    const Layer& l = layers[k];
    bias += lam * l.bias;
    lam = lam * l.weight;  // now multiplies a_{k-1}
    if (k == 0) break;
    const auto& rk = rel.layer[k - 1];
    const Layer& prev = layers[k - 1];
    if (prev.activation == Activation::Identity) continue;
    for (Eigen::Index i = 0; i < lam.rows(); ++i) {
      for (Eigen::Index j = 0; j < lam.cols(); ++j) {
        const double c = lam(i, j);
        const NeuronRelaxation& r = rk[j];
        const bool use_upper = upper ? (c >= 0.0) : (c < 0.0);
        if (use_upper) {
          bias(i) += c * r.upper_icpt;
          lam(i, j) = c * r.upper_slope;
        } else {
          bias(i) += c * r.lower_icpt;
          lam(i, j) = c * r.lower_slope;
        }
      }
    }
  }
  coef = std::move(lam);
  icpt = std::move(bias);
}

Box concretize_pair(const Mat& psi, const Vec& alpha, const Mat& xi, const Vec& beta,
                    const Box& domain) {
  const Vec c = domain.center();
  const Vec r = 0.5 * domain.width();
  Vec lo = psi * c + alpha - psi.cwiseAbs() * r;
  Vec hi = xi * c + beta + xi.cwiseAbs() * r;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    lo(i) -= slack(lo(i));
    hi(i) += slack(hi(i));
  }
  return Box(lo, hi.cwiseMax(lo));
}

}  // namespace

LinearBounds crown_bounds(const MlpModel& model, const Box& domain, const CrownOptions& opt) {
  if (domain.dim() != model.input_dim()) {
    throw DimensionError("crown_bounds: domain has dimension " + std::to_string(domain.dim()) +
                         ", model expects " + std::to_string(model.input_dim()));
  }
  const auto& layers = model.layers();
  const int n_layers = static_cast<int>(layers.size());
  std::vector<Box> pre = interval_bounds(model, domain);
  Relaxations rel;
  for (int k = 0; k + 1 < n_layers; ++k) {
    Box bk = pre[k];
    if (opt.backward_intermediate && k > 0) {
      const int n = layers[k].out_dim();
      Mat cl, cu;
      Vec il, iu;
      substitute(model, rel, k, Mat::Identity(n, n), Vec::Zero(n), false, cl, il);
      substitute(model, rel, k, Mat::Identity(n, n), Vec::Zero(n), true, cu, iu);
      const Box back = concretize_pair(cl, il, cu, iu, domain);
      bk = intersect(bk, back);
    }
    if (!bk.lower().allFinite() || !bk.upper().allFinite()) {
      throw BoundExplosionError(k, "pre-activation bounds non-finite at layer " + std::to_string(k));
    }
    pre[k] = bk;
    std::vector<NeuronRelaxation> r(layers[k].out_dim());
    for (int j = 0; j < layers[k].out_dim(); ++j) {
      r[j] = relax_neuron(layers[k].activation, bk.lower(j), bk.upper(j));
    }
    rel.layer.push_back(std::move(r));
  }
  const int n_o = model.output_dim();
  LinearBounds b{Mat(), Vec(), Mat(), Vec(), domain};
  substitute(model, rel, n_layers - 1, Mat::Identity(n_o, n_o), Vec::Zero(n_o), false, b.psi,
             b.alpha);
  substitute(model, rel, n_layers - 1, Mat::Identity(n_o, n_o), Vec::Zero(n_o), true, b.xi,
             b.beta);
  if (!b.psi.allFinite() || !b.xi.allFinite() || !b.alpha.allFinite() || !b.beta.allFinite()) {
    throw BoundExplosionError(n_layers - 1, "output bounds non-finite");
  }
  return b;
}

Box concretize(const LinearBounds& b) {
  if (b.psi.cols() != b.domain.dim() || b.xi.cols() != b.domain.dim()) {
    throw DimensionError("concretize: coefficient/domain dimension mismatch");
  }
  const Vec& lo = b.domain.lower();
  const Vec& hi = b.domain.upper();
  Vec out_lo(b.psi.rows()), out_hi(b.xi.rows());
  for (Eigen::Index i = 0; i < b.psi.rows(); ++i) {
    double s = b.alpha(i);
    double mag = std::abs(b.alpha(i));
    for (Eigen::Index j = 0; j < b.psi.cols(); ++j) {
      const double c = b.psi(i, j);
      const double t = c * (c >= 0.0 ? lo(j) : hi(j));
      s += t;
      mag += std::abs(t);
    }
    out_lo(i) = s - 1e-11 * mag;
  }
  for (Eigen::Index i = 0; i < b.xi.rows(); ++i) {
    double s = b.beta(i);
    double mag = std::abs(b.beta(i));
    for (Eigen::Index j = 0; j < b.xi.cols(); ++j) {
      const double c = b.xi(i, j);
      const double t = c * (c >= 0.0 ? hi(j) : lo(j));
      s += t;
      mag += std::abs(t);
    }
    out_hi(i) = s + 1e-11 * mag;
  }
  return Box(out_lo, out_hi.cwiseMax(out_lo));
}

Box state_uncertainty_set(const MlpModel& model, const Vec& perturbed_obs, double eps,
                          const Vec& est_err, const CrownOptions& opt) {
  if (!(eps >= 0.0)) throw DomainError("state_uncertainty_set: eps must be >= 0");
  if (est_err.size() != model.output_dim()) {
    throw DimensionError("state_uncertainty_set: est_err length mismatch");
  }
  if ((est_err.array() < 0.0).any()) throw DomainError("state_uncertainty_set: est_err < 0");
  // A point observation maps to the point estimate exactly.
  if (eps == 0.0) return Box::point(forward(model, perturbed_obs)).inflated(est_err);
  const Box ybar = Box::centered(perturbed_obs, eps);
  const Box crown = concretize(crown_bounds(model, ybar, opt));
  const Box ibp = interval_bounds(model, ybar).back();
  return intersect(crown, ibp).inflated(est_err);
}

}  // namespace guardian
