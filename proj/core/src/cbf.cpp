#include "guardian/cbf.hpp"

#include <algorithm>
#include <cmath>

#include "guardian/error.hpp"

namespace guardian {

std::string to_string(CbfVariant v) {
  switch (v) {
    case CbfVariant::Plain: return "plain";
    case CbfVariant::MeasurementRobust: return "mr";
    case CbfVariant::Robust: return "r";
    case CbfVariant::RobustAdaptive: return "r-qp";
  }
  return "plain";
}

CbfVariant cbf_variant_from_string(const std::string& s) {
  if (s == "plain") return CbfVariant::Plain;
  if (s == "mr") return CbfVariant::MeasurementRobust;
  if (s == "r") return CbfVariant::Robust;
  if (s == "r-qp") return CbfVariant::RobustAdaptive;
  throw ParseError("unknown CBF variant '" + s + "'");
}

void CbfConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("CbfConfig: gamma must be in (0, 1]");
  if (!(lipschitz > 0.0)) throw DomainError("CbfConfig: lipschitz must be positive");
  if (!(dt > 0.0)) throw DomainError("CbfConfig: dt must be positive");
  if (!(u_lo < u_hi)) throw DomainError("CbfConfig: u_lo must be < u_hi");
  if (!(d_max >= 0.0) || !(eps_global >= 0.0)) throw DomainError("CbfConfig: negative bound");
  if (!(theta_min > 0.0 && theta_min <= 1.0)) throw DomainError("CbfConfig: theta_min must be in (0, 1]");
  if (!(adapt_rate > 0.0 && adapt_rate <= 1.0)) throw DomainError("CbfConfig: adapt_rate must be in (0, 1]");
}

double CbfConfig::existence_threshold() const {
  return std::max(0.0, (u_hi - d_max) * dt / (gamma * lipschitz));
}

double CbfConfig::inflation() const { return std::max(0.0, eps_global - existence_threshold()); }

CbfFilter::CbfFilter(CbfConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void CbfFilter::reset() {
  theta_ = 1.0;
  have_prev_ = false;
  prev_prediction_ = 0.0;
}

CbfStep CbfFilter::filter(double x_hat, const Box& xbar, double u_nom) {
  const double g = cfg_.gamma;
  const double lh = cfg_.lipschitz;
  CbfStep s;
  const double capped = std::min(cfg_.eps_global, cfg_.existence_threshold());
  switch (cfg_.variant) {
    case CbfVariant::Plain:
      break;
    case CbfVariant::MeasurementRobust:
      if (xbar.dim() != 1) throw DimensionError("CbfFilter: scalar state bounds required");
      s.margin_up = (2.0 - g) * lh * std::max(0.0, xbar.upper(0) - x_hat);
      s.margin_dn = (2.0 - g) * lh * std::max(0.0, x_hat - xbar.lower(0));
      break;
    case CbfVariant::Robust:
      s.margin_up = s.margin_dn = g * lh * capped;
      break;
    case CbfVariant::RobustAdaptive:
      if (have_prev_ && capped > 0.0) {
        const double r = std::abs(x_hat - prev_prediction_);
        theta_ = std::clamp(theta_ + cfg_.adapt_rate * (r / capped - theta_), cfg_.theta_min, 1.0);
      }
      s.margin_up = s.margin_dn = g * lh * capped * theta_;
      break;
  }
  s.theta = theta_;
  const double ub = (g * (1.0 - x_hat) - s.margin_up) / cfg_.dt - cfg_.d_max;
  const double lb = -(g * (1.0 + x_hat) - s.margin_dn) / cfg_.dt + cfg_.d_max;
  s.lower = std::max(lb, cfg_.u_lo);
  s.upper = std::min(ub, cfg_.u_hi);
  const bool feasible = s.lower <= s.upper;
  s.u = feasible ? std::clamp(u_nom, s.lower, s.upper) : std::clamp(u_nom, cfg_.u_lo, cfg_.u_hi);
  have_prev_ = true;
  prev_prediction_ = x_hat + cfg_.dt * s.u;
  if (!feasible) {
    throw InfeasibleError("CBF (" + to_string(cfg_.variant) + "): empty constraint interval [" +
                          std::to_string(s.lower) + ", " + std::to_string(s.upper) + "] at x_hat = " +
                          std::to_string(x_hat));
  }
  return s;
}

}  // namespace guardian
