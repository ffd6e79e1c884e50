#pragma once

#include <vector>

#include "guardian/box.hpp"
#include "guardian/mlp.hpp"

namespace guardian {

/// Affine envelopes psi*z + alpha <= f(z) <= xi*z + beta valid on `domain`.
struct LinearBounds {
  Mat psi;
  Vec alpha;
  Mat xi;
  Vec beta;
  Box domain;
};

struct CrownOptions {
  /// Bound hidden pre-activations by backward substitution as well (then
  /// intersect with interval propagation) instead of interval propagation only.
  bool backward_intermediate = false;
};

/// Lower/upper line of a scalar activation on [lo, hi]:
/// lower_slope*z + lower_icpt <= act(z) <= upper_slope*z + upper_icpt.
struct NeuronRelaxation {
  double lower_slope = 0.0;
  double lower_icpt = 0.0;
  double upper_slope = 0.0;
  double upper_icpt = 0.0;
};

NeuronRelaxation relax_neuron(Activation act, double lo, double hi);

/// Pre-activation intervals of every layer by interval arithmetic.
std::vector<Box> interval_bounds(const MlpModel& model, const Box& domain);

LinearBounds crown_bounds(const MlpModel& model, const Box& domain, const CrownOptions& opt = {});

/// Exact minimum of the lower envelope and maximum of the upper envelope over the domain.
Box concretize(const LinearBounds& b);

/// Uncertainty set: CROWN and interval bounds of the estimator over
/// obs +- eps, intersected, then inflated by the estimator error bound.
Box state_uncertainty_set(const MlpModel& model, const Vec& perturbed_obs, double eps,
                          const Vec& est_err, const CrownOptions& opt = {});

}  // namespace guardian
