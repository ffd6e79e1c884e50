#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "guardian/box.hpp"

namespace guardian {

enum class Activation { Identity, Relu, Tanh, Sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

double activate(Activation a, double z);
/// Derivative of the activation; relu at exactly 0 returns 0.
double activate_derivative(Activation a, double z);

struct Layer {
  Mat weight;  // out x in
  Vec bias;    // out
  Activation activation = Activation::Identity;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

/// Feedforward network of affine layers with pointwise activations.
/// Immutable once constructed; the last layer is always identity.
class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(int input_dim, std::vector<Layer> layers);

  /// Layer widths `dims` = {in, h1, ..., out}; hidden layers use `hidden`,
  /// weights are uniform in +-1/sqrt(fan_in).
  static MlpModel random(const std::vector<int>& dims, Activation hidden, std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int output_dim() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  bool operator==(const MlpModel& other) const;

 private:
  int input_dim_ = 0;
  std::vector<Layer> layers_;
};

Vec forward(const MlpModel& model, const Vec& z);
/// Batched forward pass; columns of `z` are samples.
Mat forward_batch(const MlpModel& model, const Mat& z);

/// Gradient w.r.t. the input of J = mean_i (forward(z)_i - target_i)^2.
Vec grad_input(const MlpModel& model, const Vec& z, const Vec& target);

/// The network restricted to inputs/outputs in original units when it was
/// trained on standardized data: x_n = (x - in_mean) / in_scale and
/// y = out_mean + out_scale * y_n. Folded into the first and last layers.
MlpModel fold_normalization(const MlpModel& model, const Vec& in_mean, const Vec& in_scale,
                            const Vec& out_mean, const Vec& out_scale);

struct Dataset {
  Mat inputs;   // n x input_dim
  Mat targets;  // n x output_dim

  int size() const { return static_cast<int>(inputs.rows()); }
  void validate() const;
};

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 100;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
};

struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int epochs_run = 0;
  /// final_loss < initial_loss (always true for zero epochs is false).
  bool improved = false;
};

/// Mean over samples and outputs of the squared error.
double mean_loss(const MlpModel& model, const Dataset& data);

/// Minibatch training on mean-squared error. Deterministic given cfg.seed.
/// Throws TrainingDivergedError if the loss becomes non-finite.
MlpModel train(const MlpModel& model, const Dataset& data, const TrainConfig& cfg,
               TrainReport* report = nullptr);

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace guardian
