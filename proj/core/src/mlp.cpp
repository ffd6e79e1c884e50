#include "guardian/mlp.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "guardian/error.hpp"
#include "guardian/rng.hpp"

namespace guardian {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ParseError("unknown activation '" + s + "'");
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

namespace {

void apply_activation(Activation a, Mat& z) {
  if (a == Activation::Identity) return;
  z = z.unaryExpr([a](double v) { return activate(a, v); });
}

Mat activation_derivative(Activation a, const Mat& z) {
  return z.unaryExpr([a](double v) { return activate_derivative(a, v); });
}

}  // namespace

MlpModel::MlpModel(int input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ <= 0) throw DimensionError("MlpModel: input_dim must be positive");
  if (layers_.empty()) throw DimensionError("MlpModel: at least one layer required");
  int in = input_dim_;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    if (l.in_dim() != in) {
      throw DimensionError("MlpModel: layer " + std::to_string(k) + " expects input " +
                           std::to_string(l.in_dim()) + ", previous output is " +
                           std::to_string(in));
    }
    if (l.bias.size() != l.weight.rows()) {
      throw DimensionError("MlpModel: layer " + std::to_string(k) + " bias length mismatch");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw DomainError("MlpModel: non-finite parameter in layer " + std::to_string(k));
    }
    in = l.out_dim();
  }
  if (layers_.back().activation != Activation::Identity) {
    throw DomainError("MlpModel: last layer must use identity activation");
  }
}

MlpModel MlpModel::random(const std::vector<int>& dims, Activation hidden, std::uint64_t seed) {
  if (dims.size() < 2) throw DimensionError("MlpModel::random: need at least in and out dims");
  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const int in = dims[k], out = dims[k + 1];
    const double r = 1.0 / std::sqrt(static_cast<double>(in));
    Layer l;
    l.weight.resize(out, in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) l.weight(i, j) = rng.uniform(-r, r);
    l.bias.resize(out);
    for (int i = 0; i < out; ++i) l.bias(i) = rng.uniform(-r, r);
    l.activation = (k + 2 == dims.size()) ? Activation::Identity : hidden;
    layers.push_back(std::move(l));
  }
  return MlpModel(dims.front(), std::move(layers));
}

int MlpModel::output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

bool MlpModel::operator==(const MlpModel& other) const {
  if (input_dim_ != other.input_dim_ || layers_.size() != other.layers_.size()) return false;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& a = layers_[k];
    const Layer& b = other.layers_[k];
    if (a.activation != b.activation || a.weight.rows() != b.weight.rows() ||
        a.weight.cols() != b.weight.cols() || a.weight != b.weight || a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

Vec forward(const MlpModel& model, const Vec& z) {
  if (z.size() != model.input_dim()) {
    throw DimensionError("forward: input has length " + std::to_string(z.size()) +
                         ", model expects " + std::to_string(model.input_dim()));
  }
  Vec a = z;
  for (const Layer& l : model.layers()) {
    Vec pre = l.weight * a + l.bias;
    for (Eigen::Index i = 0; i < pre.size(); ++i) pre(i) = activate(l.activation, pre(i));
    a = std::move(pre);
  }
  return a;
}

Mat forward_batch(const MlpModel& model, const Mat& z) {
  if (z.rows() != model.input_dim()) throw DimensionError("forward_batch: input rows mismatch");
  Mat a = z;
  for (const Layer& l : model.layers()) {
    Mat pre = l.weight * a;
    pre.colwise() += l.bias;
    apply_activation(l.activation, pre);
    a = std::move(pre);
  }
  return a;
}

Vec grad_input(const MlpModel& model, const Vec& z, const Vec& target) {
  if (z.size() != model.input_dim()) throw DimensionError("grad_input: input length mismatch");
  if (target.size() != model.output_dim()) {
    throw DimensionError("grad_input: target length mismatch");
  }
  const auto& layers = model.layers();
  std::vector<Vec> pre(layers.size());
  Vec a = z;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    pre[k] = layers[k].weight * a + layers[k].bias;
    a = pre[k].unaryExpr([&](double v) { return activate(layers[k].activation, v); });
  }
  Vec g = 2.0 * (a - target) / static_cast<double>(target.size());
  for (std::size_t k = layers.size(); k-- > 0;) {
    const Layer& l = layers[k];
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) *= activate_derivative(l.activation, pre[k](i));
    g = l.weight.transpose() * g;
  }
  return g;
}

MlpModel fold_normalization(const MlpModel& model, const Vec& in_mean, const Vec& in_scale,
                            const Vec& out_mean, const Vec& out_scale) {
  if (in_mean.size() != model.input_dim() || in_scale.size() != model.input_dim() ||
      out_mean.size() != model.output_dim() || out_scale.size() != model.output_dim()) {
    throw DimensionError("fold_normalization: statistic length mismatch");
  }
  std::vector<Layer> layers = model.layers();
  Layer& first = layers.front();
  const Vec inv = in_scale.cwiseInverse();
  first.bias -= first.weight * in_mean.cwiseProduct(inv);
  first.weight = first.weight * inv.asDiagonal();
  Layer& last = layers.back();
  last.weight = out_scale.asDiagonal() * last.weight;
  last.bias = out_scale.cwiseProduct(last.bias) + out_mean;
  return MlpModel(model.input_dim(), std::move(layers));
}

void Dataset::validate() const {
  if (inputs.rows() != targets.rows()) throw DimensionError("Dataset: row counts differ");
  if (!inputs.allFinite() || !targets.allFinite()) throw DomainError("Dataset: non-finite entry");
}

double mean_loss(const MlpModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const Mat out = forward_batch(model, data.inputs.transpose());
  return (out - data.targets.transpose()).squaredNorm() / static_cast<double>(out.size());
}

MlpModel train(const MlpModel& model, const Dataset& data, const TrainConfig& cfg,
               TrainReport* report) {
  data.validate();
  if (data.inputs.cols() != model.input_dim() || data.targets.cols() != model.output_dim()) {
    throw DimensionError("train: dataset dimensions do not match the model");
  }
  if (!(cfg.learning_rate > 0.0)) throw DomainError("train: learning_rate must be positive");
  if (cfg.batch_size <= 0 || cfg.batch_size > data.size()) {
    throw DomainError("train: batch_size must be in [1, dataset size]");
  }
  if (cfg.epochs < 0) throw DomainError("train: epochs must be non-negative");

  std::vector<Layer> layers = model.layers();
  const std::size_t n_layers = layers.size();
  std::vector<Mat> mw(n_layers), vw(n_layers);
  std::vector<Vec> mb(n_layers), vb(n_layers);
  for (std::size_t k = 0; k < n_layers; ++k) {
    mw[k] = Mat::Zero(layers[k].weight.rows(), layers[k].weight.cols());
    vw[k] = mw[k];
    mb[k] = Vec::Zero(layers[k].bias.size());
    vb[k] = mb[k];
  }

  const double initial = mean_loss(model, data);
  Rng rng(cfg.seed);
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const Mat x_all = data.inputs.transpose();
  const Mat t_all = data.targets.transpose();
  long step = 0;
  std::vector<Mat> pre(n_layers), act(n_layers + 1);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = data.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    }
    double epoch_loss = 0.0;
    for (int start = 0; start < data.size(); start += cfg.batch_size) {
      const int bs = std::min(cfg.batch_size, data.size() - start);
      Mat xb(x_all.rows(), bs), tb(t_all.rows(), bs);
      for (int j = 0; j < bs; ++j) {
        xb.col(j) = x_all.col(order[start + j]);
        tb.col(j) = t_all.col(order[start + j]);
      }
      act[0] = std::move(xb);
      for (std::size_t k = 0; k < n_layers; ++k) {
        pre[k] = layers[k].weight * act[k];
        pre[k].colwise() += layers[k].bias;
        act[k + 1] = pre[k];
        apply_activation(layers[k].activation, act[k + 1]);
      }
      Mat diff = act[n_layers] - tb;
      epoch_loss += diff.squaredNorm();
      Mat g = diff * (2.0 / static_cast<double>(diff.size()));
      ++step;
      for (std::size_t k = n_layers; k-- > 0;) {
        Layer& l = layers[k];
        if (l.activation != Activation::Identity) {
          g = g.cwiseProduct(activation_derivative(l.activation, pre[k]));
        }
        Mat gw = g * act[k].transpose();
        Vec gb = g.rowwise().sum();
        if (k > 0) g = l.weight.transpose() * g;
        if (cfg.optimizer == Optimizer::Sgd) {
          l.weight -= cfg.learning_rate * gw;
          l.bias -= cfg.learning_rate * gb;
        } else {
          mw[k] = cfg.beta1 * mw[k] + (1.0 - cfg.beta1) * gw;
          vw[k] = cfg.beta2 * vw[k] + (1.0 - cfg.beta2) * gw.cwiseProduct(gw);
          mb[k] = cfg.beta1 * mb[k] + (1.0 - cfg.beta1) * gb;
          vb[k] = cfg.beta2 * vb[k] + (1.0 - cfg.beta2) * gb.cwiseProduct(gb);
          const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
          const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
          const double lr = cfg.learning_rate;
          const double eps = cfg.eps_adam;
          l.weight.array() -= lr * (mw[k].array() / c1) / ((vw[k].array() / c2).sqrt() + eps);
          l.bias.array() -= lr * (mb[k].array() / c1) / ((vb[k].array() / c2).sqrt() + eps);
        }
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw TrainingDivergedError(epoch, "train: loss became non-finite in epoch " +
                                             std::to_string(epoch));
    }
  }

  MlpModel result(model.input_dim(), std::move(layers));
  if (report) {
    report->initial_loss = initial;
    report->final_loss = cfg.epochs == 0 ? initial : mean_loss(result, data);
    report->epochs_run = cfg.epochs;
    report->improved = report->final_loss < report->initial_loss;
  }
  return result;
}

std::string model_to_json(const MlpModel& model) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["input_dim"] = model.input_dim();
  j["layers"] = nlohmann::json::array();
  for (const Layer& l : model.layers()) {
    nlohmann::json jl;
    jl["rows"] = l.weight.rows();
    jl["cols"] = l.weight.cols();
    jl["activation"] = to_string(l.activation);
    std::vector<double> w;
    w.reserve(l.weight.size());
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(i, c));
    jl["weights"] = w;
    jl["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
    j["layers"].push_back(std::move(jl));
  }
  return j.dump();
}

namespace {

const nlohmann::json& field(const nlohmann::json& obj, const std::string& name,
                            const std::string& where) {
  if (!obj.is_object() || !obj.contains(name)) {
    throw ParseError("model file: missing field '" + name + "' in " + where);
  }
  return obj.at(name);
}

}  // namespace

MlpModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("model file: malformed JSON at byte " + std::to_string(e.byte) + ": " +
                     e.what());
  }
  try {
    const auto& version = field(j, "format_version", "document");
    if (!version.is_number_integer() || version.get<int>() != 1) {
      throw UnsupportedVersionError("model file: unsupported format_version " + version.dump());
    }
    const int input_dim = field(j, "input_dim", "document").get<int>();
    std::vector<Layer> layers;
    const auto& jlayers = field(j, "layers", "document");
    if (!jlayers.is_array()) throw ParseError("model file: field 'layers' is not an array");
    for (std::size_t k = 0; k < jlayers.size(); ++k) {
      const std::string where = "layers[" + std::to_string(k) + "]";
      const auto& jl = jlayers[k];
      const int rows = field(jl, "rows", where).get<int>();
      const int cols = field(jl, "cols", where).get<int>();
      const auto w = field(jl, "weights", where).get<std::vector<double>>();
      const auto b = field(jl, "bias", where).get<std::vector<double>>();
      if (rows <= 0 || cols <= 0 || w.size() != static_cast<std::size_t>(rows) * cols) {
        throw ParseError("model file: " + where + ".weights has " + std::to_string(w.size()) +
                         " entries, declared " + std::to_string(rows) + "x" +
                         std::to_string(cols));
      }
      if (b.size() != static_cast<std::size_t>(rows)) {
        throw ParseError("model file: " + where + ".bias has " + std::to_string(b.size()) +
                         " entries, declared rows " + std::to_string(rows));
      }
      Layer l;
      l.weight.resize(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) l.weight(r, c) = w[static_cast<std::size_t>(r) * cols + c];
      l.bias = Eigen::Map<const Vec>(b.data(), rows);
      l.activation = activation_from_string(field(jl, "activation", where).get<std::string>());
      layers.push_back(std::move(l));
    }
    return MlpModel(input_dim, std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  } catch (const DimensionError& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

void save_model(const MlpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("save_model: cannot open '" + path + "'");
  out << model_to_json(model) << '\n';
  if (!out) throw Error("save_model: write failed for '" + path + "'");
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_model: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace guardian
