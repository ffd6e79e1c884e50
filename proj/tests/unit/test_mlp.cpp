#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "guardian/error.hpp"
#include "guardian/mlp.hpp"
#include "guardian/rng.hpp"

using namespace guardian;

namespace {

MlpModel single(const Mat& w, const Vec& b, Activation act) {
  Layer l{w, b, act};
  std::vector<Layer> layers{l};
  if (act != Activation::Identity) {
    layers.push_back(Layer{Mat::Identity(w.rows(), w.rows()), Vec::Zero(w.rows()), Activation::Identity});
  }
  return MlpModel(static_cast<int>(w.cols()), layers);
}

Vec random_vec(Rng& rng, int n, double r) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(-r, r);
  return v;
}

double mse(const MlpModel& m, const Vec& z, const Vec& t) { return (forward(m, z) - t).squaredNorm() / t.size(); }

}  // namespace

TEST(Forward, IdentityNetwork) {
  const auto m = single(Mat::Identity(2, 2), Vec::Zero(2), Activation::Identity);
  Vec z(2);
  z << 1, 2;
  EXPECT_EQ(forward(m, z), z);
}

TEST(Forward, OneReluLayer) {
  Mat w(1, 2);
  w << 1, -1;
  const auto m = single(w, Vec::Constant(1, 0.5), Activation::Relu);
  Vec z(2);
  z << 2, 1;
  EXPECT_DOUBLE_EQ(forward(m, z)(0), 1.5);
}

TEST(Forward, DimensionMismatchRejected) {
  const auto m = MlpModel::random({3, 4, 2}, Activation::Tanh, 1);
  EXPECT_THROW(forward(m, Vec::Zero(2)), DimensionError);
  EXPECT_THROW(grad_input(m, Vec::Zero(3), Vec::Zero(3)), DimensionError);
}

TEST(Forward, BatchMatchesSingle) {
  const auto m = MlpModel::random({3, 8, 8, 2}, Activation::Sigmoid, 2);
  Rng rng(5);
  Mat z(3, 10);
  for (int j = 0; j < 10; ++j) z.col(j) = random_vec(rng, 3, 1.0);
  const Mat out = forward_batch(m, z);
  for (int j = 0; j < 10; ++j) EXPECT_LT((out.col(j) - forward(m, z.col(j))).norm(), 1e-14);
}

TEST(Model, InvariantsEnforced) {
  Layer a{Mat::Ones(3, 2), Vec::Zero(3), Activation::Relu};
  Layer b{Mat::Ones(1, 4), Vec::Zero(1), Activation::Identity};
  EXPECT_THROW(MlpModel(2, {a, b}), DimensionError);
  Layer last_relu{Mat::Ones(1, 2), Vec::Zero(1), Activation::Relu};
  EXPECT_THROW(MlpModel(2, {last_relu}), DomainError);
  Layer bad{Mat::Constant(1, 2, std::numeric_limits<double>::infinity()), Vec::Zero(1), Activation::Identity};
  EXPECT_THROW(MlpModel(2, {bad}), DomainError);
}

TEST(Gradient, IdentityAtMinimumVanishes) {
  const auto m = single(Mat::Identity(1, 1), Vec::Zero(1), Activation::Identity);
  EXPECT_EQ(grad_input(m, Vec::Zero(1), Vec::Zero(1))(0), 0.0);
}

TEST(Gradient, IdentitySquaredError) {
  const auto m = single(Mat::Identity(1, 1), Vec::Zero(1), Activation::Identity);
  EXPECT_DOUBLE_EQ(grad_input(m, Vec::Ones(1), Vec::Zero(1))(0), 2.0);
}

TEST(Gradient, ReluKinkSubgradientZero) {
  EXPECT_EQ(activate_derivative(Activation::Relu, 0.0), 0.0);
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(11);
  const double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const int in = 2 + static_cast<int>(rng.below(4));
    const int out = 1 + static_cast<int>(rng.below(3));
    const auto m = MlpModel::random({in, 6, 5, out}, Activation::Tanh, 100 + k);
    const Vec z = random_vec(rng, in, 1.5);
    const Vec t = random_vec(rng, out, 1.0);
    const Vec g = grad_input(m, z, t);
    Vec fd(in);
    for (int i = 0; i < in; ++i) {
      Vec zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      fd(i) = (mse(m, zp, t) - mse(m, zm, t)) / (2 * h);
    }
    EXPECT_LE((g - fd).norm(), 1e-4 * std::max(1.0, fd.norm())) << "case " << k;
  }
}

TEST(Forward, ReluEqualsActivePatternAffineMap) {
  Rng rng(21);
  const auto m = MlpModel::random({3, 7, 7, 2}, Activation::Relu, 9);
  for (int k = 0; k < 50; ++k) {
    const Vec z = random_vec(rng, 3, 2.0);
    Mat w = Mat::Identity(3, 3);
    Vec b = Vec::Zero(3);
    Vec a = z;
    for (const auto& l : m.layers()) {
      Vec pre = l.weight * a + l.bias;
      Mat lw = l.weight * w;
      Vec lb = l.weight * b + l.bias;
      if (l.activation == Activation::Relu) {
        for (int i = 0; i < pre.size(); ++i) {
          if (pre(i) <= 0) {
            lw.row(i).setZero();
            lb(i) = 0;
            pre(i) = 0;
          }
        }
      }
      w = lw;
      b = lb;
      a = pre;
    }
    EXPECT_LT((w * z + b - forward(m, z)).norm(), 1e-12);
  }
}

TEST(Train, RecoversLinearSlope) {
  Dataset d;
  const int n = 200;
  d.inputs.resize(n, 1);
  d.targets.resize(n, 1);
  Rng rng(4);
  for (int i = 0; i < n; ++i) {
    d.inputs(i, 0) = rng.uniform(-1, 1);
    d.targets(i, 0) = 2.0 * d.inputs(i, 0);
  }
  // Least-squares oracle for y = w x through the origin.
  const double w_ls = d.inputs.col(0).dot(d.targets.col(0)) / d.inputs.col(0).squaredNorm();
  const auto m0 = single(Mat::Constant(1, 1, 0.1), Vec::Zero(1), Activation::Identity);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 20;
  cfg.epochs = 200;
  TrainReport rep;
  const auto m = train(m0, d, cfg, &rep);
  EXPECT_NEAR(m.layers()[0].weight(0, 0), w_ls, 1e-2);
  EXPECT_NEAR(m.layers()[0].weight(0, 0), 2.0, 1e-2);
  EXPECT_TRUE(rep.improved);
  EXPECT_LT(rep.final_loss, rep.initial_loss);
}

TEST(Train, ZeroEpochsIsNoOp) {
  const auto m0 = MlpModel::random({2, 4, 1}, Activation::Relu, 3);
  Dataset d{Mat::Ones(8, 2), Mat::Ones(8, 1)};
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.batch_size = 4;
  EXPECT_TRUE(train(m0, d, cfg) == m0);
}

TEST(Train, DeterministicGivenSeed) {
  Rng rng(8);
  Dataset d;
  d.inputs.resize(64, 3);
  d.targets.resize(64, 2);
  for (int i = 0; i < 64; ++i) {
    d.inputs.row(i) = random_vec(rng, 3, 1).transpose();
    d.targets(i, 0) = std::sin(d.inputs(i, 0));
    d.targets(i, 1) = d.inputs(i, 1) * d.inputs(i, 2);
  }
  const auto m0 = MlpModel::random({3, 8, 2}, Activation::Tanh, 1);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 10;
  cfg.seed = 42;
  EXPECT_TRUE(train(m0, d, cfg) == train(m0, d, cfg));
}

TEST(Train, DivergenceNamesEpoch) {
  Dataset d{Mat::Constant(4, 1, 1e200), Mat::Constant(4, 1, -1e200)};
  const auto m0 = single(Mat::Constant(1, 1, 1e200), Vec::Zero(1), Activation::Identity);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.epochs = 3;
  try {
    train(m0, d, cfg);
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    EXPECT_GE(e.epoch(), 0);
  }
}

TEST(Train, BatchLargerThanDatasetRejected) {
  const auto m0 = MlpModel::random({1, 2, 1}, Activation::Relu, 3);
  Dataset d{Mat::Ones(4, 1), Mat::Ones(4, 1)};
  TrainConfig cfg;
  cfg.batch_size = 5;
  EXPECT_THROW(train(m0, d, cfg), DomainError);
}

TEST(Serialization, RoundTripIsBitExact) {
  for (auto act : {Activation::Relu, Activation::Tanh, Activation::Sigmoid}) {
    const auto m = MlpModel::random({5, 7, 3, 2}, act, 77);
    EXPECT_TRUE(model_from_json(model_to_json(m)) == m);
  }
  const auto path = (std::filesystem::temp_directory_path() / "guardian_model_rt.json").string();
  const auto m = MlpModel::random({4, 6, 2}, Activation::Relu, 5);
  save_model(m, path);
  EXPECT_TRUE(load_model(path) == m);
  std::filesystem::remove(path);
}

TEST(Serialization, MismatchedDimsRejected) {
  const std::string text =
      R"({"format_version":1,"input_dim":2,"layers":[{"rows":1,"cols":2,"activation":"identity",)"
      R"("weights":[1,2,3],"bias":[0]}]})";
  try {
    model_from_json(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("layers[0].weights"), std::string::npos);
  }
  const std::string chain =
      R"({"format_version":1,"input_dim":3,"layers":[{"rows":1,"cols":2,"activation":"identity",)"
      R"("weights":[1,2],"bias":[0]}]})";
  EXPECT_THROW(model_from_json(chain), ParseError);
}

TEST(Serialization, UnknownVersionRejected) {
  const std::string text =
      R"({"format_version":7,"input_dim":1,"layers":[{"rows":1,"cols":1,"activation":"identity",)"
      R"("weights":[1],"bias":[0]}]})";
  EXPECT_THROW(model_from_json(text), UnsupportedVersionError);
}

TEST(Serialization, MalformedReportsByteOffset) {
  try {
    model_from_json(R"({"format_version": 1, "input_dim": )");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
  try {
    model_from_json(R"({"format_version": 1, "layers": []})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("input_dim"), std::string::npos);
  }
}

TEST(Normalization, FoldingMatchesExplicitScaling) {
  const auto m = MlpModel::random({3, 5, 2}, Activation::Tanh, 6);
  Vec im(3), is(3), om(2), os(2);
  im << 1, -2, 0.5;
  is << 2, 0.5, 3;
  om << 10, -1;
  os << 4, 0.2;
  const auto f = fold_normalization(m, im, is, om, os);
  Vec z(3);
  z << 0.3, -1.1, 2.0;
  const Vec expect = om + os.cwiseProduct(forward(m, (z - im).cwiseQuotient(is)));
  EXPECT_LT((forward(f, z) - expect).norm(), 1e-12);
}
