#pragma once

/// Disease classification models over raw sensor measurements: a Gini
/// decision tree, one-vs-rest logistic regression and a small ReLU network,
/// plus shared prediction/evaluation. Ties in every argmax resolve to the
/// lowest label index, matching the constraint encoding of the models.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "vitalguard/common.hpp"
#include "vitalguard/data.hpp"

namespace vitalguard::dcm {

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DivergenceDetected : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

class UnsupportedActivation : public Error {
 public:
  using Error::Error;
};

class InvalidParam : public Error {
 public:
  using Error::Error;
};

// -------------------------------------------------------------------------
// Decision tree
// -------------------------------------------------------------------------

/// Binary tree over axis tests `measurement[attr] <= threshold` (left on
/// true, right on false). Nodes live in a flat pool; `root` indexes into it.
struct DtNode {
  // interior
  std::size_t attr = 0;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // leaf
  int leaf_label = -1;

  bool is_leaf() const { return left < 0; }
};

struct DecisionTreeModel {
  std::size_t n_sensors = 0;
  std::size_t n_labels = 0;
  std::vector<DtNode> nodes;
  int root = -1;

  void validate() const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

struct DtParams {
  std::size_t max_depth = 10;
  std::size_t min_leaf_size = 5;
};

/// CART with Gini impurity. Candidate thresholds are midpoints between
/// consecutive distinct sorted values; ties in gain resolve to the lowest
/// sensor index, then the lowest threshold.
DecisionTreeModel train_dt(const data::Dataset& train, const DtParams& params = {});

// -------------------------------------------------------------------------
// Feature standardisation (internal to the linear/neural models; prediction
// and encoding always consume raw measurements)
// -------------------------------------------------------------------------

struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;  // zero-variance sensors store 1.0

  std::vector<double> transform(const std::vector<double>& raw) const;
};

Scaler fit_scaler(const data::Dataset& ds);

// -------------------------------------------------------------------------
// Logistic regression (one-vs-rest)
// -------------------------------------------------------------------------

struct LogisticRegressionModel {
  std::size_t n_sensors = 0;
  std::size_t n_labels = 0;
  /// weights[label][sensor], intercept[label]; standardised feature space.
  std::vector<std::vector<double>> weights;
  std::vector<double> intercept;
  Scaler scaler;

  void validate() const;
  /// Per-label scores on raw measurements (monotone in the class
  /// probability; the shared softmax normaliser is irrelevant to argmax).
  std::vector<double> logits(const std::vector<double>& raw) const;
};

struct LrParams {
  std::size_t max_iterations = 500;
  double step_size = 0.5;
  double tolerance = 1e-7;  // stop when the loss improves by less than this
};

/// Full-batch gradient descent per binary one-vs-rest problem. Throws
/// DivergenceDetected after 10 consecutive loss increases.
LogisticRegressionModel train_lr(const data::Dataset& train, const LrParams& params = {});

// -------------------------------------------------------------------------
// Neural network (dense, ReLU hidden layers, linear output)
// -------------------------------------------------------------------------

struct NeuralNetworkModel {
  std::size_t n_sensors = 0;
  std::size_t n_labels = 0;
  /// hidden layer widths, e.g. {20, 12, 8}
  std::vector<std::size_t> hidden;
  /// weights[m] has shape (layer_out x layer_in); biases[m] matches out.
  std::vector<std::vector<std::vector<double>>> weights;
  std::vector<std::vector<double>> biases;
  std::string activation = "relu";
  Scaler scaler;

  void validate() const;
  /// Output-layer scores on raw measurements (softmax stripped: argmax of
  /// the linear output equals argmax of the probabilities).
  std::vector<double> logits(const std::vector<double>& raw) const;
  /// Forward pass exposing every pre-activation and post-activation vector
  /// (index m = hidden layer m); used by the encoder tests.
  struct Trace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
    std::vector<double> output;
  };
  Trace forward_trace(const std::vector<double>& raw) const;
};

struct NnParams {
  std::vector<std::size_t> hidden = {20, 12, 8};
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  double step_size = 1e-3;  // Adam
  std::uint64_t seed = 0;
};

/// Adam on softmax cross-entropy, He-initialised, mini-batches drawn by a
/// seeded shuffle each epoch. Throws NonFiniteLoss if the loss leaves the
/// reals.
NeuralNetworkModel train_nn(const data::Dataset& train, const NnParams& params = {});

/// Loss and parameter gradients of the mean softmax cross-entropy on one
/// batch (raw measurements); shared by the trainer and the gradient checks.
struct NnGradients {
  double loss = 0.0;
  std::vector<std::vector<std::vector<double>>> d_weights;
  std::vector<std::vector<double>> d_biases;
};
NnGradients nn_loss_and_gradients(const NeuralNetworkModel& model,
                                  const std::vector<std::vector<double>>& raw_batch,
                                  const std::vector<int>& labels);

// -------------------------------------------------------------------------
// Shared prediction and evaluation
// -------------------------------------------------------------------------

using Model = std::variant<DecisionTreeModel, LogisticRegressionModel, NeuralNetworkModel>;

std::string model_kind(const Model& model);
std::size_t model_sensors(const Model& model);
std::size_t model_labels(const Model& model);

int predict(const DecisionTreeModel& model, const std::vector<double>& measurements);
int predict(const LogisticRegressionModel& model, const std::vector<double>& measurements);
int predict(const NeuralNetworkModel& model, const std::vector<double>& measurements);
int predict(const Model& model, const std::vector<double>& measurements);

/// Macro-averaged over the labels present in the test set. Per class,
/// precision/recall default to 0 when undefined, and f1 is the harmonic
/// mean of that class's precision and recall (0 when both are 0).
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

Metrics evaluate(const Model& model, const data::Dataset& test);

// -------------------------------------------------------------------------
// Serialization (versioned JSON)
// -------------------------------------------------------------------------

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace vitalguard::dcm
