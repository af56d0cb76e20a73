#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "vitalguard/data.hpp"
#include "vitalguard/dcm.hpp"

namespace vg = vitalguard;
namespace data = vitalguard::data;
namespace dcm = vitalguard::dcm;

TEST_SUITE("dcm") {

TEST_CASE("decision tree separates two far blobs perfectly") {
  const data::Dataset train = vg::testing::two_blob_dataset(100, 3);
  const data::Dataset test = vg::testing::two_blob_dataset(40, 4);
  const dcm::DecisionTreeModel model = dcm::train_dt(train);
  CHECK_NOTHROW(model.validate());
  CHECK(model.depth() <= 10);
  const dcm::Metrics m = dcm::evaluate(model, test);
  CHECK(m.accuracy == doctest::Approx(1.0));
  CHECK(m.f1 == doctest::Approx(1.0));
}

TEST_CASE("decision tree respects depth and leaf-size limits") {
  const data::Dataset train = vg::testing::small_cohort(600, 5);
  dcm::DtParams params;
  params.max_depth = 3;
  params.min_leaf_size = 20;
  const dcm::DecisionTreeModel model = dcm::train_dt(train, params);
  CHECK(model.depth() <= 3);

  // Every leaf decision is reachable and in range.
  for (const auto& rec : train.records) {
    const int label = dcm::predict(model, rec.measurements);
    CHECK(label >= 0);
    CHECK(label < static_cast<int>(train.schema.n_labels()));
  }
}

TEST_CASE("decision tree training is deterministic") {
  const data::Dataset train = vg::testing::small_cohort(400, 11);
  const dcm::DecisionTreeModel a = dcm::train_dt(train);
  const dcm::DecisionTreeModel b = dcm::train_dt(train);
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].attr == b.nodes[i].attr);
    CHECK(a.nodes[i].threshold == b.nodes[i].threshold);
    CHECK(a.nodes[i].leaf_label == b.nodes[i].leaf_label);
  }
}

TEST_CASE("scaler standardises and guards zero variance") {
  data::Dataset ds;
  ds.schema = {{"a", "b"}, {"x", "y"}};
  ds.records = {{{2.0, 7.0}, 0}, {{4.0, 7.0}, 1}, {{6.0, 7.0}, 0}};
  const dcm::Scaler scaler = dcm::fit_scaler(ds);
  CHECK(scaler.mean[0] == doctest::Approx(4.0));
  CHECK(scaler.mean[1] == doctest::Approx(7.0));
  CHECK(scaler.stddev[1] == 1.0);  // zero-variance guard

  const std::vector<double> z = scaler.transform({4.0, 7.0});
  CHECK(z[0] == doctest::Approx(0.0));
  CHECK(z[1] == doctest::Approx(0.0));
}

TEST_CASE("logistic regression reaches high accuracy on separable data") {
  const data::Dataset train = vg::testing::two_blob_dataset(100, 13);
  const dcm::LogisticRegressionModel model = dcm::train_lr(train);
  CHECK_NOTHROW(model.validate());
  const dcm::Metrics m = dcm::evaluate(model, train);
  CHECK(m.accuracy >= 0.99);
}

TEST_CASE("prediction ties resolve to the lowest label index") {
  // Hand-built logistic model whose two labels score identically everywhere
  // (identical weights and intercepts).
  dcm::LogisticRegressionModel model;
  model.n_sensors = 2;
  model.n_labels = 3;
  model.weights = {{1.0, -1.0}, {1.0, -1.0}, {0.5, 0.5}};
  model.intercept = {0.25, 0.25, -10.0};
  model.scaler.mean = {0.0, 0.0};
  model.scaler.stddev = {1.0, 1.0};

  const std::vector<double> x{2.0, 1.0};
  const std::vector<double> scores = model.logits(x);
  CHECK(scores[0] == scores[1]);
  CHECK(dcm::predict(model, x) == 0);
}

TEST_CASE("network forward trace matches its logits") {
  const data::Dataset train = vg::testing::two_blob_dataset(60, 17);
  dcm::NnParams params;
  params.hidden = {5, 4};
  params.epochs = 5;
  params.seed = 17;
  const dcm::NeuralNetworkModel model = dcm::train_nn(train, params);
  CHECK_NOTHROW(model.validate());

  const std::vector<double>& x = train.records[3].measurements;
  const auto trace = model.forward_trace(x);
  REQUIRE(trace.pre.size() == 2);
  CHECK(trace.pre[0].size() == 5);
  CHECK(trace.pre[1].size() == 4);
  CHECK(trace.output == model.logits(x));

  // Post-activations are exactly ReLU of pre-activations.
  for (std::size_t m = 0; m < trace.pre.size(); ++m)
    for (std::size_t o = 0; o < trace.pre[m].size(); ++o)
      CHECK(trace.post[m][o] == (trace.pre[m][o] > 0 ? trace.pre[m][o] : 0.0));
}

TEST_CASE("network analytic gradients match central differences") {
  const data::Dataset train = vg::testing::two_blob_dataset(40, 19);
  dcm::NnParams params;
  params.hidden = {4};
  params.epochs = 3;
  params.seed = 19;
  const dcm::NeuralNetworkModel model = dcm::train_nn(train, params);

  std::vector<std::vector<double>> batch;
  std::vector<int> labels;
  for (std::size_t i = 0; i < 10; ++i) {
    batch.push_back(train.records[i * 7 % train.size()].measurements);
    labels.push_back(train.records[i * 7 % train.size()].label);
  }
  const dcm::NnGradients analytic = dcm::nn_loss_and_gradients(model, batch, labels);
  const vg::testing::NumericGradients numeric =
      vg::testing::finite_difference_gradients(model, batch, labels, 1e-5);

  for (std::size_t m = 0; m < analytic.d_weights.size(); ++m)
    for (std::size_t o = 0; o < analytic.d_weights[m].size(); ++o) {
      for (std::size_t i = 0; i < analytic.d_weights[m][o].size(); ++i) {
        const double a = analytic.d_weights[m][o][i];
        const double n = numeric.d_weights[m][o][i];
        CHECK(std::fabs(a - n) <=
              1e-4 * std::max(1e-3, std::fabs(a) + std::fabs(n)));
      }
      const double a = analytic.d_biases[m][o];
      const double n = numeric.d_biases[m][o];
      CHECK(std::fabs(a - n) <=
            1e-4 * std::max(1e-3, std::fabs(a) + std::fabs(n)));
    }
}

TEST_CASE("network training is seed-deterministic and learns the blobs") {
  const data::Dataset train = vg::testing::two_blob_dataset(80, 23);
  dcm::NnParams params;
  params.hidden = {6};
  params.epochs = 30;
  params.seed = 23;
  const dcm::NeuralNetworkModel a = dcm::train_nn(train, params);
  const dcm::NeuralNetworkModel b = dcm::train_nn(train, params);
  CHECK(a.weights == b.weights);
  CHECK(a.biases == b.biases);
  CHECK(dcm::evaluate(a, train).accuracy >= 0.95);
}

TEST_CASE("evaluate computes the documented macro metrics") {
  // Hand-checkable confusion: labels {0,1}, predictions from a stub tree
  // that always answers 0.
  dcm::DecisionTreeModel stub;
  stub.n_sensors = 1;
  stub.n_labels = 2;
  stub.nodes = {dcm::DtNode{}};
  stub.nodes[0].leaf_label = 0;
  stub.root = 0;

  data::Dataset test;
  test.schema = {{"s"}, {"a", "b"}};
  test.records = {{{0.0}, 0}, {{0.0}, 0}, {{0.0}, 0}, {{0.0}, 1}};
  const dcm::Metrics m = dcm::evaluate(stub, test);
  CHECK(m.accuracy == doctest::Approx(0.75));
  // class 0: precision 3/4, recall 1; class 1: precision 0, recall 0.
  CHECK(m.precision == doctest::Approx((0.75 + 0.0) / 2));
  CHECK(m.recall == doctest::Approx(0.5));
  // class 0 f1 = 2 * 0.75 / 1.75; class 1 f1 = 0.
  CHECK(m.f1 == doctest::Approx((1.5 / 1.75) / 2));
  REQUIRE(m.confusion.size() == 2);
  CHECK(m.confusion[0][0] == 3);
  CHECK(m.confusion[1][0] == 1);
  CHECK(m.confusion[1][1] == 0);
}

TEST_CASE("model serialization round trips all three kinds") {
  vg::testing::TempDir dir;
  const data::Dataset train = vg::testing::two_blob_dataset(60, 27);
  dcm::NnParams nn_params;
  nn_params.hidden = {4};
  nn_params.epochs = 4;
  nn_params.seed = 27;

  const std::vector<dcm::Model> models = {
      dcm::train_dt(train),
      dcm::train_lr(train),
      dcm::train_nn(train, nn_params),
  };
  for (const dcm::Model& model : models) {
    const std::string path = dir.file(dcm::model_kind(model) + ".json");
    dcm::save_model(model, path);
    const dcm::Model back = dcm::load_model(path);
    CHECK(dcm::model_kind(back) == dcm::model_kind(model));
    CHECK(dcm::model_sensors(back) == 2);
    CHECK(dcm::model_labels(back) == 2);
    for (const auto& rec : train.records)
      CHECK(dcm::predict(back, rec.measurements) ==
            dcm::predict(model, rec.measurements));
  }
}

TEST_CASE("prediction rejects dimension mismatches") {
  const data::Dataset train = vg::testing::two_blob_dataset(40, 33);
  const dcm::DecisionTreeModel dt = dcm::train_dt(train);
  CHECK_THROWS_AS((void)dcm::predict(dt, std::vector<double>{1.0}),
                  dcm::DimensionMismatch);
  const dcm::LogisticRegressionModel lr = dcm::train_lr(train);
  CHECK_THROWS_AS((void)lr.logits({1.0, 2.0, 3.0}), dcm::DimensionMismatch);
}

}  // TEST_SUITE
