#include "vitalguard/dcm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vitalguard::dcm {
namespace {

int argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

int majority_label(const std::vector<std::size_t>& counts) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[best]) best = i;
  return static_cast<int>(best);
}

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double acc = 1.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    acc -= p * p;
  }
  return acc;
}

struct DtBuilder {
  const data::Dataset& ds;
  const DtParams& params;
  std::vector<DtNode> nodes;

  int leaf(const std::vector<std::size_t>& counts) {
    DtNode n;
    n.leaf_label = majority_label(counts);
    nodes.push_back(n);
    return static_cast<int>(nodes.size() - 1);
  }

  int build(std::vector<std::size_t>& rows, std::size_t depth) {
    const std::size_t n_labels = ds.schema.n_labels();
    std::vector<std::size_t> counts(n_labels, 0);
    for (std::size_t r : rows) ++counts[static_cast<std::size_t>(ds.records[r].label)];
    const double parent = gini(counts, rows.size());

    const bool pure = std::count_if(counts.begin(), counts.end(),
                                    [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || depth >= params.max_depth || rows.size() < 2 * params.min_leaf_size)
      return leaf(counts);

    // Best axis split: lowest weighted child impurity; ties resolve to the
    // lowest sensor index, then the lowest threshold (strict < keeps the
    // earliest candidate).
    double best_impurity = parent;
    std::size_t best_attr = 0;
    double best_threshold = 0.0;
    bool found = false;

    std::vector<std::pair<double, int>> vals(rows.size());
    for (std::size_t s = 0; s < ds.schema.n_sensors(); ++s) {
      for (std::size_t i = 0; i < rows.size(); ++i)
        vals[i] = {ds.records[rows[i]].measurements[s], ds.records[rows[i]].label};
      std::sort(vals.begin(), vals.end());

      std::vector<std::size_t> left(n_labels, 0);
      std::vector<std::size_t> right = counts;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        ++left[static_cast<std::size_t>(vals[i].second)];
        --right[static_cast<std::size_t>(vals[i].second)];
        if (vals[i].first == vals[i + 1].first) continue;  // not a boundary
        const std::size_t nl = i + 1;
        const std::size_t nr = vals.size() - nl;
        if (nl < params.min_leaf_size || nr < params.min_leaf_size) continue;
        const double weighted =
            (static_cast<double>(nl) * gini(left, nl) +
             static_cast<double>(nr) * gini(right, nr)) /
            static_cast<double>(vals.size());
        if (weighted < best_impurity) {
          best_impurity = weighted;
          best_attr = s;
          best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
          found = true;
        }
      }
    }
    if (!found) return leaf(counts);

    std::vector<std::size_t> lrows, rrows;
    for (std::size_t r : rows) {
      if (ds.records[r].measurements[best_attr] <= best_threshold)
        lrows.push_back(r);
      else
        rrows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    DtNode node;
    node.attr = best_attr;
    node.threshold = best_threshold;
    node.left = build(lrows, depth + 1);
    node.right = build(rrows, depth + 1);
    nodes.push_back(node);
    return static_cast<int>(nodes.size() - 1);
  }
};

void check_dims(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(want) +
                            " measurements, got " + std::to_string(got));
}

}  // namespace

// ---------------------------------------------------------------------------
// Decision tree
// ---------------------------------------------------------------------------

void DecisionTreeModel::validate() const {
  if (root < 0 || static_cast<std::size_t>(root) >= nodes.size())
    throw Error("decision tree has no root");
  if (n_labels < 2) throw Error("decision tree needs at least two labels");
  for (const DtNode& n : nodes) {
    if (n.is_leaf()) {
      if (n.leaf_label < 0 || static_cast<std::size_t>(n.leaf_label) >= n_labels)
        throw Error("leaf with out-of-range label");
    } else {
      if (n.attr >= n_sensors) throw Error("split on out-of-range sensor");
      if (n.right < 0 || static_cast<std::size_t>(n.left) >= nodes.size() ||
          static_cast<std::size_t>(n.right) >= nodes.size())
        throw Error("split with invalid child index");
    }
  }
}

namespace {
std::size_t subtree_depth(const std::vector<DtNode>& nodes, int idx) {
  const DtNode& n = nodes[static_cast<std::size_t>(idx)];
  if (n.is_leaf()) return 0;
  return 1 + std::max(subtree_depth(nodes, n.left), subtree_depth(nodes, n.right));
}
}  // namespace

std::size_t DecisionTreeModel::depth() const { return subtree_depth(nodes, root); }

std::size_t DecisionTreeModel::leaf_count() const {
  std::size_t n = 0;
  for (const DtNode& node : nodes)
    if (node.is_leaf()) ++n;
  return n;
}

DecisionTreeModel train_dt(const data::Dataset& train, const DtParams& params) {
  train.validate();
  if (train.records.empty()) throw data::EmptyDataset("train_dt: no records");
  if (params.min_leaf_size == 0) throw InvalidParam("min_leaf_size must be >= 1");

  DtBuilder builder{train, params, {}};
  std::vector<std::size_t> rows(train.records.size());
  std::iota(rows.begin(), rows.end(), 0);

  DecisionTreeModel model;
  model.n_sensors = train.schema.n_sensors();
  model.n_labels = train.schema.n_labels();
  model.root = builder.build(rows, 0);
  model.nodes = std::move(builder.nodes);
  model.validate();
  return model;
}

int predict(const DecisionTreeModel& model, const std::vector<double>& measurements) {
  check_dims(measurements.size(), model.n_sensors, "predict(dt)");
  const DtNode* n = &model.nodes[static_cast<std::size_t>(model.root)];
  while (!n->is_leaf()) {
    const int next = measurements[n->attr] <= n->threshold ? n->left : n->right;
    n = &model.nodes[static_cast<std::size_t>(next)];
  }
  return n->leaf_label;
}

// ---------------------------------------------------------------------------
// Scaler
// ---------------------------------------------------------------------------

std::vector<double> Scaler::transform(const std::vector<double>& raw) const {
  check_dims(raw.size(), mean.size(), "scaler");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - mean[i]) / stddev[i];
  return out;
}

Scaler fit_scaler(const data::Dataset& ds) {
  if (ds.records.empty()) throw data::EmptyDataset("fit_scaler: no records");
  const std::size_t d = ds.schema.n_sensors();
  Scaler sc;
  sc.mean.assign(d, 0.0);
  sc.stddev.assign(d, 0.0);
  for (const auto& r : ds.records)
    for (std::size_t i = 0; i < d; ++i) sc.mean[i] += r.measurements[i];
  for (std::size_t i = 0; i < d; ++i) sc.mean[i] /= static_cast<double>(ds.records.size());
  for (const auto& r : ds.records)
    for (std::size_t i = 0; i < d; ++i) {
      const double dev = r.measurements[i] - sc.mean[i];
      sc.stddev[i] += dev * dev;
    }
  for (std::size_t i = 0; i < d; ++i) {
    sc.stddev[i] = std::sqrt(sc.stddev[i] / static_cast<double>(ds.records.size()));
    if (sc.stddev[i] == 0.0) sc.stddev[i] = 1.0;
  }
  return sc;
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

void LogisticRegressionModel::validate() const {
  if (n_labels < 2) throw Error("lr needs at least two labels");
  if (weights.size() != n_labels || intercept.size() != n_labels)
    throw Error("lr weight shape mismatch");
  for (const auto& w : weights)
    if (w.size() != n_sensors) throw Error("lr weight row shape mismatch");
  if (scaler.mean.size() != n_sensors || scaler.stddev.size() != n_sensors)
    throw Error("lr scaler shape mismatch");
}

std::vector<double> LogisticRegressionModel::logits(const std::vector<double>& raw) const {
  check_dims(raw.size(), n_sensors, "lr logits");
  const std::vector<double> x = scaler.transform(raw);
  std::vector<double> out(n_labels, 0.0);
  for (std::size_t j = 0; j < n_labels; ++j) {
    double z = intercept[j];
    for (std::size_t i = 0; i < n_sensors; ++i) z += weights[j][i] * x[i];
    out[j] = z;
  }
  return out;
}

LogisticRegressionModel train_lr(const data::Dataset& train, const LrParams& params) {
  train.validate();
  if (train.records.empty()) throw data::EmptyDataset("train_lr: no records");
  if (params.step_size <= 0.0) throw InvalidParam("step_size must be > 0");

  const std::size_t n = train.records.size();
  const std::size_t d = train.schema.n_sensors();
  const std::size_t L = train.schema.n_labels();

  LogisticRegressionModel model;
  model.n_sensors = d;
  model.n_labels = L;
  model.scaler = fit_scaler(train);
  model.weights.assign(L, std::vector<double>(d, 0.0));
  model.intercept.assign(L, 0.0);

  std::vector<std::vector<double>> X(n);
  for (std::size_t r = 0; r < n; ++r)
    X[r] = model.scaler.transform(train.records[r].measurements);

  for (std::size_t j = 0; j < L; ++j) {
    std::vector<double>& w = model.weights[j];
    double& b = model.intercept[j];
    double prev_loss = std::numeric_limits<double>::infinity();
    int rising = 0;

    for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
      std::vector<double> grad_w(d, 0.0);
      double grad_b = 0.0;
      double loss = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double z = b;
        for (std::size_t i = 0; i < d; ++i) z += w[i] * X[r][i];
        const double y = train.records[r].label == static_cast<int>(j) ? 1.0 : 0.0;
        loss += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::fabs(z)));
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double g = p - y;
        for (std::size_t i = 0; i < d; ++i) grad_w[i] += g * X[r][i];
        grad_b += g;
      }
      const double scale = 1.0 / static_cast<double>(n);
      loss *= scale;
      if (!std::isfinite(loss))
        throw DivergenceDetected("lr loss is not finite (class " + std::to_string(j) + ")");
      if (loss > prev_loss) {
        if (++rising >= 10)
          throw DivergenceDetected("lr loss rose 10 times in a row (class " +
                                   std::to_string(j) + "); lower step_size");
      } else {
        rising = 0;
      }
      const bool converged = std::fabs(prev_loss - loss) < params.tolerance;
      prev_loss = loss;
      for (std::size_t i = 0; i < d; ++i) w[i] -= params.step_size * scale * grad_w[i];
      b -= params.step_size * scale * grad_b;
      if (converged) break;
    }
  }
  model.validate();
  return model;
}

int predict(const LogisticRegressionModel& model, const std::vector<double>& measurements) {
  return argmax_lowest(model.logits(measurements));
}

// ---------------------------------------------------------------------------
// Neural network
// ---------------------------------------------------------------------------

void NeuralNetworkModel::validate() const {
  if (n_labels < 2) throw Error("nn needs at least two labels");
  if (activation != "relu")
    throw UnsupportedActivation("unsupported activation: " + activation);
  const std::size_t layers = hidden.size() + 1;
  if (weights.size() != layers || biases.size() != layers)
    throw Error("nn layer count mismatch");
  std::size_t in = n_sensors;
  for (std::size_t m = 0; m < layers; ++m) {
    const std::size_t out = m < hidden.size() ? hidden[m] : n_labels;
    if (weights[m].size() != out || biases[m].size() != out)
      throw Error("nn layer " + std::to_string(m) + " shape mismatch");
    for (const auto& row : weights[m])
      if (row.size() != in) throw Error("nn layer " + std::to_string(m) + " fan-in mismatch");
    in = out;
  }
  if (scaler.mean.size() != n_sensors || scaler.stddev.size() != n_sensors)
    throw Error("nn scaler shape mismatch");
}

NeuralNetworkModel::Trace NeuralNetworkModel::forward_trace(
    const std::vector<double>& raw) const {
  check_dims(raw.size(), n_sensors, "nn forward");
  if (activation != "relu")
    throw UnsupportedActivation("unsupported activation: " + activation);
  Trace tr;
  std::vector<double> cur = scaler.transform(raw);
  for (std::size_t m = 0; m < hidden.size(); ++m) {
    std::vector<double> pre(hidden[m], 0.0);
    for (std::size_t o = 0; o < hidden[m]; ++o) {
      double z = biases[m][o];
      for (std::size_t i = 0; i < cur.size(); ++i) z += weights[m][o][i] * cur[i];
      pre[o] = z;
    }
    std::vector<double> post(pre.size());
    for (std::size_t o = 0; o < pre.size(); ++o) post[o] = pre[o] > 0.0 ? pre[o] : 0.0;
    tr.pre.push_back(pre);
    tr.post.push_back(post);
    cur = std::move(post);
  }
  const std::size_t m = hidden.size();
  tr.output.assign(n_labels, 0.0);
  for (std::size_t o = 0; o < n_labels; ++o) {
    double z = biases[m][o];
    for (std::size_t i = 0; i < cur.size(); ++i) z += weights[m][o][i] * cur[i];
    tr.output[o] = z;
  }
  return tr;
}

std::vector<double> NeuralNetworkModel::logits(const std::vector<double>& raw) const {
  return forward_trace(raw).output;
}

NnGradients nn_loss_and_gradients(const NeuralNetworkModel& model,
                                  const std::vector<std::vector<double>>& raw_batch,
                                  const std::vector<int>& labels) {
  if (raw_batch.size() != labels.size() || raw_batch.empty())
    throw InvalidParam("nn gradients: batch shape mismatch");

  NnGradients g;
  const std::size_t layers = model.weights.size();
  g.d_weights.resize(layers);
  g.d_biases.resize(layers);
  for (std::size_t m = 0; m < layers; ++m) {
    g.d_weights[m].assign(model.weights[m].size(),
                          std::vector<double>(model.weights[m][0].size(), 0.0));
    g.d_biases[m].assign(model.biases[m].size(), 0.0);
  }

  const double inv_n = 1.0 / static_cast<double>(raw_batch.size());
  for (std::size_t r = 0; r < raw_batch.size(); ++r) {
    const NeuralNetworkModel::Trace tr = model.forward_trace(raw_batch[r]);
    const std::vector<double> x0 = model.scaler.transform(raw_batch[r]);

    // Softmax cross-entropy on the linear output.
    const double mx = *std::max_element(tr.output.begin(), tr.output.end());
    double lse = 0.0;
    for (double o : tr.output) lse += std::exp(o - mx);
    lse = mx + std::log(lse);
    g.loss += inv_n * (lse - tr.output[static_cast<std::size_t>(labels[r])]);

    std::vector<double> delta(model.n_labels);
    for (std::size_t o = 0; o < model.n_labels; ++o) {
      delta[o] = std::exp(tr.output[o] - lse);
      if (o == static_cast<std::size_t>(labels[r])) delta[o] -= 1.0;
    }

    for (std::size_t m = layers; m-- > 0;) {
      const std::vector<double>& input = m == 0 ? x0 : tr.post[m - 1];
      for (std::size_t o = 0; o < delta.size(); ++o) {
        g.d_biases[m][o] += inv_n * delta[o];
        for (std::size_t i = 0; i < input.size(); ++i)
          g.d_weights[m][o][i] += inv_n * delta[o] * input[i];
      }
      if (m == 0) break;
      std::vector<double> next(input.size(), 0.0);
      for (std::size_t i = 0; i < input.size(); ++i) {
        if (tr.pre[m - 1][i] <= 0.0) continue;  // ReLU gate
        double acc = 0.0;
        for (std::size_t o = 0; o < delta.size(); ++o)
          acc += model.weights[m][o][i] * delta[o];
        next[i] = acc;
      }
      delta = std::move(next);
    }
  }
  return g;
}

NeuralNetworkModel train_nn(const data::Dataset& train, const NnParams& params) {
  train.validate();
  if (train.records.empty()) throw data::EmptyDataset("train_nn: no records");
  if (params.hidden.empty()) throw InvalidParam("nn needs at least one hidden layer");
  if (params.batch_size == 0) throw InvalidParam("batch_size must be >= 1");

  NeuralNetworkModel model;
  model.n_sensors = train.schema.n_sensors();
  model.n_labels = train.schema.n_labels();
  model.hidden = params.hidden;
  model.scaler = fit_scaler(train);

  Rng init_rng = Rng(params.seed).child(1);
  std::size_t in = model.n_sensors;
  for (std::size_t m = 0; m <= params.hidden.size(); ++m) {
    const std::size_t out = m < params.hidden.size() ? params.hidden[m] : model.n_labels;
    const double sigma = std::sqrt(2.0 / static_cast<double>(in));
    std::vector<std::vector<double>> W(out, std::vector<double>(in, 0.0));
    for (auto& row : W)
      for (double& w : row) w = sigma * init_rng.gaussian();
    model.weights.push_back(std::move(W));
    model.biases.emplace_back(out, 0.0);
    in = out;
  }

  // Adam state.
  auto zeros_like_w = model.weights;
  auto zeros_like_b = model.biases;
  for (auto& layer : zeros_like_w)
    for (auto& row : layer) std::fill(row.begin(), row.end(), 0.0);
  for (auto& layer : zeros_like_b) std::fill(layer.begin(), layer.end(), 0.0);
  auto mw = zeros_like_w, vw = zeros_like_w;
  auto mb = zeros_like_b, vb = zeros_like_b;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double beta1_t = 1.0, beta2_t = 1.0;

  std::vector<std::size_t> order(train.records.size());
  std::iota(order.begin(), order.end(), 0);
  const Rng shuffle_root = Rng(params.seed).child(2);

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    Rng rng = shuffle_root.child(epoch);
    deterministic_shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const std::size_t stop = std::min(start + params.batch_size, order.size());
      std::vector<std::vector<double>> batch;
      std::vector<int> labels;
      batch.reserve(stop - start);
      labels.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(train.records[order[i]].measurements);
        labels.push_back(train.records[order[i]].label);
      }
      const NnGradients g = nn_loss_and_gradients(model, batch, labels);
      if (!std::isfinite(g.loss))
        throw NonFiniteLoss("nn loss left the reals at epoch " + std::to_string(epoch));

      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      for (std::size_t m = 0; m < model.weights.size(); ++m) {
        for (std::size_t o = 0; o < model.weights[m].size(); ++o) {
          for (std::size_t i = 0; i < model.weights[m][o].size(); ++i) {
            double& mm = mw[m][o][i];
            double& vv = vw[m][o][i];
            const double grad = g.d_weights[m][o][i];
            mm = kBeta1 * mm + (1.0 - kBeta1) * grad;
            vv = kBeta2 * vv + (1.0 - kBeta2) * grad * grad;
            const double mhat = mm / (1.0 - beta1_t);
            const double vhat = vv / (1.0 - beta2_t);
            model.weights[m][o][i] -= params.step_size * mhat / (std::sqrt(vhat) + kEps);
          }
          double& mm = mb[m][o];
          double& vv = vb[m][o];
          const double grad = g.d_biases[m][o];
          mm = kBeta1 * mm + (1.0 - kBeta1) * grad;
          vv = kBeta2 * vv + (1.0 - kBeta2) * grad * grad;
          const double mhat = mm / (1.0 - beta1_t);
          const double vhat = vv / (1.0 - beta2_t);
          model.biases[m][o] -= params.step_size * mhat / (std::sqrt(vhat) + kEps);
        }
      }
    }
  }
  model.validate();
  return model;
}

int predict(const NeuralNetworkModel& model, const std::vector<double>& measurements) {
  return argmax_lowest(model.logits(measurements));
}

// ---------------------------------------------------------------------------
// Shared
// ---------------------------------------------------------------------------

std::string model_kind(const Model& model) {
  if (std::holds_alternative<DecisionTreeModel>(model)) return "dt";
  if (std::holds_alternative<LogisticRegressionModel>(model)) return "lr";
  return "nn";
}

std::size_t model_sensors(const Model& model) {
  return std::visit([](const auto& m) { return m.n_sensors; }, model);
}

std::size_t model_labels(const Model& model) {
  return std::visit([](const auto& m) { return m.n_labels; }, model);
}

int predict(const Model& model, const std::vector<double>& measurements) {
  return std::visit([&](const auto& m) { return predict(m, measurements); }, model);
}

Metrics evaluate(const Model& model, const data::Dataset& test) {
  test.validate();
  if (test.records.empty()) throw data::EmptyDataset("evaluate: no records");
  const std::size_t L = model_labels(model);

  Metrics m;
  m.confusion.assign(L, std::vector<std::size_t>(L, 0));
  std::size_t correct = 0;
  for (const auto& rec : test.records) {
    const int pred = predict(model, rec.measurements);
    ++m.confusion[static_cast<std::size_t>(rec.label)][static_cast<std::size_t>(pred)];
    if (pred == rec.label) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(test.records.size());

  double psum = 0.0, rsum = 0.0, fsum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < L; ++c) {
    std::size_t row_total = 0, col_total = 0;
    for (std::size_t k = 0; k < L; ++k) {
      row_total += m.confusion[c][k];
      col_total += m.confusion[k][c];
    }
    if (row_total == 0) continue;  // label absent from the test set
    ++present;
    const double tp = static_cast<double>(m.confusion[c][c]);
    const double prec = col_total > 0 ? tp / static_cast<double>(col_total) : 0.0;
    const double rec = tp / static_cast<double>(row_total);
    const double f1 = (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    psum += prec;
    rsum += rec;
    fsum += f1;
  }
  if (present > 0) {
    m.precision = psum / static_cast<double>(present);
    m.recall = rsum / static_cast<double>(present);
    m.f1 = fsum / static_cast<double>(present);
  }
  return m;
}

}  // namespace vitalguard::dcm
