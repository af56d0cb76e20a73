/// JSON persistence for trained models and cluster atlases. The JSON library
/// stays private to this translation unit so installed headers carry no
/// third-party includes.

#include <cstdio>

#include "json.hpp"
#include "vitalguard/atlas.hpp"
#include "vitalguard/dcm.hpp"
#include "vitalguard/version.hpp"

namespace vitalguard {
namespace {

using nlohmann::json;

json scaler_to_json(const dcm::Scaler& s) {
  return json{{"mean", s.mean}, {"stddev", s.stddev}};
}

dcm::Scaler scaler_from_json(const json& j) {
  dcm::Scaler s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("stddev").get<std::vector<double>>();
  return s;
}

json dt_node_to_json(const dcm::DecisionTreeModel& m, int index) {
  const dcm::DtNode& node = m.nodes.at(static_cast<std::size_t>(index));
  if (node.is_leaf()) return json{{"leaf_label", node.leaf_label}};
  return json{{"attr", node.attr},
              {"threshold", node.threshold},
              {"left", dt_node_to_json(m, node.left)},
              {"right", dt_node_to_json(m, node.right)}};
}

int dt_node_from_json(const json& j, dcm::DecisionTreeModel& m) {
  dcm::DtNode node;
  const int index = static_cast<int>(m.nodes.size());
  m.nodes.push_back(node);  // reserve the slot; children append after it
  if (j.contains("leaf_label")) {
    m.nodes[index].leaf_label = j.at("leaf_label").get<int>();
    return index;
  }
  const std::size_t attr = j.at("attr").get<std::size_t>();
  const double threshold = j.at("threshold").get<double>();
  const int left = dt_node_from_json(j.at("left"), m);
  const int right = dt_node_from_json(j.at("right"), m);
  m.nodes[index].attr = attr;
  m.nodes[index].threshold = threshold;
  m.nodes[index].left = left;
  m.nodes[index].right = right;
  return index;
}

void check_version(const json& j, const std::string& what) {
  if (!j.contains("version"))
    throw Error(what + ": missing \"version\"");
  const int v = j.at("version").get<int>();
  if (v != kSchemaVersion)
    throw Error(what + ": unsupported schema version " + std::to_string(v));
}

json parse_file(const std::string& path, const std::string& what) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(what + " '" + path + "': " + e.what());
  }
}

}  // namespace

namespace dcm {

void save_model(const Model& model, const std::string& path) {
  json j;
  j["version"] = kSchemaVersion;
  j["kind"] = model_kind(model);
  j["n_sensors"] = model_sensors(model);
  j["n_labels"] = model_labels(model);
  if (const auto* dt = std::get_if<DecisionTreeModel>(&model)) {
    j["tree"] = dt_node_to_json(*dt, dt->root);
  } else if (const auto* lr = std::get_if<LogisticRegressionModel>(&model)) {
    j["weights"] = lr->weights;
    j["intercept"] = lr->intercept;
    j["scaler"] = scaler_to_json(lr->scaler);
  } else if (const auto* nn = std::get_if<NeuralNetworkModel>(&model)) {
    j["hidden"] = nn->hidden;
    j["weights"] = nn->weights;
    j["biases"] = nn->biases;
    j["activation"] = nn->activation;
    j["scaler"] = scaler_to_json(nn->scaler);
  }
  write_file(path, j.dump(2) + "\n");
}

Model load_model(const std::string& path) {
  const json j = parse_file(path, "model file");
  try {
    check_version(j, "model file");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dt") {
      DecisionTreeModel m;
      m.n_sensors = j.at("n_sensors").get<std::size_t>();
      m.n_labels = j.at("n_labels").get<std::size_t>();
      m.root = dt_node_from_json(j.at("tree"), m);
      m.validate();
      return m;
    }
    if (kind == "lr") {
      LogisticRegressionModel m;
      m.n_sensors = j.at("n_sensors").get<std::size_t>();
      m.n_labels = j.at("n_labels").get<std::size_t>();
      m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
      m.intercept = j.at("intercept").get<std::vector<double>>();
      m.scaler = scaler_from_json(j.at("scaler"));
      m.validate();
      return m;
    }
    if (kind == "nn") {
      NeuralNetworkModel m;
      m.n_sensors = j.at("n_sensors").get<std::size_t>();
      m.n_labels = j.at("n_labels").get<std::size_t>();
      m.hidden = j.at("hidden").get<std::vector<std::size_t>>();
      m.weights =
          j.at("weights")
              .get<std::vector<std::vector<std::vector<double>>>>();
      m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
      m.activation = j.at("activation").get<std::string>();
      m.scaler = scaler_from_json(j.at("scaler"));
      m.validate();
      return m;
    }
    throw Error("model file: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw Error(std::string("model file: ") + e.what());
  }
}

}  // namespace dcm

namespace adm {

namespace {

json polygon_to_json(const Polygon& p) {
  json ring = json::array();
  for (const auto& v : p.vertices) ring.push_back(json::array({v.x, v.y}));
  return ring;
}

Polygon polygon_from_json(const json& j) {
  Polygon p;
  for (const auto& v : j)
    p.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  return p;
}

std::string key_to_string(const PairKey& k) {
  return std::to_string(k.label) + "/" + std::to_string(k.a) + "/" +
         std::to_string(k.b);
}

PairKey key_from_string(const std::string& s) {
  PairKey k;
  int label = 0;
  unsigned long a = 0, b = 0;
  if (std::sscanf(s.c_str(), "%d/%lu/%lu", &label, &a, &b) != 3)
    throw Error("atlas file: malformed entry key '" + s + "'");
  k.label = label;
  k.a = a;
  k.b = b;
  return k;
}

}  // namespace

void save_atlas(const ClusterAtlas& atlas, const std::string& path) {
  json j;
  j["version"] = kSchemaVersion;
  j["n_sensors"] = atlas.n_sensors;
  j["n_labels"] = atlas.n_labels;
  j["algorithm"] = to_string(atlas.algorithm);
  j["seed"] = atlas.seed;
  json entries = json::object();
  for (const auto& [key, entry] : atlas.entries) {
    json e;
    e["degenerate"] = entry.degenerate;
    json polys = json::array();
    for (const auto& p : entry.polygons) polys.push_back(polygon_to_json(p));
    e["polygons"] = std::move(polys);
    json params;
    params["algorithm"] = to_string(entry.params.algorithm);
    if (entry.params.algorithm == Algorithm::kDbscan) {
      params["epsilon"] = entry.params.epsilon;
      params["min_points"] = entry.params.min_points;
    } else {
      params["k"] = entry.params.k;
    }
    e["params"] = std::move(params);
    e["cluster_count"] = entry.cluster_count;
    e["noise_count"] = entry.noise_count;
    e["point_count"] = entry.point_count;
    e["box_fallbacks"] = entry.box_fallbacks;
    entries[key_to_string(key)] = std::move(e);
  }
  j["entries"] = std::move(entries);
  write_file(path, j.dump(2) + "\n");
}

ClusterAtlas load_atlas(const std::string& path) {
  const json j = parse_file(path, "atlas file");
  try {
    check_version(j, "atlas file");
    ClusterAtlas atlas;
    atlas.n_sensors = j.at("n_sensors").get<std::size_t>();
    atlas.n_labels = j.at("n_labels").get<std::size_t>();
    atlas.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    atlas.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [key_str, e] : j.at("entries").items()) {
      AtlasEntry entry;
      entry.degenerate = e.at("degenerate").get<bool>();
      for (const auto& p : e.at("polygons"))
        entry.polygons.push_back(polygon_from_json(p));
      const json& params = e.at("params");
      entry.params.algorithm =
          algorithm_from_string(params.at("algorithm").get<std::string>());
      if (entry.params.algorithm == Algorithm::kDbscan) {
        entry.params.epsilon = params.at("epsilon").get<double>();
        entry.params.min_points = params.at("min_points").get<std::size_t>();
      } else {
        entry.params.k = params.at("k").get<std::size_t>();
      }
      entry.cluster_count = e.at("cluster_count").get<std::size_t>();
      entry.noise_count = e.at("noise_count").get<std::size_t>();
      entry.point_count = e.at("point_count").get<std::size_t>();
      entry.box_fallbacks = e.at("box_fallbacks").get<std::size_t>();
      atlas.entries.emplace(key_from_string(key_str), std::move(entry));
    }
    atlas.validate();
    return atlas;
  } catch (const json::exception& e) {
    throw Error(std::string("atlas file: ") + e.what());
  }
}

}  // namespace adm
}  // namespace vitalguard
