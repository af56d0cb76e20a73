/// vitalguard -- command-line surface over the analysis library:
/// generate/train/atlas for the model pipeline, attack/matrix/resiliency for
/// solver queries, report for plot-ready CSV extraction. All outputs are
/// versioned JSON with embedded provenance (seed + input fingerprints).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "vitalguard/atlas.hpp"
#include "vitalguard/cir.hpp"
#include "vitalguard/data.hpp"
#include "vitalguard/dcm.hpp"
#include "vitalguard/solve.hpp"
#include "vitalguard/subprocess.hpp"
#include "vitalguard/threat.hpp"
#include "vitalguard/version.hpp"

namespace vg = vitalguard;
using nlohmann::json;

namespace {

// Exit codes: 0 success (including analysis-level infeasibility), 2 usage
// error, 3 backend failure.
constexpr int kExitUsage = 2;
constexpr int kExitBackend = 3;

#ifndef VITALGUARD_SMT_DIR
#define VITALGUARD_SMT_DIR ""
#endif

struct CommonOptions {
  std::string data_path;
  bool generate = false;
  std::size_t rows = 17000;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
};

struct BackendOptions {
  std::string backend = "auto";  // auto | process | builtin
  std::string solver_path;
  double timeout = 300.0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_data = true) {
  if (with_data) {
    cmd->add_option("--data", o.data_path, "input dataset CSV");
    cmd->add_flag("--generate", o.generate,
                  "synthesize the default cohort instead of reading --data");
    cmd->add_option("--rows", o.rows, "rows for --generate")
        ->capture_default_str();
  }
  cmd->add_option("--seed", o.seed, "root RNG seed")->capture_default_str();
  cmd->add_option("--out", o.out_dir, "output directory")
      ->capture_default_str();
}

void add_backend(CLI::App* cmd, BackendOptions& o) {
  cmd->add_option("--backend", o.backend,
                  "solver backend: auto, process (external SMT-LIB), builtin")
      ->check(CLI::IsMember({"auto", "process", "builtin"}))
      ->capture_default_str();
  cmd->add_option("--solver-path", o.solver_path,
                  "external solver command line (overrides VITALGUARD_SOLVER)");
  cmd->add_option("--timeout", o.timeout, "per-query solver timeout, seconds")
      ->capture_default_str();
}

std::vector<std::string> split_command(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string word;
  while (is >> word) out.push_back(word);
  return out;
}

std::unique_ptr<vg::solve::Backend> make_backend(const BackendOptions& o,
                                                 std::uint64_t seed) {
  if (o.backend == "builtin") {
    vg::solve::BuiltinSearchParams params;
    params.seed = seed;
    return std::make_unique<vg::solve::BuiltinSearchBackend>(params, o.timeout);
  }
  std::vector<std::string> cmd;
  if (!o.solver_path.empty()) {
    cmd = split_command(o.solver_path);
  } else {
    try {
      cmd = vg::solve::default_solver_command(VITALGUARD_SMT_DIR);
    } catch (const vg::solve::BackendUnavailable&) {
      if (o.backend == "process") throw;
      std::cerr << "note: no external solver found, using the builtin "
                   "incomplete search\n";
      vg::solve::BuiltinSearchParams params;
      params.seed = seed;
      return std::make_unique<vg::solve::BuiltinSearchBackend>(params,
                                                               o.timeout);
    }
  }
  return std::make_unique<vg::solve::SmtLibProcessBackend>(cmd, o.timeout);
}

std::filesystem::path ensure_out_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

vg::data::Dataset load_or_generate(const CommonOptions& o) {
  if (o.generate) {
    if (!o.data_path.empty())
      throw vg::Error("--data and --generate are mutually exclusive");
    return vg::data::generate_synthetic(
        vg::data::default_synthetic_config(o.rows), o.seed);
  }
  if (o.data_path.empty())
    throw vg::Error("either --data or --generate is required");
  vg::data::Dataset ds = vg::data::load_csv(o.data_path);
  // Pick up label names from a schema sidecar when one sits next to the CSV.
  std::filesystem::path sidecar(o.data_path);
  sidecar.replace_extension(".schema.json");
  if (std::filesystem::exists(sidecar)) {
    vg::data::SensorSchema schema =
        vg::data::load_schema_sidecar(sidecar.string());
    if (schema.sensor_names == ds.schema.sensor_names &&
        schema.n_labels() >= ds.schema.n_labels())
      ds.schema.label_names = schema.label_names;
  }
  return ds;
}

json provenance(std::uint64_t seed,
                const std::vector<std::pair<std::string, std::string>>& inputs) {
  json p;
  p["tool_version"] = vg::kVersionString;
  p["schema_version"] = vg::kSchemaVersion;
  p["seed"] = seed;
  json in = json::object();
  for (const auto& [name, path] : inputs)
    in[name] = json{{"path", path},
                    {"fingerprint",
                     vg::content_fingerprint(vg::read_file(path))}};
  p["inputs"] = std::move(in);
  return p;
}

int parse_label(const std::string& s, const vg::data::SensorSchema& schema) {
  for (std::size_t i = 0; i < schema.label_names.size(); ++i)
    if (schema.label_names[i] == s) return static_cast<int>(i);
  try {
    const int v = std::stoi(s);
    if (v >= 0 && static_cast<std::size_t>(v) < schema.n_labels()) return v;
  } catch (const std::exception&) {
  }
  throw vg::Error("unknown label '" + s + "'");
}

/// --patient accepts a record index or "median:<label>" (the record of that
/// label closest to its per-sensor median that passes both baseline checks).
std::size_t select_patient(const std::string& spec, const vg::data::Dataset& ds,
                           const vg::dcm::Model& model,
                           const vg::adm::ClusterAtlas& atlas) {
  if (spec.rfind("median:", 0) != 0) {
    std::size_t idx = 0;
    try {
      idx = std::stoul(spec);
    } catch (const std::exception&) {
      throw vg::Error("--patient must be an index or median:<label>");
    }
    if (idx >= ds.size())
      throw vg::Error("--patient index " + spec + " out of range (dataset has " +
                      std::to_string(ds.size()) + " records)");
    return idx;
  }

  const int label = parse_label(spec.substr(7), ds.schema);
  const std::vector<std::size_t> candidates = ds.indices_of_label(label);
  if (candidates.empty())
    throw vg::Error("no records with label '" + spec.substr(7) + "'");

  const std::size_t n = ds.schema.n_sensors();
  std::vector<double> median(n);
  std::vector<double> column(candidates.size());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < candidates.size(); ++i)
      column[i] = ds.records[candidates[i]].measurements[s];
    std::nth_element(column.begin(), column.begin() + column.size() / 2,
                     column.end());
    median[s] = column[column.size() / 2];
  }

  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(candidates.size());
  for (const std::size_t idx : candidates) {
    double d2 = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double d = ds.records[idx].measurements[s] - median[s];
      d2 += d * d;
    }
    ranked.emplace_back(d2, idx);
  }
  std::sort(ranked.begin(), ranked.end());

  std::size_t skipped = 0;
  for (const auto& [d2, idx] : ranked) {
    const auto& m = ds.records[idx].measurements;
    if (vg::dcm::predict(model, m) == label &&
        vg::adm::consistent(m, label, atlas))
      return idx;
    ++skipped;
  }
  (void)skipped;
  throw vg::Error("every record of label '" + spec.substr(7) +
                  "' fails the baseline checks (model prediction or atlas "
                  "consistency); skipped " + std::to_string(skipped));
}

std::vector<vg::cir::AttackerCapability> parse_ladder(const std::string& spec,
                                                      std::size_t n_sensors) {
  if (spec.empty() || spec == "default")
    return vg::threat::default_ladder(n_sensors);
  std::vector<vg::cir::AttackerCapability> ladder;
  std::istringstream is(spec);
  std::string item;
  while (std::getline(is, item, ',')) {
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw vg::Error("--ladder items must look like max_sensors:threshold, "
                      "got '" + item + "'");
    vg::cir::AttackerCapability cap;
    try {
      cap.max_sensors = std::stoul(item.substr(0, colon));
      cap.threshold = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw vg::Error("cannot parse ladder rung '" + item + "'");
    }
    cap.validate(n_sensors);
    ladder.push_back(cap);
  }
  if (ladder.empty()) throw vg::Error("--ladder parsed to an empty list");
  return ladder;
}

json capability_to_json(const vg::cir::AttackerCapability& c) {
  return json{{"max_sensors", c.max_sensors}, {"threshold", c.threshold}};
}

json vector_to_json(const vg::threat::AttackVector& v,
                    const vg::data::SensorSchema& schema) {
  json j;
  j["patient"] = v.baseline;
  j["source_label"] = v.source_label;
  j["source_label_name"] = schema.label_names.at(v.source_label);
  j["target_label"] = v.target_label;
  j["target_label_name"] = schema.label_names.at(v.target_label);
  j["deltas"] = v.deltas;
  j["altered"] = v.altered;
  j["touched_sensors"] = v.touched_sensors();
  json touched = json::array();
  for (std::size_t s = 0; s < v.deltas.size(); ++s)
    if (v.deltas[s] != 0.0) touched.push_back(schema.sensor_names.at(s));
  j["touched_sensor_names"] = std::move(touched);
  j["capability"] = capability_to_json(v.capability);
  j["backend"] = v.backend_name;
  j["validated"] = v.validated;
  return j;
}

json rung_to_json(const vg::threat::RungResult& r,
                  const vg::data::SensorSchema& schema) {
  json j;
  j["max_sensors"] = r.capability.max_sensors;
  j["threshold"] = r.capability.threshold;
  j["feasibility"] = vg::threat::to_string(r.feasibility);
  j["derived"] = r.derived;
  j["wall_seconds"] = r.wall_seconds;
  if (!r.detail.empty()) j["detail"] = r.detail;
  if (r.vector) j["vector"] = vector_to_json(*r.vector, schema);
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
  vg::write_file(path.string(), j.dump(2) + "\n");
  std::cerr << "wrote " << path.string() << "\n";
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_generate(const CommonOptions& common) {
  const auto out = ensure_out_dir(common.out_dir);
  const vg::data::Dataset ds = vg::data::generate_synthetic(
      vg::data::default_synthetic_config(common.rows), common.seed);
  const auto csv = out / "data.csv";
  vg::data::save_csv(ds, csv.string());
  vg::data::save_schema_sidecar(ds.schema, (out / "data.schema.json").string());
  std::cerr << "wrote " << csv.string() << " (" << ds.size() << " records, "
            << ds.schema.n_sensors() << " sensors, " << ds.schema.n_labels()
            << " labels)\n";
  return 0;
}

struct TrainOptions {
  std::string dcm = "dt";
  double test_fraction = 0.3;
  std::size_t dt_max_depth = 10;
  std::size_t dt_min_leaf = 5;
  std::size_t lr_iterations = 500;
  std::size_t nn_epochs = 60;
  std::string nn_hidden = "20,12,8";
};

int cmd_train(const CommonOptions& common, const TrainOptions& opt) {
  const auto out = ensure_out_dir(common.out_dir);
  const vg::data::Dataset ds = load_or_generate(common);
  const vg::data::SplitResult split =
      vg::data::stratified_split(ds, opt.test_fraction, common.seed);

  vg::dcm::Model model;
  if (opt.dcm == "dt") {
    model = vg::dcm::train_dt(split.train,
                              {opt.dt_max_depth, opt.dt_min_leaf});
  } else if (opt.dcm == "lr") {
    vg::dcm::LrParams params;
    params.max_iterations = opt.lr_iterations;
    model = vg::dcm::train_lr(split.train, params);
  } else if (opt.dcm == "nn") {
    vg::dcm::NnParams params;
    params.epochs = opt.nn_epochs;
    params.seed = common.seed;
    params.hidden.clear();
    std::istringstream is(opt.nn_hidden);
    std::string w;
    while (std::getline(is, w, ',')) params.hidden.push_back(std::stoul(w));
    model = vg::dcm::train_nn(split.train, params);
  } else {
    throw CLI::ValidationError("--dcm", "unknown model kind '" + opt.dcm + "'");
  }

  const auto model_path = out / (opt.dcm + "_model.json");
  vg::dcm::save_model(model, model_path.string());

  const vg::dcm::Metrics metrics = vg::dcm::evaluate(model, split.test);
  json mj;
  mj["version"] = vg::kSchemaVersion;
  mj["kind"] = opt.dcm;
  mj["train_records"] = split.train.size();
  mj["test_records"] = split.test.size();
  mj["accuracy"] = metrics.accuracy;
  mj["precision"] = metrics.precision;
  mj["recall"] = metrics.recall;
  mj["f1"] = metrics.f1;
  mj["confusion"] = metrics.confusion;
  mj["labels"] = ds.schema.label_names;
  mj["provenance"] = provenance(common.seed, {});
  write_json(out / (opt.dcm + "_metrics.json"), mj);
  std::cerr << opt.dcm << " accuracy " << metrics.accuracy << ", f1 "
            << metrics.f1 << "\n";
  return 0;
}

struct AtlasOptions {
  std::string adm = "dbscan";
  std::size_t threads = 0;
};

int cmd_atlas(const CommonOptions& common, const AtlasOptions& opt) {
  const auto out = ensure_out_dir(common.out_dir);
  const vg::data::Dataset ds = load_or_generate(common);

  vg::adm::AtlasParams params;
  params.seed = common.seed;
  params.threads = opt.threads;
  const vg::adm::Algorithm algorithm = vg::adm::algorithm_from_string(opt.adm);
  const vg::adm::ClusterAtlas atlas = vg::adm::build_atlas(ds, algorithm, params);
  const auto atlas_path = out / (opt.adm + "_atlas.json");
  vg::adm::save_atlas(atlas, atlas_path.string());

  const vg::adm::CoverageStats cov = vg::adm::coverage(ds, atlas);
  std::size_t degenerate = 0, box_fallbacks = 0, polygons = 0;
  for (const auto& [key, entry] : atlas.entries) {
    if (entry.degenerate) ++degenerate;
    box_fallbacks += entry.box_fallbacks;
    polygons += entry.polygons.size();
  }
  json cj;
  cj["version"] = vg::kSchemaVersion;
  cj["algorithm"] = opt.adm;
  cj["records"] = cov.records;
  cj["consistent_records"] = cov.consistent_records;
  cj["fraction"] = cov.fraction;
  cj["per_label_fraction"] = cov.per_label_fraction;
  cj["entries"] = atlas.entries.size();
  cj["degenerate_entries"] = degenerate;
  cj["polygons"] = polygons;
  cj["box_fallbacks"] = box_fallbacks;
  cj["labels"] = ds.schema.label_names;
  cj["provenance"] = provenance(common.seed, {});
  write_json(out / (opt.adm + "_coverage.json"), cj);
  std::cerr << opt.adm << " atlas coverage " << cov.fraction << " over "
            << cov.records << " records\n";
  return 0;
}

struct GoalOptions {
  std::string model_path;
  std::string atlas_path;
  std::string patient = "median:0";
  std::string source;
  std::string target;
  std::string ladder = "default";
  std::size_t max_sensors = 4;
  double threshold = 0.20;
  std::size_t max_r = 0;
  std::size_t threads = 0;
};

struct LoadedGoal {
  vg::data::Dataset dataset;
  vg::dcm::Model model;
  vg::adm::ClusterAtlas atlas;
  std::size_t patient_index = 0;
  std::vector<double> patient;
  int source = 0;
};

LoadedGoal load_goal(const CommonOptions& common, const GoalOptions& opt) {
  LoadedGoal g{load_or_generate(common), vg::dcm::load_model(opt.model_path),
               vg::adm::load_atlas(opt.atlas_path), 0, {}, 0};
  g.patient_index = select_patient(opt.patient, g.dataset, g.model, g.atlas);
  g.patient = g.dataset.records[g.patient_index].measurements;
  g.source = vg::dcm::predict(g.model, g.patient);
  if (!opt.source.empty()) {
    const int requested = parse_label(opt.source, g.dataset.schema);
    if (requested != g.source)
      throw vg::Error("--source " + opt.source + " does not match the model's "
                      "prediction for this patient (label " +
                      std::to_string(g.source) + ")");
  }
  return g;
}

json goal_provenance(const CommonOptions& common, const GoalOptions& opt) {
  std::vector<std::pair<std::string, std::string>> inputs = {
      {"model", opt.model_path}, {"atlas", opt.atlas_path}};
  if (!common.data_path.empty()) inputs.push_back({"data", common.data_path});
  return provenance(common.seed, inputs);
}

int cmd_attack(const CommonOptions& common, const GoalOptions& opt,
               const BackendOptions& backend_opt) {
  const auto out = ensure_out_dir(common.out_dir);
  LoadedGoal g = load_goal(common, opt);
  const int target = parse_label(opt.target, g.dataset.schema);
  vg::cir::AttackerCapability cap{opt.max_sensors, opt.threshold};
  cap.validate(g.dataset.schema.n_sensors());

  auto backend = make_backend(backend_opt, common.seed);
  const vg::threat::AttackOutcome outcome = vg::threat::find_attack(
      g.patient, g.source, target, cap, g.model, g.atlas, *backend);

  json j;
  j["version"] = vg::kSchemaVersion;
  j["patient_index"] = g.patient_index;
  j["source_label"] = g.source;
  j["target_label"] = target;
  j["capability"] = capability_to_json(cap);
  j["feasibility"] = vg::threat::to_string(outcome.feasibility);
  if (outcome.vector)
    j["vector"] = vector_to_json(*outcome.vector, g.dataset.schema);
  if (outcome.feasibility == vg::threat::Feasibility::kUnknown) {
    j["unknown_reason"] = vg::solve::to_string(outcome.unknown_reason);
    j["detail"] = outcome.detail;
  }
  j["backend"] = backend->descriptor().name;
  j["wall_seconds"] = outcome.wall_seconds;
  j["provenance"] = goal_provenance(common, opt);
  write_json(out / "attack.json", j);
  std::cerr << "attack " << g.dataset.schema.label_names[g.source] << " -> "
            << g.dataset.schema.label_names[target] << ": "
            << vg::threat::to_string(outcome.feasibility) << "\n";
  return 0;
}

int cmd_matrix(const CommonOptions& common, const GoalOptions& opt,
               const BackendOptions& backend_opt) {
  const auto out = ensure_out_dir(common.out_dir);
  LoadedGoal g = load_goal(common, opt);
  const auto ladder = parse_ladder(opt.ladder, g.dataset.schema.n_sensors());

  auto backend = make_backend(backend_opt, common.seed);
  vg::threat::MatrixOptions mopt;
  mopt.threads = opt.threads;
  const vg::threat::AttackMatrix matrix = vg::threat::attack_matrix(
      g.patient, ladder, g.dataset.schema.label_names, g.model, g.atlas,
      *backend, mopt);

  json j;
  j["version"] = vg::kSchemaVersion;
  j["labels"] = matrix.labels;
  j["sensors"] = g.dataset.schema.sensor_names;
  j["patient_index"] = g.patient_index;
  j["patient_row"] = matrix.patient_row;
  j["patient"] = matrix.patient;
  j["ladder"] = [&] {
    json l = json::array();
    for (const auto& c : ladder) l.push_back(capability_to_json(c));
    return l;
  }();
  json cells = json::array();
  for (std::size_t src = 0; src < matrix.cells.size(); ++src) {
    json row = json::array();
    for (std::size_t tgt = 0; tgt < matrix.cells[src].size(); ++tgt) {
      const vg::threat::MatrixCell& cell = matrix.cells[src][tgt];
      json cj;
      cj["feasibility"] = vg::threat::to_string(cell.feasibility);
      if (cell.capability)
        cj["capability"] = capability_to_json(*cell.capability);
      if (cell.witness)
        cj["witness"] = vector_to_json(*cell.witness, g.dataset.schema);
      if (!cell.rungs.empty()) {
        json rungs = json::array();
        for (const auto& r : cell.rungs)
          rungs.push_back(rung_to_json(r, g.dataset.schema));
        cj["rungs"] = std::move(rungs);
      }
      cj["solver_calls"] = cell.solver_calls;
      cj["wall_seconds"] = cell.wall_seconds;
      row.push_back(std::move(cj));
    }
    cells.push_back(std::move(row));
  }
  j["cells"] = std::move(cells);
  j["backend"] = matrix.backend_name;
  j["wall_seconds"] = matrix.wall_seconds;
  j["provenance"] = goal_provenance(common, opt);
  write_json(out / "matrix.json", j);

  std::size_t feasible = 0, infeasible = 0, unknown = 0;
  for (const auto& cell : matrix.cells[matrix.patient_row]) {
    if (cell.feasibility == vg::threat::Feasibility::kFeasible) ++feasible;
    if (cell.feasibility == vg::threat::Feasibility::kInfeasible) ++infeasible;
    if (cell.feasibility == vg::threat::Feasibility::kUnknown) ++unknown;
  }
  std::cerr << "matrix row " << matrix.labels[matrix.patient_row] << ": "
            << feasible << " feasible, " << infeasible << " infeasible, "
            << unknown << " unknown (" << matrix.wall_seconds << " s)\n";
  return 0;
}

int cmd_resiliency(const CommonOptions& common, const GoalOptions& opt,
                   const BackendOptions& backend_opt) {
  const auto out = ensure_out_dir(common.out_dir);
  LoadedGoal g = load_goal(common, opt);
  const int target = parse_label(opt.target, g.dataset.schema);
  const std::size_t max_r =
      opt.max_r == 0 ? g.dataset.schema.n_sensors() : opt.max_r;

  auto backend = make_backend(backend_opt, common.seed);
  const vg::threat::ResiliencyReport report = vg::threat::resiliency(
      g.patient, g.source, target, max_r, opt.threshold, g.model, g.atlas,
      *backend);

  json j;
  j["version"] = vg::kSchemaVersion;
  j["patient_index"] = g.patient_index;
  j["source_label"] = report.source_label;
  j["target_label"] = report.target_label;
  j["threshold"] = report.threshold;
  j["max_r"] = report.max_r;
  j["r"] = report.r;
  j["certified"] = report.certified;
  if (report.first_feasible)
    j["first_feasible"] = capability_to_json(*report.first_feasible);
  if (report.witness)
    j["witness"] = vector_to_json(*report.witness, g.dataset.schema);
  json certs = json::array();
  for (const auto& c : report.certificates)
    certs.push_back(json{{"max_sensors", c.max_sensors},
                         {"verdict", vg::solve::to_string(c.verdict)},
                         {"wall_seconds", c.wall_seconds}});
  j["certificates"] = std::move(certs);
  j["backend"] = report.backend_name;
  j["wall_seconds"] = report.wall_seconds;
  j["provenance"] = goal_provenance(common, opt);
  write_json(out / "resiliency.json", j);
  std::cerr << "goal " << g.dataset.schema.label_names[report.source_label]
            << " -> " << g.dataset.schema.label_names[report.target_label]
            << " is " << report.r << "-resilient (certified: "
            << (report.certified ? "yes" : "no") << ")\n";
  return 0;
}

struct ReportOptions {
  std::string matrix_path;
};

int cmd_report(const CommonOptions& common, const ReportOptions& opt) {
  const auto out = ensure_out_dir(common.out_dir);
  json m;
  try {
    m = json::parse(vg::read_file(opt.matrix_path));
  } catch (const json::exception& e) {
    throw vg::Error("matrix file '" + opt.matrix_path + "': " + e.what());
  }

  const auto labels = m.at("labels").get<std::vector<std::string>>();
  const auto sensors = m.at("sensors").get<std::vector<std::string>>();
  const int row = m.at("patient_row").get<int>();

  // Distinct (max_sensors, threshold) grid of the ladder, ascending.
  std::vector<std::size_t> ms_axis;
  std::vector<double> th_axis;
  for (const auto& c : m.at("ladder")) {
    const auto ms = c.at("max_sensors").get<std::size_t>();
    const auto th = c.at("threshold").get<double>();
    if (std::find(ms_axis.begin(), ms_axis.end(), ms) == ms_axis.end())
      ms_axis.push_back(ms);
    if (std::find(th_axis.begin(), th_axis.end(), th) == th_axis.end())
      th_axis.push_back(th);
  }
  std::sort(ms_axis.begin(), ms_axis.end());
  std::sort(th_axis.begin(), th_axis.end());

  // counts[i][k] = feasible (target, rung) combinations at that capability:
  // a cell counts once its minimal feasible capability is covered.
  std::vector<std::vector<std::size_t>> counts(
      ms_axis.size(), std::vector<std::size_t>(th_axis.size(), 0));
  std::vector<std::size_t> frequency(sensors.size(), 0);
  json timings = json::array();
  std::size_t conclusive = 0, unknown_cells = 0;

  const json& cells = m.at("cells").at(row);
  for (std::size_t tgt = 0; tgt < cells.size(); ++tgt) {
    const json& cell = cells.at(tgt);
    const std::string feas = cell.at("feasibility").get<std::string>();
    if (feas == "not-applicable") continue;
    timings.push_back(json{{"target", labels.at(tgt)},
                           {"stage", "escalate"},
                           {"solver_calls", cell.at("solver_calls")},
                           {"wall_seconds", cell.at("wall_seconds")}});
    if (feas == "unknown") {
      ++unknown_cells;
      continue;
    }
    ++conclusive;
    if (feas != "feasible") continue;
    const auto cap_ms = cell.at("capability").at("max_sensors").get<std::size_t>();
    const auto cap_th = cell.at("capability").at("threshold").get<double>();
    for (std::size_t i = 0; i < ms_axis.size(); ++i)
      for (std::size_t k = 0; k < th_axis.size(); ++k)
        if (ms_axis[i] >= cap_ms && th_axis[k] >= cap_th) ++counts[i][k];
    if (cell.contains("witness")) {
      const auto deltas = cell.at("witness").at("deltas").get<std::vector<double>>();
      for (std::size_t s = 0; s < std::min(deltas.size(), frequency.size()); ++s)
        if (deltas[s] != 0.0) ++frequency[s];
    }
  }

  // Plot-ready CSVs.
  {
    std::ostringstream csv;
    csv << "max_sensors";
    for (const double th : th_axis) csv << ",threshold_" << th;
    csv << "\n";
    for (std::size_t i = 0; i < ms_axis.size(); ++i) {
      csv << ms_axis[i];
      for (std::size_t k = 0; k < th_axis.size(); ++k) csv << ',' << counts[i][k];
      csv << "\n";
    }
    vg::write_file((out / "attack_counts.csv").string(), csv.str());
    std::cerr << "wrote " << (out / "attack_counts.csv").string() << "\n";
  }
  {
    std::ostringstream csv;
    csv << "sensor,count\n";
    for (std::size_t s = 0; s < sensors.size(); ++s)
      csv << sensors[s] << ',' << frequency[s] << "\n";
    vg::write_file((out / "sensor_frequency.csv").string(), csv.str());
    std::cerr << "wrote " << (out / "sensor_frequency.csv").string() << "\n";
  }
  {
    std::ostringstream csv;
    csv << "target,stage,solver_calls,wall_seconds\n";
    for (const auto& t : timings)
      csv << t.at("target").get<std::string>() << ','
          << t.at("stage").get<std::string>() << ','
          << t.at("solver_calls").get<std::size_t>() << ','
          << t.at("wall_seconds").get<double>() << "\n";
    vg::write_file((out / "timings.csv").string(), csv.str());
    std::cerr << "wrote " << (out / "timings.csv").string() << "\n";
  }

  json j;
  j["version"] = vg::kSchemaVersion;
  j["labels"] = labels;
  j["sensors"] = sensors;
  j["patient_row"] = row;
  j["max_sensors_axis"] = ms_axis;
  j["threshold_axis"] = th_axis;
  j["attack_counts"] = counts;
  // Counting convention: one unit per (target label, ladder rung) pair whose
  // minimal feasible capability the rung covers; unknown cells contribute 0.
  j["count_convention"] =
      "feasible (target, rung) combinations; a target counts at every rung "
      "covering its minimal feasible capability";
  json freq = json::object();
  for (std::size_t s = 0; s < sensors.size(); ++s)
    freq[sensors.at(s)] = frequency[s];
  j["sensor_frequency"] = std::move(freq);
  j["conclusive_cells"] = conclusive;
  j["unknown_cells"] = unknown_cells;
  j["timings"] = std::move(timings);
  j["provenance"] = provenance(common.seed, {{"matrix", opt.matrix_path}});
  write_json(out / "report.json", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"threat analysis for sensor-driven health classifiers"};
  app.set_version_flag("--version", vg::kVersionString);
  app.require_subcommand(1);

  CommonOptions common;
  BackendOptions backend;
  TrainOptions train;
  AtlasOptions atlas;
  GoalOptions goal;
  ReportOptions report;

  CLI::App* c_generate =
      app.add_subcommand("generate", "write the synthetic cohort CSV");
  add_common(c_generate, common, false);
  c_generate->add_option("--rows", common.rows, "records to generate")
      ->capture_default_str();

  CLI::App* c_train =
      app.add_subcommand("train", "train a classifier, write model + metrics");
  add_common(c_train, common);
  c_train->add_option("--dcm", train.dcm, "classifier kind: dt, lr, nn")
      ->check(CLI::IsMember({"dt", "lr", "nn"}))
      ->capture_default_str();
  c_train->add_option("--test-fraction", train.test_fraction)
      ->capture_default_str();
  c_train->add_option("--dt-max-depth", train.dt_max_depth)
      ->capture_default_str();
  c_train->add_option("--dt-min-leaf", train.dt_min_leaf)
      ->capture_default_str();
  c_train->add_option("--lr-iterations", train.lr_iterations)
      ->capture_default_str();
  c_train->add_option("--nn-epochs", train.nn_epochs)->capture_default_str();
  c_train->add_option("--nn-hidden", train.nn_hidden,
                      "comma-separated hidden layer widths")
      ->capture_default_str();

  CLI::App* c_atlas = app.add_subcommand(
      "atlas", "build the anomaly-detection cluster atlas + coverage report");
  add_common(c_atlas, common);
  c_atlas->add_option("--adm", atlas.adm, "clustering: dbscan or kmeans")
      ->check(CLI::IsMember({"dbscan", "kmeans"}))
      ->capture_default_str();
  c_atlas->add_option("--threads", atlas.threads, "worker threads (0 = auto)")
      ->capture_default_str();

  const auto add_goal = [&](CLI::App* cmd, bool with_target) {
    add_common(cmd, common);
    add_backend(cmd, backend);
    cmd->add_option("--model", goal.model_path, "trained model JSON")
        ->required();
    cmd->add_option("--atlas", goal.atlas_path, "cluster atlas JSON")
        ->required();
    cmd->add_option("--patient", goal.patient,
                    "record index or median:<label>")
        ->capture_default_str();
    cmd->add_option("--source", goal.source,
                    "expected source label (sanity check)");
    if (with_target)
      cmd->add_option("--target", goal.target, "attack goal label")->required();
  };

  CLI::App* c_attack =
      app.add_subcommand("attack", "single feasibility query at one capability");
  add_goal(c_attack, true);
  c_attack->add_option("--max-sensors", goal.max_sensors)
      ->capture_default_str();
  c_attack->add_option("--threshold", goal.threshold)->capture_default_str();

  CLI::App* c_matrix = app.add_subcommand(
      "matrix", "escalation ladder for every attack goal of one patient");
  add_goal(c_matrix, false);
  c_matrix->add_option("--ladder", goal.ladder,
                       "\"default\" or rungs \"ms:threshold,...\"")
      ->capture_default_str();
  c_matrix->add_option("--threads", goal.threads, "worker threads (0 = auto)")
      ->capture_default_str();

  CLI::App* c_resiliency = app.add_subcommand(
      "resiliency", "certify r-resiliency for one (source, target) goal");
  add_goal(c_resiliency, true);
  c_resiliency->add_option("--threshold", goal.threshold)
      ->capture_default_str();
  c_resiliency->add_option("--max-r", goal.max_r,
                           "certify up to this many sensors (0 = all)")
      ->capture_default_str();

  CLI::App* c_report = app.add_subcommand(
      "report", "plot-ready CSVs + summary JSON from a matrix run");
  add_common(c_report, common, false);
  c_report->add_option("--matrix", report.matrix_path, "matrix JSON input")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (c_generate->parsed()) return cmd_generate(common);
    if (c_train->parsed()) return cmd_train(common, train);
    if (c_atlas->parsed()) return cmd_atlas(common, atlas);
    if (c_attack->parsed()) return cmd_attack(common, goal, backend);
    if (c_matrix->parsed()) return cmd_matrix(common, goal, backend);
    if (c_resiliency->parsed()) return cmd_resiliency(common, goal, backend);
    if (c_report->parsed()) return cmd_report(common, report);
  } catch (const vg::solve::BackendUnavailable& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const vg::solve::MalformedModel& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const vg::threat::IncompleteBackend& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const vg::proc::SpawnError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const vg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
