#include "vitalguard/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vitalguard/version.hpp"

namespace vitalguard::data {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_double(const std::string& cell, std::size_t row, std::size_t col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || cell.empty()) {
    throw CsvParseError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                            ": expected a number, got '" + cell + "'",
                        row, col);
  }
  return value;
}

int parse_label(const std::string& cell, std::size_t row, std::size_t col) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || value < 0) {
    throw CsvParseError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                            ": expected a non-negative integer label, got '" + cell + "'",
                        row, col);
  }
  return value;
}

/// 6 significant decimals, deterministic across platforms for finite values.
std::string format_measurement(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void SensorSchema::validate() const {
  if (sensor_names.empty()) throw Error("schema needs at least one sensor");
  if (label_names.size() < 2) throw Error("schema needs at least two labels");
  std::set<std::string> seen;
  for (const auto& n : sensor_names) {
    if (n.empty()) throw Error("empty sensor name");
    if (!seen.insert(n).second) throw Error("duplicate sensor name: " + n);
  }
  seen.clear();
  for (const auto& n : label_names) {
    if (n.empty()) throw Error("empty label name");
    if (!seen.insert(n).second) throw Error("duplicate label name: " + n);
  }
}

void Dataset::validate() const {
  schema.validate();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.measurements.size() != schema.n_sensors())
      throw Error("record " + std::to_string(i) + " has " +
                  std::to_string(r.measurements.size()) + " measurements, expected " +
                  std::to_string(schema.n_sensors()));
    if (r.label < 0 || static_cast<std::size_t>(r.label) >= schema.n_labels())
      throw Error("record " + std::to_string(i) + " has out-of-range label " +
                  std::to_string(r.label));
  }
}

std::vector<std::size_t> Dataset::indices_of_label(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].label == label) out.push_back(i);
  return out;
}

void SyntheticConfig::validate() const {
  schema.validate();
  if (distributions.size() != schema.n_labels())
    throw InvalidRange("distributions must have one row per label");
  if (counts.size() != schema.n_labels())
    throw InvalidRange("counts must have one entry per label");
  for (std::size_t j = 0; j < distributions.size(); ++j) {
    if (distributions[j].size() != schema.n_sensors())
      throw InvalidRange("label " + std::to_string(j) +
                         " must have one distribution per sensor");
    for (const auto& g : distributions[j]) {
      if (!(g.lo <= g.hi)) throw InvalidRange("truncation range has lo > hi");
      if (!(g.stddev >= 0.0)) throw InvalidRange("stddev must be >= 0");
    }
  }
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV: " + path);

  std::string line;
  if (!std::getline(in, line) || trim(line).empty())
    throw MissingHeader("CSV has no header row: " + path);

  const std::vector<std::string> header = split_row(line);
  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty())
      throw CsvParseError("empty header cell", 1, c + 1);
    if (header[c] == label_column) label_col = c;
  }
  if (label_col == header.size())
    throw UnknownLabelColumn("label column '" + label_column + "' not found in " + path);

  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_col) ds.schema.sensor_names.push_back(header[c]);

  int max_label = -1;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size())
      throw CsvParseError("row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()),
                          row, cells.size());
    PatientRecord rec;
    rec.measurements.reserve(header.size() - 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col)
        rec.label = parse_label(cells[c], row, c + 1);
      else
        rec.measurements.push_back(parse_double(cells[c], row, c + 1));
    }
    max_label = std::max(max_label, rec.label);
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw EmptyDataset("CSV has a header but no records: " + path);

  for (int j = 0; j <= std::max(max_label, 1); ++j)
    ds.schema.label_names.push_back("label_" + std::to_string(j));
  ds.validate();
  return ds;
}

void save_csv(const Dataset& dataset, const std::string& path,
              const std::string& label_column) {
  dataset.validate();
  std::ostringstream out;
  for (const auto& name : dataset.schema.sensor_names) out << name << ',';
  out << label_column << '\n';
  for (const auto& rec : dataset.records) {
    for (double v : rec.measurements) out << format_measurement(v) << ',';
    out << rec.label << '\n';
  }
  write_file(path, out.str());
}

void save_schema_sidecar(const SensorSchema& schema, const std::string& path) {
  schema.validate();
  nlohmann::json j;
  j["version"] = kSchemaVersion;
  j["sensor_names"] = schema.sensor_names;
  j["label_names"] = schema.label_names;
  write_file(path, j.dump(2) + "\n");
}

SensorSchema load_schema_sidecar(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema sidecar " + path + " is not valid JSON: " + e.what());
  }
  SensorSchema s;
  try {
    s.sensor_names = j.at("sensor_names").get<std::vector<std::string>>();
    s.label_names = j.at("label_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema sidecar " + path + " is malformed: " + e.what());
  }
  s.validate();
  return s;
}

Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  Dataset ds;
  ds.schema = config.schema;
  const Rng root(seed);
  for (std::size_t j = 0; j < config.schema.n_labels(); ++j) {
    Rng rng = root.child(j);
    for (std::size_t i = 0; i < config.counts[j]; ++i) {
      PatientRecord rec;
      rec.label = static_cast<int>(j);
      rec.measurements.reserve(config.schema.n_sensors());
      for (std::size_t s = 0; s < config.schema.n_sensors(); ++s) {
        const TruncatedGaussian& g = config.distributions[j][s];
        rec.measurements.push_back(rng.truncated_gaussian(g.mean, g.stddev, g.lo, g.hi));
      }
      ds.records.push_back(std::move(rec));
    }
  }
  if (ds.records.empty()) throw EmptyDataset("synthetic config generates zero records");
  return ds;
}

SyntheticConfig default_synthetic_config(std::size_t total_samples) {
  SyntheticConfig cfg;
  cfg.schema.sensor_names = {"heart_rate",       "systolic_bp",      "diastolic_bp",
                             "glucose",          "oxygen_saturation", "respiration_rate",
                             "blood_alcohol",    "body_temperature"};
  cfg.schema.label_names = {"normal",           "high_blood_pressure", "high_cholesterol",
                            "high_blood_sugar", "abnormal_oxygen",     "excessive_sweating"};

  const std::vector<TruncatedGaussian> baseline = {
      {80.0, 5.0, 62.0, 98.0},     // heart_rate (bpm)
      {115.0, 6.0, 100.0, 130.0},  // systolic_bp (mmHg)
      {76.0, 4.0, 66.0, 86.0},     // diastolic_bp (mmHg)
      {100.0, 8.0, 82.0, 118.0},   // glucose (mg/dL)
      {97.0, 1.0, 94.5, 99.5},     // oxygen_saturation (%)
      {16.0, 1.5, 12.5, 19.5},     // respiration_rate (breaths/min)
      {0.020, 0.004, 0.010, 0.030},  // blood_alcohol (%)
      {37.0, 0.3, 36.3, 37.7},     // body_temperature (C)
  };

  cfg.distributions.assign(cfg.schema.n_labels(), baseline);

  // Each condition shifts its signature sensors; everything else stays at the
  // baseline so that cross-sensor consistency pins attacks to the signature.
  auto& hbp = cfg.distributions[1];
  hbp[1] = {138.0, 5.0, 126.0, 150.0};
  hbp[2] = {90.0, 4.0, 81.0, 99.0};

  auto& chol = cfg.distributions[2];
  chol[0] = {94.0, 4.0, 85.0, 103.0};
  chol[3] = {126.0, 6.0, 113.0, 139.0};
  chol[6] = {0.0265, 0.0025, 0.0215, 0.0315};

  auto& sugar = cfg.distributions[3];
  sugar[3] = {136.0, 6.0, 122.0, 150.0};

  auto& oxy = cfg.distributions[4];
  oxy[4] = {89.0, 1.5, 85.5, 92.5};
  oxy[5] = {22.0, 1.5, 18.5, 25.5};

  auto& sweat = cfg.distributions[5];
  sweat[7] = {38.6, 0.3, 37.9, 39.3};
  sweat[0] = {92.0, 4.0, 83.0, 101.0};
  sweat[5] = {20.5, 1.5, 17.0, 24.0};

  const std::size_t labels = cfg.schema.n_labels();
  const std::size_t base = total_samples / labels;
  const std::size_t extra = total_samples % labels;
  cfg.counts.assign(labels, base);
  for (std::size_t j = 0; j < extra; ++j) ++cfg.counts[j];
  return cfg;
}

SplitResult stratified_split(const Dataset& dataset, double test_fraction,
                             std::uint64_t seed) {
  dataset.validate();
  if (dataset.records.empty()) throw EmptyDataset("cannot split an empty dataset");
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
    throw InvalidRange("test_fraction must lie in [0, 1]");

  const Rng root(seed);
  std::vector<char> in_test(dataset.records.size(), 0);
  for (std::size_t j = 0; j < dataset.schema.n_labels(); ++j) {
    std::vector<std::size_t> idx = dataset.indices_of_label(static_cast<int>(j));
    if (idx.empty()) continue;
    Rng rng = root.child(j);
    deterministic_shuffle(idx, rng);
    const auto want = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < want && i < idx.size(); ++i) in_test[idx[i]] = 1;
  }

  SplitResult out;
  out.train.schema = dataset.schema;
  out.test.schema = dataset.schema;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    (in_test[i] ? out.test : out.train).records.push_back(dataset.records[i]);
  }
  return out;
}

}  // namespace vitalguard::data
