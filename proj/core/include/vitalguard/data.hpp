#pragma once

/// Patient measurement datasets: CSV input/output, synthetic cohort
/// generation, and deterministic stratified splitting.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vitalguard/common.hpp"

namespace vitalguard::data {

// -------------------------------------------------------------------------
// Errors
// -------------------------------------------------------------------------

/// CSV file has no header row (or the header is empty).
class MissingHeader : public Error {
 public:
  using Error::Error;
};

/// A cell failed to parse; row/column are 1-based positions in the file.
class CsvParseError : public Error {
 public:
  CsvParseError(const std::string& what, std::size_t row, std::size_t col)
      : Error(what), row(row), col(col) {}
  std::size_t row;
  std::size_t col;
};

/// The configured label column is absent from the header.
class UnknownLabelColumn : public Error {
 public:
  using Error::Error;
};

/// A generator range is invalid (lo > hi, stddev < 0, count < 0, ...).
class InvalidRange : public Error {
 public:
  using Error::Error;
};

/// Operation requires at least one record.
class EmptyDataset : public Error {
 public:
  using Error::Error;
};

// -------------------------------------------------------------------------
// Types
// -------------------------------------------------------------------------

/// Names of the measured sensors and of the diagnosis labels.
///
/// Invariants (checked by validate()):
///  - at least one sensor and at least two labels,
///  - names are unique and non-empty.
struct SensorSchema {
  std::vector<std::string> sensor_names;
  std::vector<std::string> label_names;

  std::size_t n_sensors() const { return sensor_names.size(); }
  std::size_t n_labels() const { return label_names.size(); }

  /// Throws Error if the invariants above do not hold.
  void validate() const;

  bool operator==(const SensorSchema&) const = default;
};

/// One patient: a measurement per sensor plus a diagnosis label id.
struct PatientRecord {
  std::vector<double> measurements;
  int label = 0;

  bool operator==(const PatientRecord&) const = default;
};

/// A schema plus records. Every record has exactly schema.n_sensors()
/// measurements and a label in [0, schema.n_labels()).
struct Dataset {
  SensorSchema schema;
  std::vector<PatientRecord> records;

  std::size_t size() const { return records.size(); }

  /// Throws Error if any record violates the shape/label invariants.
  void validate() const;

  /// Indices of all records carrying `label`.
  std::vector<std::size_t> indices_of_label(int label) const;
};

/// Truncated Gaussian: Normal(mean, stddev) restricted to [lo, hi].
struct TruncatedGaussian {
  double mean = 0.0;
  double stddev = 1.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Synthetic cohort description: for every label, a per-sensor distribution
/// and a sample count.
struct SyntheticConfig {
  SensorSchema schema;
  /// distributions[label][sensor]
  std::vector<std::vector<TruncatedGaussian>> distributions;
  /// samples per label
  std::vector<std::size_t> counts;

  void validate() const;
};

struct SplitResult {
  Dataset train;
  Dataset test;
};

// -------------------------------------------------------------------------
// Operations
// -------------------------------------------------------------------------

/// Reads a CSV with a mandatory header row. Every column except
/// `label_column` becomes a sensor (in file order); the label column holds
/// non-negative integer label ids. Label names default to "label_<id>" for
/// ids up to the maximum seen; load_schema_sidecar() can replace them.
Dataset load_csv(const std::string& path, const std::string& label_column = "label");

/// Writes records with 6 significant decimals per measurement. Output bytes
/// are a pure function of the dataset. Label ids are written as integers.
void save_csv(const Dataset& dataset, const std::string& path,
              const std::string& label_column = "label");

/// Schema sidecar (JSON: {"version", "sensor_names", "label_names"}).
void save_schema_sidecar(const SensorSchema& schema, const std::string& path);
SensorSchema load_schema_sidecar(const std::string& path);

/// Samples config.counts[j] records per label j, each sensor independently
/// from its truncated Gaussian. Records are grouped by label (label 0 block
/// first). Identical (config, seed) pairs produce identical datasets.
Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

/// The 8-sensor / 6-label cohort used across the test-suite and the
/// examples: label 0 is an unremarkable baseline and labels 1..5 shift a
/// small signature subset of sensors away from it.
SyntheticConfig default_synthetic_config(std::size_t total_samples = 17000);

/// Per-label random split. For every label, round(fraction * count) records
/// go to test; both halves preserve the input record order. Union is the
/// input, intersection is empty.
SplitResult stratified_split(const Dataset& dataset, double test_fraction,
                             std::uint64_t seed);

}  // namespace vitalguard::data
