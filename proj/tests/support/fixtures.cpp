#include "fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <stdexcept>

#include "vitalguard/common.hpp"

namespace vitalguard::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  path_ = base / ("vitalguard_test_" + tag + "_" +
                  std::to_string(::getpid()) + "_" +
                  std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);  // best effort
}

data::Dataset two_blob_dataset(std::size_t per_label, std::uint64_t seed) {
  data::SyntheticConfig config;
  config.schema.sensor_names = {"s0", "s1"};
  config.schema.label_names = {"low", "high"};
  config.distributions = {
      {{10.0, 1.0, 5.0, 15.0}, {20.0, 1.5, 14.0, 26.0}},
      {{30.0, 1.0, 25.0, 35.0}, {40.0, 1.5, 34.0, 46.0}},
  };
  config.counts = {per_label, per_label};
  return data::generate_synthetic(config, seed);
}

data::Dataset small_cohort(std::size_t rows, std::uint64_t seed) {
  return data::generate_synthetic(data::default_synthetic_config(rows), seed);
}

GoalFixture make_goal_fixture(std::size_t rows, std::uint64_t seed) {
  GoalFixture fx;
  const data::Dataset cohort = small_cohort(rows, seed);
  data::SplitResult split = data::stratified_split(cohort, 0.2, seed);
  fx.train = std::move(split.train);
  fx.test = std::move(split.test);
  fx.model = dcm::train_dt(fx.train);

  adm::AtlasParams params;
  params.seed = seed;
  params.threads = 1;
  fx.atlas = adm::build_atlas(fx.train, adm::Algorithm::kDbscan, params);

  // Any correctly-classified, atlas-consistent record will do as a patient;
  // scan in record order for determinism.
  for (const data::PatientRecord& rec : fx.train.records) {
    if (dcm::predict(fx.model, rec.measurements) != rec.label) continue;
    if (!adm::consistent(rec.measurements, rec.label, fx.atlas)) continue;
    fx.patient = rec.measurements;
    fx.patient_label = rec.label;
    return fx;
  }
  throw std::runtime_error("goal fixture: no usable patient in the cohort");
}

}  // namespace vitalguard::testing
