#pragma once

/// Shared test fixtures: deterministic small datasets, trained-model bundles
/// and a scoped temporary directory.

#include <filesystem>
#include <string>
#include <vector>

#include "vitalguard/atlas.hpp"
#include "vitalguard/data.hpp"
#include "vitalguard/dcm.hpp"

namespace vitalguard::testing {

/// Unique directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "scratch");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

/// Two sensors, two labels, well-separated Gaussian blobs; linearly
/// separable, so every classifier kind reaches high accuracy quickly.
data::Dataset two_blob_dataset(std::size_t per_label, std::uint64_t seed);

/// A small draw from the standard 8-sensor / 6-label synthetic cohort.
data::Dataset small_cohort(std::size_t rows, std::uint64_t seed);

/// Everything solver-facing tests need: a small cohort, a decision tree
/// trained on its training half, a density-clustering atlas, and a patient
/// the tree classifies correctly and the atlas accepts.
struct GoalFixture {
  data::Dataset train;
  data::Dataset test;
  dcm::Model model;  // decision tree
  adm::ClusterAtlas atlas;
  std::vector<double> patient;
  int patient_label = 0;
};
GoalFixture make_goal_fixture(std::size_t rows, std::uint64_t seed);

}  // namespace vitalguard::testing
