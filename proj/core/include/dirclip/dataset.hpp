#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dirclip/nn.hpp"

namespace dirclip {

/// Two Gaussian clusters in 2D plus deliberately mislabeled points placed on
/// the edge of the opposite cluster.
struct ToyDatasetSpec {
  std::size_t points_per_class = 20;
  std::array<double, 2> center0{-1.0, 0.0};
  std::array<double, 2> center1{1.0, 0.0};
  double spread = 0.35;
  std::size_t n_mislabeled = 2;
  /// Distance of a mislabeled point from the cluster centre, in units of spread.
  double mislabeled_offset = 2.0;

  void validate() const;
  std::size_t size() const { return 2 * points_per_class + n_mislabeled; }

  friend bool operator==(const ToyDatasetSpec&, const ToyDatasetSpec&) = default;
};

struct ToyDataset {
  ToyDatasetSpec spec;
  std::uint64_t seed = 0;
  Matrix points;  // N x 2
  std::vector<std::size_t> labels;
  std::vector<bool> mislabeled;

  std::size_t size() const { return labels.size(); }
};

ToyDataset generate_dataset(const ToyDatasetSpec& spec, std::uint64_t seed);

/// Columns x, y, label, mislabeled.
void write_dataset_csv(const ToyDataset& dataset, const std::filesystem::path& path);

/// Reads points and labels written by write_dataset_csv (spec and seed are
/// not stored in the CSV and are left at their defaults).
ToyDataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace dirclip
