#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dirclip/dataset.hpp"
#include "dirclip/nn.hpp"
#include "dirclip/priors.hpp"
#include "dirclip/samplers.hpp"

namespace dirclip::cli {

struct DatasetSource {
  /// Read from CSV when set, otherwise generated from `generator`.
  std::optional<std::filesystem::path> path;
  ToyDatasetSpec generator;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  NetworkConfig network;
  PosteriorSpec posterior;
  ChainConfig sampler;
  DatasetSource dataset;
  std::uint64_t seed = 0;
  std::size_t chains = 2;
  std::size_t threads = 1;
  std::filesystem::path output = "run";

  void validate() const;
};

/// Strict: unknown keys, wrong types and out-of-range values throw
/// ConfigError naming the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON; parse_config(to_json(c)) reproduces c.
std::string to_json(const ExperimentConfig& config);

}  // namespace dirclip::cli
