#pragma once

#include <filesystem>
#include <string>

#include "dirclip/samplers.hpp"

namespace dirclip {

inline constexpr const char* kVersion = "0.1.0";

/// Writes `dir/manifest.json`, one `chain_NNN.bin` (raw little-endian
/// float64, row-major samples x params) plus `chain_NNN.json` shape header
/// per chain, and `dir/metrics.csv`. `config_json` is echoed verbatim into
/// the manifest under "config" and must be a JSON document (or empty).
void write_run_log(const RunLog& log, const std::filesystem::path& dir,
                   const std::string& config_json = {});

RunLog read_run_log(const std::filesystem::path& dir);

void write_float64_le(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_float64_le(const std::filesystem::path& path);

}  // namespace dirclip
