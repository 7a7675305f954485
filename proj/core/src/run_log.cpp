#include "dirclip/run_log.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "dirclip/csv.hpp"
#include "dirclip/error.hpp"
#include "json.hpp"

namespace dirclip {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string chain_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "chain_%03zu", index);
  return buf;
}

json network_json(const NetworkConfig& n) {
  return {{"input_dim", n.input_dim},
          {"hidden_layers", n.hidden_layers},
          {"num_classes", n.num_classes},
          {"activation", "relu"}};
}

NetworkConfig network_from(const json& j) {
  NetworkConfig n;
  n.input_dim = j.at("input_dim").get<std::size_t>();
  n.hidden_layers = j.at("hidden_layers").get<std::vector<std::size_t>>();
  n.num_classes = j.at("num_classes").get<std::size_t>();
  n.validate();
  return n;
}

std::uint64_t to_le(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) {
    return x;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((x >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  }
}

}  // namespace

void write_float64_le(const fs::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (double v : values) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
}

std::vector<double> read_float64_le(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<double> values;
  char bytes[8];
  while (in.read(bytes, 8)) {
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    values.push_back(std::bit_cast<double>(to_le(bits)));
  }
  if (in.gcount() != 0) throw Error(path.string() + ": trailing bytes, not a float64 array");
  return values;
}

void write_run_log(const RunLog& log, const fs::path& dir, const std::string& config_json) {
  fs::create_directories(dir);
  const std::size_t n_params = log.network.param_count();

  json chains = json::array();
  for (const ChainResult& c : log.chains) {
    const std::string stem = chain_stem(c.index);
    std::vector<double> flat;
    flat.reserve(c.samples.size() * n_params);
    for (const ParamVector& s : c.samples) flat.insert(flat.end(), s.vector().begin(), s.vector().end());
    write_float64_le(dir / (stem + ".bin"), flat);
    json header = {{"dtype", "float64"},
                   {"byte_order", "little"},
                   {"shape", {c.samples.size(), n_params}},
                   {"data", stem + ".bin"}};
    std::ofstream(dir / (stem + ".json"), std::ios::binary) << header.dump(2) << '\n';
    chains.push_back({{"index", c.index},
                      {"seed", c.seed},
                      {"samples", c.samples.size()},
                      {"proposals", c.proposals},
                      {"accepted", c.accepted},
                      {"nonfinite_events", c.nonfinite_events},
                      {"snapshot", stem + ".json"},
                      {"failure", c.failure ? json(*c.failure) : json(nullptr)}});
  }

  json manifest = {{"format", "dirclip-runlog"},
                   {"format_version", 1},
                   {"library_version", kVersion},
                   {"sampler", log.kind == SamplerKind::HMC ? "hmc" : "sghmc"},
                   {"base_seed", log.base_seed},
                   {"network", network_json(log.network)},
                   {"param_count", n_params},
                   {"warnings", log.warnings},
                   {"chains", chains}};
  manifest["config"] = config_json.empty() ? json(nullptr) : json::parse(config_json);
  std::ofstream(dir / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';

  CsvWriter metrics(dir / "metrics.csv", {"chain", "seed", "samples", "proposals", "accepted",
                                          "acceptance_rate", "nonfinite_events", "failed"});
  for (const ChainResult& c : log.chains) {
    metrics.row_cells({std::to_string(c.index), std::to_string(c.seed),
                       std::to_string(c.samples.size()), std::to_string(c.proposals),
                       std::to_string(c.accepted), format_double(c.acceptance_rate()),
                       std::to_string(c.nonfinite_events), c.failure ? "1" : "0"});
  }
}

RunLog read_run_log(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigError("no manifest.json in " + dir.string());
  const json manifest = json::parse(in);
  if (manifest.value("format", "") != "dirclip-runlog") {
    throw Error(dir.string() + ": manifest is not a dirclip run log");
  }
  RunLog log;
  log.network = network_from(manifest.at("network"));
  log.base_seed = manifest.at("base_seed").get<std::uint64_t>();
  log.kind = manifest.at("sampler").get<std::string>() == "hmc" ? SamplerKind::HMC : SamplerKind::SGHMC;
  log.warnings = manifest.at("warnings").get<std::vector<std::string>>();
  const std::size_t n_params = log.network.param_count();
  for (const json& c : manifest.at("chains")) {
    ChainResult r;
    r.index = c.at("index").get<std::size_t>();
    r.seed = c.at("seed").get<std::uint64_t>();
    r.proposals = c.at("proposals").get<std::size_t>();
    r.accepted = c.at("accepted").get<std::size_t>();
    r.nonfinite_events = c.at("nonfinite_events").get<std::size_t>();
    if (!c.at("failure").is_null()) r.failure = c.at("failure").get<std::string>();

    std::ifstream hin(dir / c.at("snapshot").get<std::string>());
    const json header = json::parse(hin);
    const auto shape = header.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[1] != n_params) {
      throw DimensionError("snapshot parameter count", n_params, shape.size() == 2 ? shape[1] : 0);
    }
    const auto flat = read_float64_le(dir / header.at("data").get<std::string>());
    if (flat.size() != shape[0] * shape[1]) throw DimensionError("snapshot data", shape[0] * shape[1], flat.size());
    for (std::size_t s = 0; s < shape[0]; ++s) {
      auto first = flat.begin() + static_cast<std::ptrdiff_t>(s * n_params);
      r.samples.emplace_back(log.network, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n_params)));
    }
    log.chains.push_back(std::move(r));
  }
  return log;
}

}  // namespace dirclip
