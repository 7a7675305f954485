#include "dirclip/dataset.hpp"

#include <cmath>
#include <numbers>

#include "dirclip/csv.hpp"
#include "dirclip/error.hpp"

namespace dirclip {

namespace {

constexpr std::uint64_t kDatasetStream = 13;

}  // namespace

void ToyDatasetSpec::validate() const {
  if (points_per_class < 1) throw ConfigError("dataset.points_per_class must be >= 1");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw ConfigError("dataset.spread must be positive");
  if (!(mislabeled_offset >= 0.0) || !std::isfinite(mislabeled_offset)) {
    throw ConfigError("dataset.mislabeled_offset must be non-negative");
  }
  for (double c : {center0[0], center0[1], center1[0], center1[1]}) {
    if (!std::isfinite(c)) throw ConfigError("dataset centers must be finite");
  }
}

ToyDataset generate_dataset(const ToyDatasetSpec& spec, std::uint64_t seed) {
  spec.validate();
  ToyDataset ds;
  ds.spec = spec;
  ds.seed = seed;
  ds.points = Matrix(spec.size(), 2);
  ds.labels.reserve(spec.size());
  ds.mislabeled.reserve(spec.size());

  std::size_t row = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& center = c == 0 ? spec.center0 : spec.center1;
    for (std::size_t i = 0; i < spec.points_per_class; ++i, ++row) {
      Rng rng = Rng::keyed(seed, kDatasetStream, row);
      ds.points(row, 0) = center[0] + spec.spread * rng.normal();
      ds.points(row, 1) = center[1] + spec.spread * rng.normal();
      ds.labels.push_back(c);
      ds.mislabeled.push_back(false);
    }
  }

  // Mislabeled points alternate between the clusters; the m-th pair is
  // rotated by m * 60 degrees around the cluster centre.
  for (std::size_t k = 0; k < spec.n_mislabeled; ++k, ++row) {
    const std::size_t near = k % 2;
    const auto& center = near == 0 ? spec.center0 : spec.center1;
    const double turn = static_cast<double>(k / 2) * std::numbers::pi / 3.0;
    const double angle = near == 0 ? std::numbers::pi / 2.0 + turn : -std::numbers::pi / 2.0 - turn;
    const double r = spec.mislabeled_offset * spec.spread;
    ds.points(row, 0) = center[0] + r * std::cos(angle);
    ds.points(row, 1) = center[1] + r * std::sin(angle);
    ds.labels.push_back(1 - near);
    ds.mislabeled.push_back(true);
  }
  return ds;
}

void write_dataset_csv(const ToyDataset& dataset, const std::filesystem::path& path) {
  CsvWriter w(path, {"x", "y", "label", "mislabeled"});
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    w.row_cells({format_double(dataset.points(i, 0)), format_double(dataset.points(i, 1)),
                 std::to_string(dataset.labels[i]), dataset.mislabeled[i] ? "1" : "0"});
  }
}

ToyDataset read_dataset_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cx = t.column("x"), cy = t.column("y"), cl = t.column("label");
  const std::size_t cm = t.column("mislabeled");
  if (t.rows.size() < 2) throw ConfigError(path.string() + ": dataset needs at least two points");
  ToyDataset ds;
  ds.points = Matrix(t.rows.size(), 2);
  bool seen[2] = {false, false};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    ds.points(i, 0) = parse_double(r[cx]);
    ds.points(i, 1) = parse_double(r[cy]);
    if (r[cl] != "0" && r[cl] != "1") {
      throw ConfigError(path.string() + ": label must be 0 or 1, got '" + r[cl] + "'");
    }
    ds.labels.push_back(r[cl] == "1" ? 1 : 0);
    seen[ds.labels.back()] = true;
    ds.mislabeled.push_back(r[cm] == "1");
  }
  if (!seen[0] || !seen[1]) throw ConfigError(path.string() + ": both classes must be present");
  return ds;
}

}  // namespace dirclip
