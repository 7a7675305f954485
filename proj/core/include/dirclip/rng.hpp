#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace dirclip {

/// SplitMix64 stream. Streams are keyed by (seed, stream, counter) so that a
/// chain's draws do not depend on which thread runs it or in what order.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Independent stream for e.g. (run seed, chain index, step index).
  static Rng keyed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(*this); }

 private:
  std::uint64_t state_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace dirclip
