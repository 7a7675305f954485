#include "dirclip/rng.hpp"

#include "dirclip/error.hpp"

namespace dirclip {

DimensionError::DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
    : Error(what + ": expected size " + std::to_string(expected) + ", got " +
            std::to_string(actual)),
      expected_(expected),
      actual_(actual) {}

NumericalError::NumericalError(std::string term, const std::string& detail)
    : Error("non-finite value in " + term + ": " + detail), term_(std::move(term)) {}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::keyed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ (stream * 0xd1b54a32d192ed03ULL));
  key = splitmix64(key ^ (counter * 0x8cb92ba72f3d8dd7ULL));
  return Rng(key);
}

Rng::result_type Rng::operator()() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  // 53 random bits, shifted by half an ulp so 0 is never produced.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace dirclip
