#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dirclip {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an array does not have the size implied by a configuration.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t actual);

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// Invalid user-supplied configuration (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A log-density term or sampler quantity became NaN/inf (CLI exit code 3).
class NumericalError : public Error {
 public:
  NumericalError(std::string term, const std::string& detail);

  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

}  // namespace dirclip
