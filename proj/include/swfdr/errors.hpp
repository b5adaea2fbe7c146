#pragma once

#include <stdexcept>
#include <string>

namespace swfdr {

/// Input data is unusable (too few observations, uninformative corpus,
/// malformed files). Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numerical routine failed to produce a finite result. Maps to CLI
/// exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace swfdr
