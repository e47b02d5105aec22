#pragma once

#include <stdexcept>
#include <string>

namespace cdtm {

/// Malformed input files (corpus lines, model containers).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Valid syntax but unusable data: out-of-range ticks, empty corpora,
/// all-OOV documents, model version mismatches.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite objectives or gradients encountered during fitting.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cdtm
