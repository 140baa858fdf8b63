#pragma once

#include <stdexcept>

namespace crossdex {

/// An input artifact failed to parse or violates its schema. CLI exit code 3.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (divergence, non-finite result). CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crossdex
