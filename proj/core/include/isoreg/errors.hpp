#pragma once

#include <stdexcept>
#include <string>

namespace isoreg {

/// Malformed input: wrong lengths, out-of-range parameters, unknown names.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A hard size cap was exceeded (exponential enumerations, vertex limits).
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A structured object failed its invariants (non-monotone grid, bad splits,
/// invalid density).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace isoreg
