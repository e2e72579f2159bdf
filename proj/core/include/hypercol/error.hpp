#pragma once

#include <stdexcept>
#include <string>

namespace hypercol {

// Precondition violated by the caller (shapes, ranges, empty inputs).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed container or model bytes (bad magic, truncation, trailing data).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input using a version or dtype this build does not understand.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decoded data that breaks a domain invariant (non-binary mask, NaN features).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Request exceeds a configured resource cap (e.g. kernel SVM training rows).
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Statistical test input with no information (all paired differences zero).
class DegenerateSampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hypercol
