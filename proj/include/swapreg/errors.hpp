#pragma once

#include <stdexcept>
#include <string>

namespace swapreg {

/// Base class for every error this library throws on purpose. Catching
/// swapreg::Error at the CLI boundary separates our failures from genuine
/// surprises (bad_alloc and friends), which are allowed to escape.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A vector or matrix had the wrong length for the problem at hand
/// (realization vector vs. terminal count, utility vector vs. transcript).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An enumeration or allocation would exceed a declared cap. The message
/// carries the cap and the offending count.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Structurally invalid input: malformed problem files, distributions that
/// do not sum to one, utilities outside [-1, 1], bad config values.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative numeric routine failed to reach its required tolerance
/// (currently only the stationary-distribution solve).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A query hit a hole in a partial function, e.g. evaluating a deviation at
/// a strategy it has no image for, or asking an adversary for a round past
/// the sequence it generated.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace swapreg
