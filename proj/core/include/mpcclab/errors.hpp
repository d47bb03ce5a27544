#pragma once

#include <stdexcept>
#include <string>

namespace mpcclab {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

/// A pivot fell below the relative threshold during factorization.
class SingularMatrixError : public Error {
public:
  using Error::Error;
};

/// A subproblem was built at a point with some y_i <= 0 or w_i <= 0.
class InteriorityError : public Error {
public:
  using Error::Error;
};

class InfeasibleSubproblemError : public Error {
public:
  using Error::Error;
};

class IterationLimitError : public Error {
public:
  using Error::Error;
};

/// No penalty exponent p <= p_max satisfies the model-decrease condition.
class ExponentOverflowError : public Error {
public:
  using Error::Error;
};

class LineSearchError : public Error {
public:
  using Error::Error;
};

/// Adaptive trust-region radius fell below its configured floor.
class RadiusCollapseError : public Error {
public:
  using Error::Error;
};

class TraceTooShortError : public Error {
public:
  using Error::Error;
};

/// Bad command line or config-file input.
class UsageError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace mpcclab
