#pragma once

#include <stdexcept>
#include <string>

namespace fedexprox {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

// A local solver ran past its theoretical iteration bound. The bound is a
// theorem, so this always indicates a bug.
class IterationCapExceeded : public Error {
 public:
  using Error::Error;
};

class InadmissibleInexactness : public Error {
 public:
  using Error::Error;
};

// Adaptive extrapolation hit a zero denominator (only at the exact optimum).
class DegenerateStep : public Error {
 public:
  using Error::Error;
};

class DivergenceDetected : public Error {
 public:
  using Error::Error;
};

// The server update and the biased-estimator form of it disagreed.
class IdentityViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedexprox
