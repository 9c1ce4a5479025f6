#pragma once

#include <stdexcept>
#include <string>

namespace stinpaint {

// Base of every error this library throws. The CLI maps subclasses onto exit
// codes: usage/parameter problems -> 1, data/format problems -> 2, numeric
// failures -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class ImputerError : public Error {
 public:
  using Error::Error;
};

/// Metric requested over an empty hole set.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an API contract (missing gradient, empty valid set, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered or a gradient check failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace stinpaint
