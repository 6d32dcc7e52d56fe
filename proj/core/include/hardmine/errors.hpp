#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hardmine {

/// Base class for every error raised by the toolkit.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or internally inconsistent input files.
struct IngestError : Error {
  using Error::Error;
};

/// Query text that does not conform to the grammar.
struct ParseError : Error {
  ParseError(std::size_t pos, const std::string& message)
      : Error("query parse error at position " + std::to_string(pos) + ": " + message),
        position(pos) {}
  std::size_t position;
};

/// Query references a class name unknown to the dataset schema.
struct BindError : Error {
  using Error::Error;
};

/// Invalid or inconsistent run configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Failure while evaluating an estimator or a metric.
struct EvalError : Error {
  using Error::Error;
};

}  // namespace hardmine
