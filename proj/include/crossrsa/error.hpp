#pragma once

#include <stdexcept>
#include <string>

namespace crossrsa {

/// Failure classes map one-to-one onto CLI exit codes.
enum class ErrorClass { config = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

/// Bad flags, bad configuration values, unsatisfiable preconditions on parameters.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorClass::config, what) {}
};

/// Malformed files, schema violations, inconsistent IDs.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorClass::data, what) {}
};

/// Degenerate numeric input (zero variance, singularities, divergence).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorClass::numeric, what) {}
};

class DegenerateInputError : public NumericError {
 public:
  explicit DegenerateInputError(const std::string& what) : NumericError(what) {}
};

}  // namespace crossrsa
