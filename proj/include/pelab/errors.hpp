#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pelab {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is missing, malformed or out of range.
/// `field()` names the offending key (dotted path, e.g. "scheme.alpha").
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or data file could be opened but not decoded.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// The finite-difference oracle hit a non-finite function value.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. backward on a cache from another forward call.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Requested measurement is not defined for this scheme.
class UnsupportedScheme : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch)
      : Error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
              ", batch " + std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

}  // namespace pelab
