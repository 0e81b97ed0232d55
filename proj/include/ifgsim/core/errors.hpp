#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ifgsim {

/// Base class of every error raised by the library. Each category maps to a
/// stable process exit code in the command-line tool.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Invalid parameters or configuration values.
class ConfigError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Invalid argument passed to an operation (negative intensity, bad shapes).
class InputError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class IoError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// A discretization cannot represent the requested operation without
/// aliasing. `limit` carries the largest admissible value of the offending
/// quantity (in SI units), when one exists.
class SamplingError : public Error {
public:
  SamplingError(const std::string& what, double limit = 0.0)
      : Error(what), limit_(limit) {}
  double limit() const noexcept { return limit_; }
  int exit_code() const noexcept override { return 4; }

private:
  double limit_;
};

/// Quantity outside the validity window of an approximation.
class RangeError : public SamplingError {
public:
  using SamplingError::SamplingError;
};

/// Problem too large for a brute-force routine.
class ResourceError : public SamplingError {
public:
  using SamplingError::SamplingError;
};

/// Optimizer failed to converge. Carries the final cost and the parameter
/// trace (one entry per accepted iteration).
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double final_cost,
                   std::vector<std::vector<double>> trace = {})
      : Error(what), final_cost_(final_cost), trace_(std::move(trace)) {}
  double final_cost() const noexcept { return final_cost_; }
  const std::vector<std::vector<double>>& trace() const noexcept { return trace_; }
  int exit_code() const noexcept override { return 5; }

private:
  double final_cost_;
  std::vector<std::vector<double>> trace_;
};

/// The data do not constrain some parameter combination. `null_direction`
/// names the unidentifiable parameters.
class SingularityError : public ConvergenceError {
public:
  SingularityError(const std::string& what, std::vector<std::string> null_direction)
      : ConvergenceError(what, 0.0), null_direction_(std::move(null_direction)) {}
  const std::vector<std::string>& null_direction() const noexcept { return null_direction_; }

private:
  std::vector<std::string> null_direction_;
};

} // namespace ifgsim
