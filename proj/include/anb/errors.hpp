#pragma once

#include <stdexcept>
#include <string>

namespace anb {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (bad architecture, bad ratios...).
class ValidationError : public Error {
public:
  using Error::Error;
};

// Degenerate numeric input (constant axis, too few samples).
class DegenerateInputError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Persisted file could not be turned back into an object.
class FormatError : public Error {
public:
  enum class Kind { version_mismatch, truncated, malformed };

  FormatError(Kind kind, const std::string &message)
      : Error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

// No training scheme satisfies the time budget.
class InfeasibleError : public Error {
public:
  InfeasibleError(const std::string &message, double min_time_hours)
      : Error(message), min_time_hours_(min_time_hours) {}

  double min_time_hours() const noexcept { return min_time_hours_; }

private:
  double min_time_hours_;
};

} // namespace anb
