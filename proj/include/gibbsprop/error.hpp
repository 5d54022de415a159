#pragma once

#include <stdexcept>
#include <string>

namespace gibbsprop {

// Exit codes used by the command-line harness.
enum class ExitCode : int { ok = 0, replay_mismatch = 1, validation = 2, numerical = 3, precision = 4 };

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual ExitCode exit_code() const noexcept { return ExitCode::numerical; }
};

// Bad inputs detected before any computation runs.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
  ExitCode exit_code() const noexcept override { return ExitCode::validation; }
};

class DomainConflictError : public ValidationError {
 public:
  explicit DomainConflictError(const std::string& msg) : ValidationError(msg) {}
};

// A read outside the sites or time window that an object covers.
class CoverageError : public ValidationError {
 public:
  explicit CoverageError(const std::string& msg) : ValidationError(msg) {}
};

// Combinatorial enumeration exceeded its configured cap.
class BudgetError : public ValidationError {
 public:
  explicit BudgetError(const std::string& msg) : ValidationError(msg) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
  ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
};

// A drift evaluator returned a value above its declared bound.
class BoundViolationError : public NumericalError {
 public:
  explicit BoundViolationError(const std::string& msg) : NumericalError(msg) {}
};

// Monte Carlo estimate too degenerate to report (low effective sample size).
class PrecisionError : public Error {
 public:
  explicit PrecisionError(const std::string& msg) : Error(msg) {}
  ExitCode exit_code() const noexcept override { return ExitCode::precision; }
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace gibbsprop
