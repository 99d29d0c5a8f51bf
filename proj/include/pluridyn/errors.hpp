#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pluridyn {

enum class ErrorKind {
  AllZero,
  AtInfinity,
  Degenerate,
  ChartFailure,
  IncompleteFiber,
  BranchCollision,
  ResolutionTooCoarse,
  DegenerateVariance,
  SingularCocycle,
  IncompleteEnumeration,
  NotProper,
  DegreeAmbiguous,
  DegreeTooLow,
  TreeBudgetExceeded,
  InvalidArgument,
  ConfigError,
  HeaderMismatch,
  IoFailure,
};

const char* to_string(ErrorKind kind);

/// Base of every error the library raises. The kind is stable and meant to be
/// matched on; the message carries human-readable context.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a solver finds fewer points than the Bezout-type count demands.
/// Carries how much was found so callers can prune or retry.
class CountShortfall : public Error {
 public:
  CountShortfall(ErrorKind kind, const std::string& message, int count_found, int count_expected)
      : Error(kind, message), count_found_(count_found), count_expected_(count_expected) {}
  int count_found() const noexcept { return count_found_; }
  int count_expected() const noexcept { return count_expected_; }

 private:
  int count_found_;
  int count_expected_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::InvalidArgument, message);
}

}  // namespace pluridyn
