#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fxsmile {

enum class ErrorKind {
  InvalidInput,    ///< precondition violated by the caller
  NonFinite,       ///< NaN or infinite value where a finite one is required
  NonPositiveVol,  ///< a parameterization or quote produced sigma <= 0
  Unreachable,     ///< no strike attains the requested delta
  NoRoot,          ///< bracketing found no sign change
  IterationLimit,  ///< a solver exhausted its iteration budget
};

std::string_view to_string(ErrorKind kind);

/// Base of every error thrown by the library. The kind is what callers
/// branch on; the message carries human-readable context.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A delta target that no strike attains. `attainable` is the delta closest
/// to the target over all strikes (the maximum for a premium-adjusted call).
class UnreachableDelta : public Error {
 public:
  UnreachableDelta(double target, double attainable, const std::string& context = {});

  double target() const noexcept { return target_; }
  double attainable() const noexcept { return attainable_; }

 private:
  double target_;
  double attainable_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvalidInput, what);
}

}  // namespace fxsmile
