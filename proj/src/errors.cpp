#include "fxsmile/errors.hpp"

#include <sstream>

namespace fxsmile {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonPositiveVol: return "NonPositiveVol";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::IterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

namespace {

std::string unreachable_message(double target, double attainable, const std::string& context) {
  std::ostringstream os;
  os.precision(10);
  os << "delta " << target << " is unreachable (closest attainable " << attainable << ")";
  if (!context.empty()) os << ": " << context;
  return os.str();
}

}  // namespace

UnreachableDelta::UnreachableDelta(double target, double attainable, const std::string& context)
    : Error(ErrorKind::Unreachable, unreachable_message(target, attainable, context)),
      target_(target),
      attainable_(attainable) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fxsmile
