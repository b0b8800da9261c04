#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fxsmile/calibration.hpp"
#include "fxsmile/dataset.hpp"

namespace fxsmile::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kInputError = 1, kNumericalFailure = 2 };

enum class Method {
  Nested2,
  Nested2Merged,
  Nested5,
  Nested5Merged,
  Direct,
  ViaSpline,
  ViaSplineDelta,
};
inline constexpr Method kAllMethods[] = {Method::ViaSpline, Method::ViaSplineDelta,
                                         Method::Nested2,   Method::Nested2Merged,
                                         Method::Nested5,   Method::Nested5Merged,
                                         Method::Direct};

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);

/// A model name on the command line: a family, with the ATM-pinned SABR
/// variant spelled "atm-sabr".
struct ModelChoice {
  SmileFamily family = SmileFamily::Sabr;
  bool fix_atm = false;
};
ModelChoice model_from_string(std::string_view name);
std::string model_name(const ModelChoice& m);

/// K/F from lo to hi in n equal steps.
struct Grid {
  double lo = 0.5;
  double hi = 2.0;
  int n = 101;
};
Grid grid_from_string(const std::string& spec);

enum class Format { Json, Csv };

struct RunConfig {
  std::vector<std::string> data;
  std::vector<std::string> models;   ///< empty: command default
  std::vector<std::string> methods;  ///< empty: command default
  std::optional<std::string> slice;  ///< label or index; empty: every slice
  bool fix_atm = false;
  bool no_fit = false;
  std::string params;  ///< inline JSON, a file, or a parameter set named in the slice
  std::optional<Grid> grid;
  Format format = Format::Json;
  int max_iterations = 200;
};

/// Run one calibration method.
CalibrationReport run_method(const ModelChoice& model, Method method, const QuoteSlice& q,
                             const MarketSlice& mkt, int max_iterations = 200);

/// Iteration cap from FXSMILE_MAX_ITER, else `fallback`. Throws InvalidInput
/// on a value that is not a positive integer.
int max_iterations_from_env(int fallback = 200);

int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sample(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_error_table(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace fxsmile::cli
