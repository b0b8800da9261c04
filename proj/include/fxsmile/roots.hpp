#pragma once

#include <functional>

namespace fxsmile {

using ScalarFn = std::function<double(double)>;

struct RootResult {
  double x;
  double fx;
  int iterations;
};

/// Default iteration budget for every scalar solver in the library.
inline constexpr int kMaxRootIterations = 100;

/// TOMS748 on [lo, hi], run to full double precision in x. The returned
/// point is the final bracket end with the smaller |f|.
///
/// Throws NoRoot when f(lo), f(hi) do not straddle zero or either is not
/// finite, and IterationLimit when the budget runs out before the bracket
/// collapses.
RootResult bracket_root(const ScalarFn& f, double lo, double hi,
                        int max_iterations = kMaxRootIterations);

/// Walks from `start` in steps of `step` (sign gives the direction) until
/// f changes sign relative to f(start). Returns the pair of points
/// (previous, current) that straddle the sign change, ordered ascending.
/// Throws NoRoot after `max_steps` steps.
std::pair<double, double> expand_bracket(const ScalarFn& f, double start, double step,
                                         int max_steps = 200);

}  // namespace fxsmile
