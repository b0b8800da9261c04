#include "fxsmile/roots.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "fxsmile/errors.hpp"

namespace fxsmile {

namespace {

bool opposite_signs(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }

}  // namespace

RootResult bracket_root(const ScalarFn& f, double lo, double hi, int max_iterations) {
  require(lo < hi, "bracket_root: empty interval");
  const double flo = f(lo);
  const double fhi = f(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi)) {
    fail(ErrorKind::NoRoot, "bracket_root: non-finite function value at bracket end");
  }
  if (flo == 0.0) return {lo, 0.0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0};
  if (!opposite_signs(flo, fhi)) {
    std::ostringstream os;
    os.precision(6);
    os << "bracket_root: no sign change on [" << lo << ", " << hi << "] (f = " << flo << ", "
       << fhi << ")";
    fail(ErrorKind::NoRoot, os.str());
  }

  bool non_finite = false;
  auto guarded = [&](double x) {
    const double y = f(x);
    if (!std::isfinite(y)) {
      non_finite = true;
      return 0.0;  // stops the solver; reported below
    }
    return y;
  };

  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iterations);
  boost::math::tools::eps_tolerance<double> tol;
  const auto [a, b] = boost::math::tools::toms748_solve(guarded, lo, hi, flo, fhi, tol, iters);
  if (non_finite) fail(ErrorKind::NoRoot, "bracket_root: non-finite function value inside bracket");

  const double fa = a == lo ? flo : f(a);
  const double fb = b == hi ? fhi : f(b);
  const bool collapsed = tol(a, b) || fa == 0.0 || fb == 0.0;
  if (!collapsed && iters >= static_cast<std::uintmax_t>(max_iterations)) {
    fail(ErrorKind::IterationLimit, "bracket_root: iteration budget exhausted");
  }
  const int used = static_cast<int>(iters);
  return std::abs(fa) <= std::abs(fb) ? RootResult{a, fa, used} : RootResult{b, fb, used};
}

std::pair<double, double> expand_bracket(const ScalarFn& f, double start, double step,
                                         int max_steps) {
  require(step != 0.0, "expand_bracket: zero step");
  const double f0 = f(start);
  if (!std::isfinite(f0)) fail(ErrorKind::NoRoot, "expand_bracket: non-finite start value");
  double prev = start;
  for (int i = 1; i <= max_steps; ++i) {
    const double x = start + i * step;
    const double fx = f(x);
    if (!std::isfinite(fx)) break;
    if (fx == 0.0 || opposite_signs(f0, fx)) {
      return step > 0.0 ? std::pair{prev, x} : std::pair{x, prev};
    }
    prev = x;
  }
  fail(ErrorKind::NoRoot, "expand_bracket: no sign change found");
}

}  // namespace fxsmile
