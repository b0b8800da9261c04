#pragma once

#include <array>
#include <string_view>
#include <variant>

#include "fxsmile/pricing.hpp"
#include "fxsmile/spline.hpp"

namespace fxsmile {

struct SabrParams {
  double alpha = 0.1;
  double beta = 1.0;
  double rho = 0.0;
  double nu = 0.0;
};

/// Single-slice SSVI: total variance
/// w(k) = theta/2 (1 + rho phi k + sqrt((phi k + rho)^2 + 1 - rho^2)).
struct XssviParams {
  double theta = 0.01;
  double rho = 0.0;
  double phi = 1.0;
};

/// Upper bound on theta*phi*(1+|rho|) for an admissible XSSVI slice.
inline constexpr double kXssviGuard = 4.0;

inline constexpr std::size_t kNodeCount = 5;

struct SplineNodes {
  std::array<double, kNodeCount> abscissae{};
  std::array<double, kNodeCount> values{};
};

/// sigma(d) = exp(sum_i a_i d^i), d the simple delta.
struct PolyDeltaParams {
  std::array<double, kNodeCount> a{};
};

enum class SmileFamily { Sabr, Xssvi, SplineLogM, SplineDelta, PolyDelta };
enum class SplineKind { LogMoneyness, ForwardDelta };

std::string_view to_string(SmileFamily f);

/// True for parameterizations defined as a function of delta, where the vol
/// at a fixed strike needs a root solve.
constexpr bool is_delta_implicit(SmileFamily f) noexcept {
  return f == SmileFamily::SplineDelta || f == SmileFamily::PolyDelta;
}

constexpr bool is_exact(SmileFamily f) noexcept {
  return f == SmileFamily::SplineLogM || f == SmileFamily::SplineDelta ||
         f == SmileFamily::PolyDelta;
}

/// Log-moneyness splines extrapolate linearly, delta splines flat.
struct SplineSmile {
  SplineKind kind;
  SplineNodes nodes;
  NaturalCubicSpline curve;
};

/// One of the five parameterizations anchored to the market slice it was
/// built for. Immutable once constructed.
class SmileModel {
 public:
  using Params = std::variant<SabrParams, XssviParams, SplineSmile, PolyDeltaParams>;

  static SmileModel sabr(const SabrParams& p, const MarketSlice& mkt);
  static SmileModel xssvi(const XssviParams& p, const MarketSlice& mkt);
  static SmileModel poly_delta(const PolyDeltaParams& p, const MarketSlice& mkt);
  /// Use build_spline().
  static SmileModel spline(SplineKind kind, const SplineNodes& nodes, const MarketSlice& mkt);

  SmileFamily family() const noexcept;
  const MarketSlice& market() const noexcept { return market_; }
  const Params& params() const noexcept { return params_; }

  /// sigma as a function of the model's delta abscissa. Delta-implicit
  /// families only.
  double vol_at_delta(double d) const;
  /// The delta each delta-implicit family is parameterized in: simple delta
  /// for PolyDelta, call forward-pips delta for SplineDelta.
  double abscissa_delta(double k, double sigma) const;

 private:
  SmileModel(Params p, const MarketSlice& mkt) : params_(std::move(p)), market_(mkt) {}

  Params params_;
  MarketSlice market_;
};

/// Hagan lognormal expansion with Obloj's leading term. Throws NonPositiveVol
/// when the expansion is not a positive finite volatility.
double sabr_vol(const SabrParams& p, double f, double k, double t);

double xssvi_vol(const XssviParams& p, double f, double k, double t);

void validate(const SabrParams& p);
void validate(const XssviParams& p);

/// Abscissae: ln(K/F) for LogMoneyness, call forward-pips delta for
/// ForwardDelta. Rejects unsorted or duplicate abscissae.
SmileModel build_spline(SplineKind kind, const SplineNodes& nodes, const MarketSlice& mkt);

struct DeltaRoot {
  double d;         ///< solved delta abscissa
  double sigma;     ///< sigma(d)
  double residual;  ///< g(d)
  int iterations;
};

/// Root of g(d) = delta(k, sigma(d)) - d on [0, 1] for a delta-implicit
/// smile. Throws NoRoot if g does not change sign.
DeltaRoot solve_delta_implicit(const SmileModel& m, double k);

/// Implied volatility of the smile at strike k. Delta-implicit families
/// bracket g(d) = delta(k, sigma(d)) - d on [0, 1].
double vol_at_strike(const SmileModel& m, double k);

struct StrikeVol {
  double strike;
  double sigma;
};

/// Strike (and its smile vol) where the quoted delta under the smile equals
/// `target`. Scans log-strike, then refines the OTM crossing by bracketing:
/// for calls the right-most crossing with delta decreasing through the
/// target, for puts the left-most. Throws UnreachableDelta when no strike
/// attains the target.
StrikeVol vol_and_strike_for_delta(const SmileModel& m, DeltaStyle style, OptionType type,
                                   double target);

/// Outcome of one of the reference iterations kept to reproduce their
/// failure modes on delta-implicit smiles.
struct IterationTrace {
  bool converged = false;
  int iterations = 0;
  double sigma = 0.0;
};

/// sigma_{n+1} = sigma(delta(k, sigma_n)) until |sigma_{n+1} - sigma_n| < tol.
IterationTrace fixed_point_vol(const SmileModel& m, double k, double sigma0, double tol = 1e-8,
                               int max_iterations = 100);

/// Newton on f(v) = sigma(delta(k, v)) - v, derivative by central differences.
IterationTrace newton_vol(const SmileModel& m, double k, double sigma0, double tol = 1e-10,
                          int max_iterations = 100);

/// Newton on g(h(y)) with h the logistic sigmoid, so the delta iterate stays
/// inside (0, 1). Starts from the delta of the ATM vol.
IterationTrace sigmoid_newton_vol(const SmileModel& m, double k, double tol = 1e-13,
                                  int max_iterations = 100);

}  // namespace fxsmile
