#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "fxsmile/conventions.hpp"
#include "fxsmile/smile.hpp"

namespace fxsmile {

/// One maturity of broker quotes, volatilities in decimals.
struct QuoteSlice {
  double sigma_atm = 0.0;
  double rr25 = 0.0;
  double bf25 = 0.0;
  double rr10 = 0.0;
  double bf10 = 0.0;
  Convention convention;
  double maturity = 0.0;

  /// sigma_atm > 0 and all four vanilla vols implied by the smile convention
  /// at the market butterflies positive.
  void validate() const;
  bool operator==(const QuoteSlice&) const = default;
};

/// The nine strikes of a slice: ATM, four market-strangle legs and four
/// vanilla delta strikes.
struct StrikeSet {
  double k_atm = 0.0;
  double k_ms_put25 = 0.0;
  double k_ms_call25 = 0.0;
  double k_ms_put10 = 0.0;
  double k_ms_call10 = 0.0;
  double k_put25 = 0.0;
  double k_call25 = 0.0;
  double k_put10 = 0.0;
  double k_call10 = 0.0;
};

/// Residual legs in objective order.
enum class Leg { Ms25, Ms10, Rr25, Rr10, Atm };
inline constexpr std::array<Leg, 5> kLegs{Leg::Ms25, Leg::Ms10, Leg::Rr25, Leg::Rr10, Leg::Atm};
std::string_view to_string(Leg leg);

/// Strangle legs are vega-weighted price errors, the rest vol errors; all
/// signed, all in vol units. A leg whose strike lookup failed is flagged
/// missing and holds either 0 or the penalty used during optimization.
struct ResidualVector {
  std::array<double, 5> values{};
  std::array<bool, 5> missing{};

  double& operator[](Leg leg) { return values[static_cast<std::size_t>(leg)]; }
  double operator[](Leg leg) const { return values[static_cast<std::size_t>(leg)]; }
  bool is_missing(Leg leg) const { return missing[static_cast<std::size_t>(leg)]; }
  bool complete() const;

  /// The first `dim` entries (2: strangles only, 5: all).
  Eigen::VectorXd head(int dim) const;
  /// Euclidean norm of the dim-5 vector over legs that are not missing.
  double l2() const;
  double linf() const;
};

enum class StrikeMode { StrikesUpfront, MergedDeltaLookup };
std::string_view to_string(StrikeMode mode);

/// (sigma_P10, sigma_P25, sigma_ATM, sigma_C25, sigma_C10)
struct VanillaVols {
  double put10;
  double put25;
  double atm;
  double call25;
  double call10;
};

/// Smile convention: call = ATM + BF + RR/2, put = ATM + BF - RR/2.
VanillaVols vanilla_vols_from_quotes(const QuoteSlice& q, double bf_smile25, double bf_smile10);

struct MarketStrangle {
  double price;
  StranglePair strikes;
  double weight;  ///< inverse strangle vega, so weight times price error is a vol
};

/// Broker market strangle at delta level x (0.10 or 0.25).
MarketStrangle market_strangle_target(const QuoteSlice& q, const MarketSlice& mkt, double x);

/// ATM and market-strangle strikes with the vanilla strikes solved at the
/// smile-convention vols for the given smile butterflies.
StrikeSet upfront_strikes(const QuoteSlice& q, const MarketSlice& mkt, double bf_smile25,
                          double bf_smile10);

struct ResidualOptions {
  StrikeMode mode = StrikeMode::StrikesUpfront;
  /// When set, failed legs contribute this value and are flagged missing
  /// instead of throwing.
  std::optional<double> failure_penalty;
};

/// Residuals of a smile against the quotes. In StrikesUpfront mode the
/// vanilla strikes are read from `strikes`; in MergedDeltaLookup they are
/// solved under the smile. ATM and strangle strikes always come from
/// `strikes`.
ResidualVector evaluate_residuals(const SmileModel& m, const QuoteSlice& q, const MarketSlice& mkt,
                                  const StrikeSet& strikes, const ResidualOptions& opts = {});

/// Vanilla strikes solved under the smile (four wings); other entries copied
/// from `base`. Throws on an unreachable leg.
StrikeSet merged_strikes(const SmileModel& m, const QuoteSlice& q, const StrikeSet& base);

struct ImpliedVanilla {
  std::string label;
  double strike = 0.0;
  double sigma = 0.0;
  bool available = true;
};

/// 10D-Put, 25D-Put, ATM, 25D-Call, 10D-Call under the smile.
std::array<ImpliedVanilla, 5> implied_vanilla_quotes(const SmileModel& m, const QuoteSlice& q);

struct CalibrationOptions {
  int dim = 5;
  StrikeMode mode = StrikeMode::StrikesUpfront;
  bool fix_atm = false;
  int max_iterations = 200;
  double unreachable_penalty = 1.0;
};

struct ErrorReport {
  double l2_fixed_strikes = 0.0;
  double l2_fixed_deltas = 0.0;
  ResidualVector fixed_strikes;
  ResidualVector fixed_deltas;
  bool complete = true;  ///< false when a leg failed and was left out of a norm
};

/// Dim-5 error norms with the given frozen strikes and with vanilla strikes
/// re-solved under the smile.
ErrorReport error_report(const SmileModel& m, const QuoteSlice& q, const MarketSlice& mkt,
                         const StrikeSet& strikes);

struct CalibrationReport {
  SmileModel model;
  StrikeSet strikes;  ///< strikes frozen by the calibration
  ResidualVector residuals{};
  double l2_fixed_strikes = 0.0;
  double l2_fixed_deltas = 0.0;
  bool errors_complete = true;
  ErrorReport errors{};
  std::array<ImpliedVanilla, 5> implied_vanillas{};
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;  ///< squared norm of the calibration's own objective
  std::optional<std::array<double, 2>> smile_butterflies{};
  std::string method{};
};

/// Step 4: fit a family to five (strike, vol) pairs. Exact families are
/// solved directly; SABR and XSSVI by least squares, SABR optionally with
/// alpha pinned so that sigma(k_atm) = sigma_atm.
SmileModel fit_to_vanillas(SmileFamily family, const std::array<double, 5>& strikes,
                           const std::array<double, 5>& vols, const MarketSlice& mkt,
                           bool fix_atm = false, int max_iterations = 200);

/// Nested calibration: outer unknowns are the two smile butterflies.
CalibrationReport calibrate_nested(SmileFamily family, const QuoteSlice& q, const MarketSlice& mkt,
                                   const CalibrationOptions& opts = {});

/// Single minimization over the smile parameters of the dim-5 objective.
CalibrationReport calibrate_direct(SmileFamily family, const QuoteSlice& q, const MarketSlice& mkt,
                                   const CalibrationOptions& opts = {});

/// Calibrate an exact spline, read its implied vanillas, fit `family` to them.
CalibrationReport calibrate_via_exact(SmileFamily family, SplineKind exact_kind,
                                      const QuoteSlice& q, const MarketSlice& mkt,
                                      const CalibrationOptions& opts = {});

/// Assembles strikes, residuals, error norms and implied vanillas for an
/// already fitted model. Used by the calibrators and for fixed parameters.
CalibrationReport make_report(const SmileModel& m, const QuoteSlice& q, const MarketSlice& mkt,
                              const StrikeSet& strikes, StrikeMode mode);

}  // namespace fxsmile
