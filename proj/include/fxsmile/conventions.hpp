#pragma once

#include <string>
#include <string_view>

#include "fxsmile/pricing.hpp"

namespace fxsmile {

enum class AtmStyle { DeltaNeutralStraddle, AtmForward };

std::string_view to_string(AtmStyle s);
AtmStyle atm_style_from_string(std::string_view name);

/// How a currency pair quotes its ATM and delta-based options.
struct Convention {
  DeltaStyle delta_style = DeltaStyle::ForwardPips;
  AtmStyle atm_style = AtmStyle::DeltaNeutralStraddle;

  bool premium_adjusted() const noexcept { return is_percent(delta_style); }
  bool operator==(const Convention&) const = default;
};

struct PairDescriptor {
  std::string base_ccy;
  std::string quote_ccy;
  std::string premium_ccy;
  double maturity = 0.0;  ///< year fraction
  bool latam_atm_forward = false;
  bool both_oecd = false;
  bool operator==(const PairDescriptor&) const = default;
};

/// Premium in the base currency gives percent deltas, otherwise pips. Spot
/// deltas only for OECD pairs up to one year that are not ATM-forward quoted.
Convention resolve_convention(const PairDescriptor& pair);

/// Strike of the ATM quote: the forward, or the delta-neutral straddle for
/// the convention's adjustment.
double atm_strike(const Convention& conv, const MarketSlice& mkt, double sigma_atm);

/// Strike whose delta at the constant volatility `sigma` equals `target`.
///
/// Pips deltas invert in closed form. Percent calls are non-monotone in the
/// strike: the maximum is located first and the root on its right (the OTM
/// branch) is returned; UnreachableDelta carries the maximum when the target
/// exceeds it. Percent puts are monotone and bracketed directly.
double strike_for_delta_flat_vol(DeltaStyle style, OptionType type, double target,
                                 const MarketSlice& mkt, double sigma);

struct DeltaMaximum {
  double k_star;
  double delta_star;
};

/// Maximum over strikes of the premium-adjusted call delta at constant vol.
DeltaMaximum call_delta_max(DeltaStyle style, const MarketSlice& mkt, double sigma);

struct StranglePair {
  double k_put;
  double k_call;
};

/// Broker market-strangle strikes: both legs at the single flat vol
/// sigma_atm + bf_market, deltas -x and +x. x must be 0.10 or 0.25.
StranglePair market_strangle_strikes(double x, const Convention& conv, const MarketSlice& mkt,
                                     double sigma_atm, double bf_market);

}  // namespace fxsmile
