#pragma once

#include <string_view>

namespace fxsmile {

/// Standard normal density and distribution evaluated together.
struct Gaussian {
  double pdf;
  double cdf;
};

Gaussian gaussian(double x);
double norm_pdf(double x);
double norm_cdf(double x);
/// Inverse of the standard normal distribution, p in (0, 1).
double norm_inv(double p);

/// One maturity of market data. Volatility-independent, immutable after
/// construction. Use the named constructors; they enforce consistency
/// between spot, forward and the two discount factors.
class MarketSlice {
 public:
  /// All four quantities supplied; checked for mutual consistency.
  static MarketSlice make(double spot, double forward, double df_dom, double df_for, double t);
  /// Forward, spot and foreign discount factor; domestic factor derived.
  static MarketSlice from_forward(double forward, double spot, double df_for, double t);
  /// Spot and both discount factors; forward derived.
  static MarketSlice from_spot(double spot, double df_dom, double df_for, double t);
  /// Continuously compounded domestic/foreign rates.
  static MarketSlice from_rates(double spot, double r_dom, double r_for, double t);
  /// Forward only with a single discount factor for both currencies
  /// (spot = forward).
  static MarketSlice forward_only(double forward, double df, double t);

  double spot() const noexcept { return spot_; }
  double forward() const noexcept { return forward_; }
  double df_dom() const noexcept { return df_dom_; }
  double df_for() const noexcept { return df_for_; }
  double t() const noexcept { return t_; }

  bool operator==(const MarketSlice&) const = default;

 private:
  MarketSlice(double spot, double forward, double df_dom, double df_for, double t);

  double spot_;
  double forward_;
  double df_dom_;
  double df_for_;
  double t_;
};

enum class OptionType { Call = 1, Put = -1 };

constexpr int sign(OptionType type) noexcept { return static_cast<int>(type); }

struct OptionSpec {
  OptionType type;
  double strike;

  int eta() const noexcept { return sign(type); }
};

/// Delta quoting styles. Spot variants are the forward variant scaled by the
/// foreign discount factor. Simple is Phi(ln(F/K)/(sigma sqrt(T))) for either
/// option type.
enum class DeltaStyle { ForwardPips, ForwardPercent, SpotPips, SpotPercent, Simple };

constexpr bool is_percent(DeltaStyle s) noexcept {
  return s == DeltaStyle::ForwardPercent || s == DeltaStyle::SpotPercent;
}
constexpr bool is_spot(DeltaStyle s) noexcept {
  return s == DeltaStyle::SpotPips || s == DeltaStyle::SpotPercent;
}

std::string_view to_string(DeltaStyle s);
DeltaStyle delta_style_from_string(std::string_view name);

struct D12 {
  double d1;
  double d2;
};

/// d1 = ln(f/k)/(sigma sqrt(t)) + sigma sqrt(t)/2, d2 = d1 - sigma sqrt(t).
/// Throws InvalidInput when sigma sqrt(t) is not strictly positive.
D12 d12(double f, double k, double sigma, double t);

/// Discounted Black price. sigma = 0 or t = 0 gives discounted intrinsic.
double vanilla_price(const OptionSpec& opt, const MarketSlice& mkt, double sigma);

double delta(DeltaStyle style, const OptionSpec& opt, const MarketSlice& mkt, double sigma);

/// df_dom * F * phi(d1) * sqrt(t)
double vega(double k, const MarketSlice& mkt, double sigma);

}  // namespace fxsmile
