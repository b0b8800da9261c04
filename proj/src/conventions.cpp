#include "fxsmile/conventions.hpp"

#include <cmath>
#include <string>
#include <tuple>

#include "fxsmile/errors.hpp"
#include "fxsmile/roots.hpp"

namespace fxsmile {

std::string_view to_string(AtmStyle s) {
  return s == AtmStyle::AtmForward ? "atm-forward" : "dns";
}

AtmStyle atm_style_from_string(std::string_view name) {
  if (name == "atm-forward") return AtmStyle::AtmForward;
  if (name == "dns") return AtmStyle::DeltaNeutralStraddle;
  fail(ErrorKind::InvalidInput, "unknown ATM style '" + std::string(name) + "'");
}

Convention resolve_convention(const PairDescriptor& pair) {
  require(pair.premium_ccy == pair.base_ccy || pair.premium_ccy == pair.quote_ccy,
          "premium currency must be one of the pair's currencies");
  const bool percent = pair.premium_ccy == pair.base_ccy;
  const bool spot = pair.both_oecd && pair.maturity <= 1.0 && !pair.latam_atm_forward;
  Convention c;
  if (spot) {
    c.delta_style = percent ? DeltaStyle::SpotPercent : DeltaStyle::SpotPips;
  } else {
    c.delta_style = percent ? DeltaStyle::ForwardPercent : DeltaStyle::ForwardPips;
  }
  c.atm_style = pair.latam_atm_forward ? AtmStyle::AtmForward : AtmStyle::DeltaNeutralStraddle;
  return c;
}

double atm_strike(const Convention& conv, const MarketSlice& mkt, double sigma_atm) {
  const double f = mkt.forward();
  if (conv.atm_style == AtmStyle::AtmForward) return f;
  require(conv.delta_style != DeltaStyle::Simple, "atm_strike: simple delta has no DNS strike");
  require(sigma_atm > 0.0, "atm_strike: sigma_atm must be positive");
  const double half_var = 0.5 * sigma_atm * sigma_atm * mkt.t();
  return conv.premium_adjusted() ? f * std::exp(-half_var) : f * std::exp(half_var);
}

namespace {

double discount_for(DeltaStyle style, const MarketSlice& mkt) {
  return is_spot(style) ? mkt.df_for() : 1.0;
}

void check_delta_target(OptionType type, double target, double sigma, const MarketSlice& mkt) {
  require(std::isfinite(target), "delta target must be finite");
  require(sigma > 0.0 && mkt.t() > 0.0, "sigma*sqrt(t) must be positive");
  require(std::abs(target) > 0.0 && std::abs(target) < 1.0, "|delta target| must lie in (0, 1)");
  require((target > 0.0) == (type == OptionType::Call), "delta target sign must match option type");
}

// Percent delta as a function of x = ln(K/F), forward basis.
double percent_delta_logm(OptionType type, double x, double sd) {
  const int eta = sign(type);
  const double d2 = (-x - 0.5 * sd * sd) / sd;
  return std::exp(x) * eta * norm_cdf(eta * d2);
}

}  // namespace

DeltaMaximum call_delta_max(DeltaStyle style, const MarketSlice& mkt, double sigma) {
  require(is_percent(style), "call_delta_max: only premium-adjusted deltas have a maximum");
  require(sigma > 0.0 && mkt.t() > 0.0, "call_delta_max: sigma*sqrt(t) must be positive");
  const double sd = sigma * std::sqrt(mkt.t());
  // In d2, dDelta/dx has the sign of sd*Phi(d2) - phi(d2): negative for
  // d2 <= -sd, increasing beyond, so a single root on (-sd, inf).
  auto slope = [sd](double d2) { return sd * norm_cdf(d2) - norm_pdf(d2); };
  const auto root = bracket_root(slope, -sd, 40.0);
  const double d2 = root.x;
  const double x = -d2 * sd - 0.5 * sd * sd;
  return {mkt.forward() * std::exp(x), discount_for(style, mkt) * std::exp(x) * norm_cdf(d2)};
}

double strike_for_delta_flat_vol(DeltaStyle style, OptionType type, double target,
                                 const MarketSlice& mkt, double sigma) {
  check_delta_target(type, target, sigma, mkt);
  const double f = mkt.forward();
  const double sd = sigma * std::sqrt(mkt.t());
  const int eta = sign(type);

  if (style == DeltaStyle::Simple) {
    // Phi(ln(F/K)/sd) = |target| for either option type.
    return f * std::exp(-sd * norm_inv(std::abs(target)));
  }

  const double df = discount_for(style, mkt);
  if (!is_percent(style)) {
    const double p = eta * target / df;
    if (p >= 1.0) throw UnreachableDelta(target, eta * df, "pips delta bounded by discount factor");
    return f * std::exp(-eta * sd * norm_inv(p) + 0.5 * sd * sd);
  }

  const double fwd_target = target / df;
  auto residual = [&](double x) { return percent_delta_logm(type, x, sd) - fwd_target; };

  double lo = 0.0;
  double hi = 0.0;
  if (type == OptionType::Call) {
    const auto peak = call_delta_max(DeltaStyle::ForwardPercent, mkt, sigma);
    if (fwd_target > peak.delta_star) {
      throw UnreachableDelta(target, df * peak.delta_star, "premium-adjusted call maximum");
    }
    const double x_star = std::log(peak.k_star / f);
    if (residual(x_star) <= 0.0) return peak.k_star;
    std::tie(lo, hi) = expand_bracket(residual, x_star, sd);
  } else {
    // Monotone decreasing in x: ~0 far left, below -1 far right.
    const double x0 = -0.5 * sd * sd;
    std::tie(lo, hi) = expand_bracket(residual, x0, residual(x0) > 0.0 ? sd : -sd);
  }
  return f * std::exp(bracket_root(residual, lo, hi).x);
}

StranglePair market_strangle_strikes(double x, const Convention& conv, const MarketSlice& mkt,
                                     double sigma_atm, double bf_market) {
  require(std::abs(x - 0.10) < 1e-12 || std::abs(x - 0.25) < 1e-12,
          "market strangle delta level must be 0.10 or 0.25");
  const double sigma = sigma_atm + bf_market;
  require(sigma > 0.0, "market strangle flat vol must be positive");
  return {strike_for_delta_flat_vol(conv.delta_style, OptionType::Put, -x, mkt, sigma),
          strike_for_delta_flat_vol(conv.delta_style, OptionType::Call, x, mkt, sigma)};
}

}  // namespace fxsmile
