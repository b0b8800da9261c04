#include "fxsmile/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "fxsmile/errors.hpp"

namespace fxsmile {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kMarketConsistencyTol = 1e-10;

void require_finite(double x, const char* name) {
  if (!std::isfinite(x)) fail(ErrorKind::NonFinite, std::string(name) + " is not finite");
}

}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// erfc keeps relative accuracy deep in the lower tail.
double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

Gaussian gaussian(double x) { return {norm_pdf(x), norm_cdf(x)}; }

double norm_inv(double p) {
  require(p > 0.0 && p < 1.0, "norm_inv: probability must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

MarketSlice::MarketSlice(double spot, double forward, double df_dom, double df_for, double t)
    : spot_(spot), forward_(forward), df_dom_(df_dom), df_for_(df_for), t_(t) {
  require_finite(spot, "spot");
  require_finite(forward, "forward");
  require_finite(df_dom, "df_dom");
  require_finite(df_for, "df_for");
  require_finite(t, "t");
  require(spot > 0.0, "spot must be positive");
  require(forward > 0.0, "forward must be positive");
  require(df_dom > 0.0 && df_dom <= 1.5, "df_dom must lie in (0, 1.5]");
  require(df_for > 0.0 && df_for <= 1.5, "df_for must lie in (0, 1.5]");
  require(t >= 0.0, "t must be non-negative");
}

MarketSlice MarketSlice::make(double spot, double forward, double df_dom, double df_for,
                              double t) {
  MarketSlice m(spot, forward, df_dom, df_for, t);
  const double implied = spot * df_for / df_dom;
  require(std::abs(forward - implied) / forward < kMarketConsistencyTol,
          "forward inconsistent with spot and discount factors");
  return m;
}

MarketSlice MarketSlice::from_forward(double forward, double spot, double df_for, double t) {
  require(forward > 0.0, "forward must be positive");
  return MarketSlice(spot, forward, spot * df_for / forward, df_for, t);
}

MarketSlice MarketSlice::from_spot(double spot, double df_dom, double df_for, double t) {
  require(df_dom > 0.0, "df_dom must be positive");
  return MarketSlice(spot, spot * df_for / df_dom, df_dom, df_for, t);
}

MarketSlice MarketSlice::from_rates(double spot, double r_dom, double r_for, double t) {
  return from_spot(spot, std::exp(-r_dom * t), std::exp(-r_for * t), t);
}

MarketSlice MarketSlice::forward_only(double forward, double df, double t) {
  return MarketSlice(forward, forward, df, df, t);
}

std::string_view to_string(DeltaStyle s) {
  switch (s) {
    case DeltaStyle::ForwardPips: return "forward-pips";
    case DeltaStyle::ForwardPercent: return "forward-percent";
    case DeltaStyle::SpotPips: return "spot-pips";
    case DeltaStyle::SpotPercent: return "spot-percent";
    case DeltaStyle::Simple: return "simple";
  }
  return "unknown";
}

DeltaStyle delta_style_from_string(std::string_view name) {
  for (auto s : {DeltaStyle::ForwardPips, DeltaStyle::ForwardPercent, DeltaStyle::SpotPips,
                 DeltaStyle::SpotPercent, DeltaStyle::Simple}) {
    if (to_string(s) == name) return s;
  }
  fail(ErrorKind::InvalidInput, "unknown delta style '" + std::string(name) + "'");
}

D12 d12(double f, double k, double sigma, double t) {
  require(f > 0.0 && k > 0.0, "d12: forward and strike must be positive");
  require(sigma >= 0.0 && t >= 0.0, "d12: sigma and t must be non-negative");
  const double sd = sigma * std::sqrt(t);
  require(sd > 0.0, "d12: sigma*sqrt(t) must be positive");
  const double d1 = std::log(f / k) / sd + 0.5 * sd;
  return {d1, d1 - sd};
}

double vanilla_price(const OptionSpec& opt, const MarketSlice& mkt, double sigma) {
  require_finite(sigma, "sigma");
  require_finite(opt.strike, "strike");
  require(sigma >= 0.0, "vanilla_price: sigma must be non-negative");
  require(opt.strike > 0.0, "vanilla_price: strike must be positive");
  const double f = mkt.forward();
  const double k = opt.strike;
  const int eta = opt.eta();
  if (sigma == 0.0 || mkt.t() == 0.0) {
    return mkt.df_dom() * std::max(eta * (f - k), 0.0);
  }
  const auto [d1, d2] = d12(f, k, sigma, mkt.t());
  return mkt.df_dom() * eta * (f * norm_cdf(eta * d1) - k * norm_cdf(eta * d2));
}

double delta(DeltaStyle style, const OptionSpec& opt, const MarketSlice& mkt, double sigma) {
  require_finite(sigma, "sigma");
  const double f = mkt.forward();
  const double k = opt.strike;
  const int eta = opt.eta();
  if (style == DeltaStyle::Simple) {
    require(sigma > 0.0 && mkt.t() > 0.0, "delta: sigma*sqrt(t) must be positive");
    require(k > 0.0, "delta: strike must be positive");
    return norm_cdf(std::log(f / k) / (sigma * std::sqrt(mkt.t())));
  }
  const auto [d1, d2] = d12(f, k, sigma, mkt.t());
  const double forward_delta =
      is_percent(style) ? (k / f) * eta * norm_cdf(eta * d2) : eta * norm_cdf(eta * d1);
  return is_spot(style) ? mkt.df_for() * forward_delta : forward_delta;
}

double vega(double k, const MarketSlice& mkt, double sigma) {
  const double d1 = d12(mkt.forward(), k, sigma, mkt.t()).d1;
  return mkt.df_dom() * mkt.forward() * norm_pdf(d1) * std::sqrt(mkt.t());
}

}  // namespace fxsmile
