#include "fxsmile/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fxsmile/errors.hpp"
#include "fxsmile/least_squares.hpp"
#include "fxsmile/roots.hpp"

namespace fxsmile {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRhoBound = 0.9999;

// Vanilla legs in strike order, matching the (P10, P25, ATM, C25, C10) layout.
struct WingLeg {
  OptionType type;
  double delta;
  const char* label;
};
constexpr std::array<WingLeg, 4> kWings{{
    {OptionType::Put, -0.10, "10D-Put"},
    {OptionType::Put, -0.25, "25D-Put"},
    {OptionType::Call, 0.25, "25D-Call"},
    {OptionType::Call, 0.10, "10D-Call"},
}};

std::array<double, 5> as_array(const VanillaVols& v) {
  return {v.put10, v.put25, v.atm, v.call25, v.call10};
}

std::array<double, 5> vanilla_strikes(const StrikeSet& s) {
  return {s.k_put10, s.k_put25, s.k_atm, s.k_call25, s.k_call10};
}

void set_wing_strikes(StrikeSet& s, const std::array<double, 4>& k) {
  s.k_put10 = k[0];
  s.k_put25 = k[1];
  s.k_call25 = k[2];
  s.k_call10 = k[3];
}

double smile_bf_floor(const QuoteSlice& q, double rr) {
  return -q.sigma_atm + 0.5 * std::abs(rr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Quotes and residuals

void QuoteSlice::validate() const {
  require(std::isfinite(sigma_atm) && sigma_atm > 0.0, "quote: sigma_atm must be positive");
  for (double v : {rr25, bf25, rr10, bf10}) require(std::isfinite(v), "quote: non-finite RR/BF");
  require(maturity > 0.0, "quote: maturity must be positive");
  (void)vanilla_vols_from_quotes(*this, bf25, bf10);
}

std::string_view to_string(Leg leg) {
  switch (leg) {
    case Leg::Ms25: return "ms25";
    case Leg::Ms10: return "ms10";
    case Leg::Rr25: return "rr25";
    case Leg::Rr10: return "rr10";
    case Leg::Atm: return "atm";
  }
  return "unknown";
}

std::string_view to_string(StrikeMode mode) {
  return mode == StrikeMode::StrikesUpfront ? "strikes-upfront" : "merged-delta-lookup";
}

bool ResidualVector::complete() const {
  return std::none_of(missing.begin(), missing.end(), [](bool b) { return b; });
}

Eigen::VectorXd ResidualVector::head(int dim) const {
  require(dim == 2 || dim == 5, "objective dimension must be 2 or 5");
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = values[static_cast<std::size_t>(i)];
  return v;
}

double ResidualVector::l2() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!missing[i]) acc += values[i] * values[i];
  }
  return std::sqrt(acc);
}

double ResidualVector::linf() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!missing[i]) acc = std::max(acc, std::abs(values[i]));
  }
  return acc;
}

VanillaVols vanilla_vols_from_quotes(const QuoteSlice& q, double bf_smile25, double bf_smile10) {
  const VanillaVols v{
      q.sigma_atm + bf_smile10 - 0.5 * q.rr10,
      q.sigma_atm + bf_smile25 - 0.5 * q.rr25,
      q.sigma_atm,
      q.sigma_atm + bf_smile25 + 0.5 * q.rr25,
      q.sigma_atm + bf_smile10 + 0.5 * q.rr10,
  };
  const std::array<std::pair<double, const char*>, 5> named{{
      {v.put10, "10D put"},
      {v.put25, "25D put"},
      {v.atm, "ATM"},
      {v.call25, "25D call"},
      {v.call10, "10D call"},
  }};
  for (const auto& [vol, name] : named) {
    if (!(vol > 0.0)) {
      std::ostringstream os;
      os << "smile convention gives a non-positive " << name << " vol (" << vol << ")";
      fail(ErrorKind::NonPositiveVol, os.str());
    }
  }
  return v;
}

MarketStrangle market_strangle_target(const QuoteSlice& q, const MarketSlice& mkt, double x) {
  const double bf = std::abs(x - 0.25) < 1e-12 ? q.bf25 : q.bf10;
  const double sigma = q.sigma_atm + bf;
  const auto strikes = market_strangle_strikes(x, q.convention, mkt, q.sigma_atm, bf);
  const double price = vanilla_price({OptionType::Put, strikes.k_put}, mkt, sigma) +
                       vanilla_price({OptionType::Call, strikes.k_call}, mkt, sigma);
  const double f = mkt.forward();
  const double phis = norm_pdf(d12(f, strikes.k_put, sigma, mkt.t()).d1) +
                      norm_pdf(d12(f, strikes.k_call, sigma, mkt.t()).d1);
  return {price, strikes, 1.0 / (mkt.df_dom() * phis * std::sqrt(mkt.t()) * f)};
}

StrikeSet upfront_strikes(const QuoteSlice& q, const MarketSlice& mkt, double bf_smile25,
                          double bf_smile10) {
  const auto vols = vanilla_vols_from_quotes(q, bf_smile25, bf_smile10);
  const auto ms25 = market_strangle_strikes(0.25, q.convention, mkt, q.sigma_atm, q.bf25);
  const auto ms10 = market_strangle_strikes(0.10, q.convention, mkt, q.sigma_atm, q.bf10);
  const auto style = q.convention.delta_style;
  StrikeSet s;
  s.k_atm = atm_strike(q.convention, mkt, q.sigma_atm);
  s.k_ms_put25 = ms25.k_put;
  s.k_ms_call25 = ms25.k_call;
  s.k_ms_put10 = ms10.k_put;
  s.k_ms_call10 = ms10.k_call;
  const std::array<double, 4> wing_vols{vols.put10, vols.put25, vols.call25, vols.call10};
  std::array<double, 4> k{};
  for (std::size_t i = 0; i < kWings.size(); ++i) {
    k[i] = strike_for_delta_flat_vol(style, kWings[i].type, kWings[i].delta, mkt, wing_vols[i]);
  }
  set_wing_strikes(s, k);
  return s;
}

StrikeSet merged_strikes(const SmileModel& m, const QuoteSlice& q, const StrikeSet& base) {
  StrikeSet s = base;
  std::array<double, 4> k{};
  for (std::size_t i = 0; i < kWings.size(); ++i) {
    k[i] = vol_and_strike_for_delta(m, q.convention.delta_style, kWings[i].type, kWings[i].delta)
               .strike;
  }
  set_wing_strikes(s, k);
  return s;
}

ResidualVector evaluate_residuals(const SmileModel& m, const QuoteSlice& q, const MarketSlice& mkt,
                                  const StrikeSet& strikes, const ResidualOptions& opts) {
  ResidualVector r;
  auto guarded = [&](Leg leg, auto&& compute) {
    const auto i = static_cast<std::size_t>(leg);
    if (!opts.failure_penalty) {
      try {
        r.values[i] = compute();
      } catch (const UnreachableDelta& e) {
        throw UnreachableDelta(e.target(), e.attainable(), std::string(to_string(leg)) + " leg");
      } catch (const Error& e) {
        fail(e.kind(), std::string(to_string(leg)) + " leg: " + e.what());
      }
      return;
    }
    try {
      r.values[i] = compute();
      if (!std::isfinite(r.values[i])) throw Error(ErrorKind::NonFinite, "leg");
    } catch (const Error&) {
      r.values[i] = *opts.failure_penalty;
      r.missing[i] = true;
    }
  };

  for (double x : {0.25, 0.10}) {
    const Leg leg = x == 0.25 ? Leg::Ms25 : Leg::Ms10;
    guarded(leg, [&] {
      const auto target = market_strangle_target(q, mkt, x);
      const double kp = x == 0.25 ? strikes.k_ms_put25 : strikes.k_ms_put10;
      const double kc = x == 0.25 ? strikes.k_ms_call25 : strikes.k_ms_call10;
      const double model = vanilla_price({OptionType::Put, kp}, mkt, vol_at_strike(m, kp)) +
                           vanilla_price({OptionType::Call, kc}, mkt, vol_at_strike(m, kc));
      return target.weight * (model - target.price);
    });
  }

  const auto style = q.convention.delta_style;
  for (double x : {0.25, 0.10}) {
    const Leg leg = x == 0.25 ? Leg::Rr25 : Leg::Rr10;
    const double rr = x == 0.25 ? q.rr25 : q.rr10;
    guarded(leg, [&] {
      if (opts.mode == StrikeMode::StrikesUpfront) {
        const double kc = x == 0.25 ? strikes.k_call25 : strikes.k_call10;
        const double kp = x == 0.25 ? strikes.k_put25 : strikes.k_put10;
        return vol_at_strike(m, kc) - vol_at_strike(m, kp) - rr;
      }
      const double call = vol_and_strike_for_delta(m, style, OptionType::Call, x).sigma;
      const double put = vol_and_strike_for_delta(m, style, OptionType::Put, -x).sigma;
      return call - put - rr;
    });
  }

  guarded(Leg::Atm, [&] { return vol_at_strike(m, strikes.k_atm) - q.sigma_atm; });
  return r;
}

std::array<ImpliedVanilla, 5> implied_vanilla_quotes(const SmileModel& m, const QuoteSlice& q) {
  std::array<ImpliedVanilla, 5> out;
  const double k_atm = atm_strike(q.convention, m.market(), q.sigma_atm);
  out[2] = {"ATM", k_atm, vol_at_strike(m, k_atm), true};
  const std::array<std::size_t, 4> slot{0, 1, 3, 4};
  for (std::size_t i = 0; i < kWings.size(); ++i) {
    try {
      const auto sv =
          vol_and_strike_for_delta(m, q.convention.delta_style, kWings[i].type, kWings[i].delta);
      out[slot[i]] = {kWings[i].label, sv.strike, sv.sigma, true};
    } catch (const UnreachableDelta& e) {
      throw UnreachableDelta(e.target(), e.attainable(), std::string(kWings[i].label) + " leg");
    }
  }
  return out;
}

ErrorReport error_report(const SmileModel& m, const QuoteSlice& q, const MarketSlice& mkt,
                         const StrikeSet& strikes) {
  ErrorReport e;
  e.fixed_strikes =
      evaluate_residuals(m, q, mkt, strikes, {StrikeMode::StrikesUpfront, 0.0});
  e.fixed_deltas =
      evaluate_residuals(m, q, mkt, strikes, {StrikeMode::MergedDeltaLookup, 0.0});
  e.l2_fixed_strikes = e.fixed_strikes.l2();
  e.l2_fixed_deltas = e.fixed_deltas.l2();
  e.complete = e.fixed_strikes.complete() && e.fixed_deltas.complete();
  return e;
}

// ---------------------------------------------------------------------------
// Step 4: fitting a family to five vanilla vols

namespace {

double sabr_alpha_for_atm(double rho, double nu, const MarketSlice& mkt, double k_atm,
                          double sigma_atm) {
  const double f = mkt.forward();
  const double t = mkt.t();
  auto g = [&](double alpha) { return sabr_vol({alpha, 1.0, rho, nu}, f, k_atm, t) - sigma_atm; };
  const double lo = 1e-3 * sigma_atm;
  double prev = lo;
  double hi = sigma_atm;
  for (int i = 0; i < 60 && g(hi) < 0.0; ++i) {
    prev = hi;
    hi *= 1.25;
  }
  return bracket_root(g, prev, hi).x;
}

struct ParamSpec {
  Eigen::VectorXd x0;
  Bounds bounds;
  std::function<void(Eigen::VectorXd&)> project;
};

// Parametric families in optimizer coordinates.
class Parametric {
 public:
  Parametric(SmileFamily family, bool fix_atm, const MarketSlice& mkt, double k_atm,
             double sigma_atm)
      : family_(family), fix_atm_(fix_atm), mkt_(mkt), k_atm_(k_atm), sigma_atm_(sigma_atm) {
    require(family == SmileFamily::Sabr || family == SmileFamily::Xssvi,
            "parametric fit needs SABR or XSSVI");
    require(!fix_atm || family == SmileFamily::Sabr, "fix_atm is only supported for SABR");
  }

  SmileModel model(const Eigen::VectorXd& x) const {
    if (family_ == SmileFamily::Xssvi) return SmileModel::xssvi({x[0], x[1], x[2]}, mkt_);
    if (fix_atm_) {
      const double alpha = sabr_alpha_for_atm(x[0], x[1], mkt_, k_atm_, sigma_atm_);
      return SmileModel::sabr({alpha, 1.0, x[0], x[1]}, mkt_);
    }
    return SmileModel::sabr({x[0], 1.0, x[1], x[2]}, mkt_);
  }

  Eigen::VectorXd to_coords(const SmileModel& m) const {
    if (const auto* p = std::get_if<XssviParams>(&m.params())) {
      return Eigen::Vector3d(p->theta, p->rho, p->phi);
    }
    const auto& s = std::get<SabrParams>(m.params());
    if (fix_atm_) return Eigen::Vector2d(s.rho, s.nu);
    return Eigen::Vector3d(s.alpha, s.rho, s.nu);
  }

  std::vector<ParamSpec> starts(double sigma_ref) const {
    std::vector<ParamSpec> out;
    for (double rho0 : {-0.5, 0.0, 0.5}) {
      ParamSpec s;
      if (family_ == SmileFamily::Xssvi) {
        const double theta = sigma_ref * sigma_ref * mkt_.t();
        s.x0 = Eigen::Vector3d(theta, rho0, 0.5 / std::sqrt(theta));
        s.bounds = {Eigen::Vector3d(1e-8, -kRhoBound, 1e-6), Eigen::Vector3d(25.0, kRhoBound, 1e4)};
        s.project = [](Eigen::VectorXd& x) {
          const double cap = kXssviGuard * (1.0 - 1e-9);
          const double g = x[0] * x[2] * (1.0 + std::abs(x[1]));
          if (g >= cap) x[2] = cap / (x[0] * (1.0 + std::abs(x[1])));
        };
      } else if (fix_atm_) {
        s.x0 = Eigen::Vector2d(rho0, 0.5);
        s.bounds = {Eigen::Vector2d(-kRhoBound, 0.0), Eigen::Vector2d(kRhoBound, 20.0)};
      } else {
        s.x0 = Eigen::Vector3d(sigma_ref, rho0, 0.5);
        s.bounds = {Eigen::Vector3d(1e-4, -kRhoBound, 0.0), Eigen::Vector3d(10.0, kRhoBound, 20.0)};
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  Bounds bounds() const { return starts(sigma_atm_).front().bounds; }
  std::function<void(Eigen::VectorXd&)> projection() const {
    return starts(sigma_atm_).front().project;
  }

 private:
  SmileFamily family_;
  bool fix_atm_;
  MarketSlice mkt_;
  double k_atm_;
  double sigma_atm_;
};

LsqResult best_of_starts(const Parametric& param, const ResidualFn& fn, double sigma_ref,
                         int max_iterations) {
  LsqResult best;
  best.norm = std::numeric_limits<double>::infinity();
  for (const auto& s : param.starts(sigma_ref)) {
    LsqOptions o;
    o.max_iterations = max_iterations;
    o.project = s.project;
    auto r = least_squares_solve(fn, s.x0, s.bounds, o);
    if (std::isfinite(r.norm) && r.norm < best.norm) best = std::move(r);
  }
  if (!std::isfinite(best.norm)) fail(ErrorKind::NonFinite, "parametric fit failed from every start");
  return best;
}

SmileModel fit_exact(SmileFamily family, const std::array<double, 5>& strikes,
                     const std::array<double, 5>& vols, const MarketSlice& mkt) {
  for (double v : vols) {
    if (!(v > 0.0)) fail(ErrorKind::NonPositiveVol, "exact fit: non-positive vanilla vol");
  }
  std::array<std::pair<double, double>, 5> pts;
  for (std::size_t i = 0; i < 5; ++i) {
    double abscissa = 0.0;
    switch (family) {
      case SmileFamily::SplineLogM: abscissa = std::log(strikes[i] / mkt.forward()); break;
      case SmileFamily::SplineDelta:
        abscissa = delta(DeltaStyle::ForwardPips, {OptionType::Call, strikes[i]}, mkt, vols[i]);
        break;
      default:
        abscissa = delta(DeltaStyle::Simple, {OptionType::Call, strikes[i]}, mkt, vols[i]);
        break;
    }
    pts[i] = {abscissa, vols[i]};
  }
  std::sort(pts.begin(), pts.end());

  if (family == SmileFamily::PolyDelta) {
    Eigen::Matrix<double, 5, 5> vander;
    Eigen::Matrix<double, 5, 1> rhs;
    for (int i = 0; i < 5; ++i) {
      double p = 1.0;
      for (int j = 0; j < 5; ++j) {
        vander(i, j) = p;
        p *= pts[static_cast<std::size_t>(i)].first;
      }
      rhs[i] = std::log(pts[static_cast<std::size_t>(i)].second);
    }
    const Eigen::Matrix<double, 5, 1> a = vander.fullPivLu().solve(rhs);
    if (!a.allFinite()) fail(ErrorKind::NonFinite, "poly-delta Vandermonde system is singular");
    PolyDeltaParams p;
    for (int j = 0; j < 5; ++j) p.a[static_cast<std::size_t>(j)] = a[j];
    return SmileModel::poly_delta(p, mkt);
  }

  SplineNodes nodes;
  for (std::size_t i = 0; i < 5; ++i) {
    nodes.abscissae[i] = pts[i].first;
    nodes.values[i] = pts[i].second;
  }
  const auto kind = family == SmileFamily::SplineLogM ? SplineKind::LogMoneyness
                                                      : SplineKind::ForwardDelta;
  return build_spline(kind, nodes, mkt);
}

// Fit to the vols at the five given strikes.
SmileModel fit_parametric_upfront(const Parametric& param, const std::array<double, 5>& strikes,
                                  const std::array<double, 5>& vols, int max_iterations) {
  auto fn = [&](const Eigen::VectorXd& x) {
    const SmileModel m = param.model(x);
    Eigen::VectorXd r(5);
    for (int i = 0; i < 5; ++i) {
      const auto j = static_cast<std::size_t>(i);
      r[i] = vol_at_strike(m, strikes[j]) - vols[j];
    }
    return r;
  };
  const auto best = best_of_starts(param, fn, vols[2], max_iterations);
  return param.model(best.x);
}

// Fit to the vols at the strikes the smile itself assigns to the quoted deltas.
SmileModel fit_parametric_merged(const Parametric& param, const SmileModel& start,
                                 const QuoteSlice& q, double k_atm, const VanillaVols& vols,
                                 double penalty, int max_iterations) {
  const auto targets = as_array(vols);
  const std::array<std::size_t, 4> slot{0, 1, 3, 4};
  auto fn = [&](const Eigen::VectorXd& x) {
    const SmileModel m = param.model(x);
    Eigen::VectorXd r(5);
    r[2] = vol_at_strike(m, k_atm) - targets[2];
    for (std::size_t i = 0; i < kWings.size(); ++i) {
      const auto at = static_cast<Eigen::Index>(slot[i]);
      try {
        r[at] = vol_and_strike_for_delta(m, q.convention.delta_style, kWings[i].type,
                                         kWings[i].delta)
                    .sigma -
                targets[slot[i]];
      } catch (const UnreachableDelta&) {
        r[at] = penalty;
      }
    }
    return r;
  };
  LsqOptions o;
  o.max_iterations = max_iterations;
  o.project = param.projection();
  const auto res = least_squares_solve(fn, param.to_coords(start), param.bounds(), o);
  if (!std::isfinite(res.norm)) fail(ErrorKind::NonFinite, "merged fit failed");
  return param.model(res.x);
}

}  // namespace

SmileModel fit_to_vanillas(SmileFamily family, const std::array<double, 5>& strikes,
                           const std::array<double, 5>& vols, const MarketSlice& mkt, bool fix_atm,
                           int max_iterations) {
  if (is_exact(family)) return fit_exact(family, strikes, vols, mkt);
  const Parametric param(family, fix_atm, mkt, strikes[2], vols[2]);
  return fit_parametric_upfront(param, strikes, vols, max_iterations);
}

// ---------------------------------------------------------------------------
// Reports

CalibrationReport make_report(const SmileModel& m, const QuoteSlice& q, const MarketSlice& mkt,
                              const StrikeSet& strikes, StrikeMode mode) {
  CalibrationReport rep{.model = m, .strikes = strikes};
  rep.residuals = evaluate_residuals(m, q, mkt, strikes, {mode, 0.0});
  rep.errors = error_report(m, q, mkt, strikes);
  rep.l2_fixed_strikes = rep.errors.l2_fixed_strikes;
  rep.l2_fixed_deltas = rep.errors.l2_fixed_deltas;
  rep.errors_complete = rep.errors.complete;
  const double k_atm = atm_strike(q.convention, mkt, q.sigma_atm);
  rep.implied_vanillas[2] = {"ATM", k_atm, kNaN, false};
  try {
    rep.implied_vanillas[2].sigma = vol_at_strike(m, k_atm);
    rep.implied_vanillas[2].available = true;
  } catch (const Error&) {
  }
  const std::array<std::size_t, 4> slot{0, 1, 3, 4};
  for (std::size_t i = 0; i < kWings.size(); ++i) {
    auto& iv = rep.implied_vanillas[slot[i]];
    iv = {kWings[i].label, kNaN, kNaN, false};
    try {
      const auto sv =
          vol_and_strike_for_delta(m, q.convention.delta_style, kWings[i].type, kWings[i].delta);
      iv = {kWings[i].label, sv.strike, sv.sigma, true};
    } catch (const Error&) {
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Calibrators

namespace {

struct InnerState {
  SmileModel model;
  StrikeSet strikes;
};

void check_inputs(const QuoteSlice& q, const MarketSlice& mkt) {
  q.validate();
  require(std::abs(q.maturity - mkt.t()) < 1e-12, "quote maturity differs from market slice");
  require(mkt.t() > 0.0, "calibration needs t > 0");
}

}  // namespace

CalibrationReport calibrate_nested(SmileFamily family, const QuoteSlice& q, const MarketSlice& mkt,
                                   const CalibrationOptions& opts) {
  check_inputs(q, mkt);
  require(opts.dim == 2 || opts.dim == 5, "objective dimension must be 2 or 5");
  const bool merged = opts.mode == StrikeMode::MergedDeltaLookup;
  const bool exact = is_exact(family);
  std::optional<Parametric> param;
  if (!exact) param.emplace(family, opts.fix_atm, mkt, atm_strike(q.convention, mkt, q.sigma_atm), q.sigma_atm);

  // Steps 2-4 for one pair of smile butterflies.
  auto inner = [&](double bf25, double bf10) {
    const auto vols = vanilla_vols_from_quotes(q, bf25, bf10);
    StrikeSet strikes = upfront_strikes(q, mkt, bf25, bf10);
    const auto ks = vanilla_strikes(strikes);
    SmileModel m = exact ? fit_exact(family, ks, as_array(vols), mkt)
                         : fit_parametric_upfront(*param, ks, as_array(vols), opts.max_iterations);
    if (merged && !exact) {
      m = fit_parametric_merged(*param, m, q, strikes.k_atm, vols, opts.unreachable_penalty,
                                opts.max_iterations);
    }
    return InnerState{std::move(m), strikes};
  };

  const ResidualOptions res_opts{opts.mode, opts.unreachable_penalty};
  auto objective = [&](const Eigen::VectorXd& x) {
    const auto state = inner(x[0], x[1]);
    return evaluate_residuals(state.model, q, mkt, state.strikes, res_opts).head(opts.dim);
  };

  const double tiny = 1e-6;
  Bounds bounds{Eigen::Vector2d(smile_bf_floor(q, q.rr25) + tiny, smile_bf_floor(q, q.rr10) + tiny),
                Eigen::Vector2d(1.0, 1.0)};
  LsqOptions lsq;
  lsq.max_iterations = opts.max_iterations;
  const auto sol = least_squares_solve(objective, Eigen::Vector2d(q.bf25, q.bf10), bounds, lsq);
  if (!std::isfinite(sol.norm)) {
    fail(ErrorKind::NonFinite, "nested calibration: objective not finite at the market butterflies");
  }

  auto state = inner(sol.x[0], sol.x[1]);
  if (merged && !exact) {
    try {
      state.strikes = merged_strikes(state.model, q, state.strikes);
    } catch (const Error&) {
    }
  }
  CalibrationReport rep = make_report(state.model, q, mkt, state.strikes, opts.mode);
  rep.iterations = sol.iterations;
  rep.converged = sol.converged && rep.residuals.complete();
  rep.objective = sol.norm * sol.norm;
  rep.smile_butterflies = std::array<double, 2>{sol.x[0], sol.x[1]};
  std::ostringstream name;
  name << "nested" << opts.dim << (merged ? "-merged" : "");
  rep.method = name.str();
  return rep;
}

CalibrationReport calibrate_direct(SmileFamily family, const QuoteSlice& q, const MarketSlice& mkt,
                                   const CalibrationOptions& opts) {
  check_inputs(q, mkt);
  const auto vols = vanilla_vols_from_quotes(q, q.bf25, q.bf10);
  const StrikeSet strikes0 = upfront_strikes(q, mkt, q.bf25, q.bf10);
  const auto ks = vanilla_strikes(strikes0);
  const SmileModel initial = fit_to_vanillas(family, ks, as_array(vols), mkt, opts.fix_atm,
                                             opts.max_iterations);

  // Coordinates and model map per family.
  Eigen::VectorXd x0;
  Bounds bounds = Bounds::unbounded(0);
  std::function<SmileModel(const Eigen::VectorXd&)> build;
  std::function<void(Eigen::VectorXd&)> project;
  std::optional<Parametric> param;
  if (!is_exact(family)) {
    param.emplace(family, opts.fix_atm, mkt, strikes0.k_atm, q.sigma_atm);
    x0 = param->to_coords(initial);
    bounds = param->bounds();
    project = param->projection();
    build = [&](const Eigen::VectorXd& x) { return param->model(x); };
  } else if (family == SmileFamily::PolyDelta) {
    const auto& p = std::get<PolyDeltaParams>(initial.params());
    x0 = Eigen::Map<const Eigen::VectorXd>(p.a.data(), 5);
    bounds = Bounds::unbounded(5);
    build = [&](const Eigen::VectorXd& x) {
      PolyDeltaParams a;
      for (int i = 0; i < 5; ++i) a.a[static_cast<std::size_t>(i)] = x[i];
      return SmileModel::poly_delta(a, mkt);
    };
  } else {
    const auto& s = std::get<SplineSmile>(initial.params());
    x0 = Eigen::Map<const Eigen::VectorXd>(s.nodes.values.data(), 5);
    bounds = {Eigen::VectorXd::Constant(5, 1e-4), Eigen::VectorXd::Constant(5, 10.0)};
    build = [&, kind = s.kind, abscissae = s.nodes.abscissae](const Eigen::VectorXd& x) {
      SplineNodes n;
      n.abscissae = abscissae;
      for (int i = 0; i < 5; ++i) n.values[static_cast<std::size_t>(i)] = x[i];
      return build_spline(kind, n, mkt);
    };
  }

  const ResidualOptions res_opts{opts.mode, opts.unreachable_penalty};
  auto objective = [&](const Eigen::VectorXd& x) {
    return evaluate_residuals(build(x), q, mkt, strikes0, res_opts).head(5);
  };
  LsqOptions lsq;
  lsq.max_iterations = opts.max_iterations;
  lsq.project = project;
  const auto sol = least_squares_solve(objective, x0, bounds, lsq);
  if (!std::isfinite(sol.norm)) {
    fail(ErrorKind::NonFinite, "direct calibration: objective not finite at the initial guess");
  }

  const SmileModel m = build(sol.x);
  StrikeSet frozen = strikes0;
  if (opts.mode == StrikeMode::MergedDeltaLookup) {
    try {
      frozen = merged_strikes(m, q, strikes0);
    } catch (const Error&) {
    }
  }
  CalibrationReport rep = make_report(m, q, mkt, frozen, opts.mode);
  rep.iterations = sol.iterations;
  rep.converged = sol.converged && rep.residuals.complete();
  rep.objective = sol.norm * sol.norm;
  rep.method = "direct";
  return rep;
}

CalibrationReport calibrate_via_exact(SmileFamily family, SplineKind exact_kind,
                                      const QuoteSlice& q, const MarketSlice& mkt,
                                      const CalibrationOptions& opts) {
  check_inputs(q, mkt);
  const auto exact_family = exact_kind == SplineKind::LogMoneyness ? SmileFamily::SplineLogM
                                                                   : SmileFamily::SplineDelta;
  CalibrationOptions exact_opts = opts;
  exact_opts.dim = 5;
  exact_opts.mode = StrikeMode::StrikesUpfront;
  const auto exact = calibrate_nested(exact_family, q, mkt, exact_opts);

  const auto vanillas = implied_vanilla_quotes(exact.model, q);
  std::array<double, 5> ks{};
  std::array<double, 5> vols{};
  for (std::size_t i = 0; i < 5; ++i) {
    ks[i] = vanillas[i].strike;
    vols[i] = vanillas[i].sigma;
  }
  StrikeSet strikes = exact.strikes;
  set_wing_strikes(strikes, {ks[0], ks[1], ks[3], ks[4]});

  const SmileModel m =
      family == exact_family
          ? exact.model
          : fit_to_vanillas(family, ks, vols, mkt, opts.fix_atm, opts.max_iterations);
  CalibrationReport rep = make_report(m, q, mkt, strikes, StrikeMode::StrikesUpfront);
  rep.iterations = exact.iterations;
  rep.converged = exact.converged && rep.residuals.complete();
  rep.objective = rep.residuals.l2() * rep.residuals.l2();
  rep.smile_butterflies = exact.smile_butterflies;
  rep.method = exact_kind == SplineKind::LogMoneyness ? "via-spline" : "via-spline-delta";
  return rep;
}

}  // namespace fxsmile
