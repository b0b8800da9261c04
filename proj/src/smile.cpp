#include "fxsmile/smile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "fxsmile/errors.hpp"
#include "fxsmile/roots.hpp"

namespace fxsmile {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double checked_vol(double sigma, const char* what) {
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    std::ostringstream os;
    os << what << " produced a non-positive volatility (" << sigma << ")";
    fail(ErrorKind::NonPositiveVol, os.str());
  }
  return sigma;
}

double poly_vol(const PolyDeltaParams& p, double d) {
  double acc = 0.0;
  for (auto it = p.a.rbegin(); it != p.a.rend(); ++it) acc = acc * d + *it;
  return std::exp(acc);
}

}  // namespace

std::string_view to_string(SmileFamily f) {
  switch (f) {
    case SmileFamily::Sabr: return "sabr";
    case SmileFamily::Xssvi: return "xssvi";
    case SmileFamily::SplineLogM: return "spline-logm";
    case SmileFamily::SplineDelta: return "spline-delta";
    case SmileFamily::PolyDelta: return "poly-delta";
  }
  return "unknown";
}

void validate(const SabrParams& p) {
  require(std::isfinite(p.alpha) && p.alpha > 0.0, "SABR alpha must be positive");
  require(p.beta >= 0.0 && p.beta <= 1.0, "SABR beta must lie in [0, 1]");
  require(p.rho > -1.0 && p.rho < 1.0, "SABR rho must lie in (-1, 1)");
  require(std::isfinite(p.nu) && p.nu >= 0.0, "SABR nu must be non-negative");
}

void validate(const XssviParams& p) {
  require(std::isfinite(p.theta) && p.theta > 0.0, "XSSVI theta must be positive");
  require(p.rho > -1.0 && p.rho < 1.0, "XSSVI rho must lie in (-1, 1)");
  require(std::isfinite(p.phi) && p.phi > 0.0, "XSSVI phi must be positive");
  require(p.theta * p.phi * (1.0 + std::abs(p.rho)) < kXssviGuard,
          "XSSVI theta*phi*(1+|rho|) must stay below 4");
}

SmileModel SmileModel::sabr(const SabrParams& p, const MarketSlice& mkt) {
  validate(p);
  return SmileModel(p, mkt);
}

SmileModel SmileModel::xssvi(const XssviParams& p, const MarketSlice& mkt) {
  validate(p);
  return SmileModel(p, mkt);
}

SmileModel SmileModel::poly_delta(const PolyDeltaParams& p, const MarketSlice& mkt) {
  for (double a : p.a) require(std::isfinite(a), "poly-delta coefficients must be finite");
  return SmileModel(p, mkt);
}

SmileModel SmileModel::spline(SplineKind kind, const SplineNodes& nodes, const MarketSlice& mkt) {
  for (double v : nodes.values) {
    require(std::isfinite(v) && v > 0.0, "spline node vols must be positive");
  }
  const auto extrapolation =
      kind == SplineKind::LogMoneyness ? Extrapolation::Linear : Extrapolation::Flat;
  NaturalCubicSpline curve(nodes.abscissae, nodes.values, extrapolation);
  return SmileModel(SplineSmile{kind, nodes, std::move(curve)}, mkt);
}

SmileFamily SmileModel::family() const noexcept {
  return std::visit(Overloaded{
                        [](const SabrParams&) { return SmileFamily::Sabr; },
                        [](const XssviParams&) { return SmileFamily::Xssvi; },
                        [](const PolyDeltaParams&) { return SmileFamily::PolyDelta; },
                        [](const SplineSmile& s) {
                          return s.kind == SplineKind::LogMoneyness ? SmileFamily::SplineLogM
                                                                    : SmileFamily::SplineDelta;
                        },
                    },
                    params_);
}

double SmileModel::vol_at_delta(double d) const {
  if (const auto* p = std::get_if<PolyDeltaParams>(&params_)) return poly_vol(*p, d);
  const auto* s = std::get_if<SplineSmile>(&params_);
  require(s != nullptr && s->kind == SplineKind::ForwardDelta,
          "vol_at_delta: model is not delta-implicit");
  return s->curve(d);
}

double SmileModel::abscissa_delta(double k, double sigma) const {
  const auto style =
      family() == SmileFamily::PolyDelta ? DeltaStyle::Simple : DeltaStyle::ForwardPips;
  return delta(style, {OptionType::Call, k}, market_, sigma);
}

double sabr_vol(const SabrParams& p, double f, double k, double t) {
  require(f > 0.0 && k > 0.0 && t > 0.0, "sabr_vol: f, k, t must be positive");
  const double omb = 1.0 - p.beta;
  const double fk_pow = std::pow(f * k, omb);
  const double correction =
      1.0 + (omb * omb * p.alpha * p.alpha / (24.0 * fk_pow) +
             p.rho * p.beta * p.nu * p.alpha / (4.0 * std::sqrt(fk_pow)) +
             (2.0 - 3.0 * p.rho * p.rho) * p.nu * p.nu / 24.0) *
                t;

  const double log_fk = std::log(f / k);
  // Leading term nu ln(F/K) / x(zeta), written as (alpha scale) * zeta / x(zeta).
  double scale = 0.0;
  double zeta = 0.0;
  if (omb == 0.0) {
    scale = p.alpha;
    zeta = p.nu * log_fk / p.alpha;
  } else if (log_fk == 0.0) {
    scale = p.alpha / std::pow(f, omb);
  } else {
    const double z0 = (std::pow(f, omb) - std::pow(k, omb)) / omb;
    scale = p.alpha * log_fk / z0;
    zeta = p.nu * z0 / p.alpha;
  }

  double ratio = 1.0;  // zeta / x(zeta)
  if (std::abs(zeta) < 1e-7) {
    ratio = 1.0 - 0.5 * p.rho * zeta;
  } else {
    const double x =
        std::log((std::sqrt(1.0 - 2.0 * p.rho * zeta + zeta * zeta) + zeta - p.rho) /
                 (1.0 - p.rho));
    ratio = zeta / x;
  }
  return checked_vol(scale * ratio * correction, "SABR expansion");
}

double xssvi_vol(const XssviParams& p, double f, double k, double t) {
  require(f > 0.0 && k > 0.0 && t > 0.0, "xssvi_vol: f, k, t must be positive");
  const double kappa = std::log(k / f);
  const double pk = p.phi * kappa;
  const double w = 0.5 * p.theta *
                   (1.0 + p.rho * pk + std::sqrt((pk + p.rho) * (pk + p.rho) + 1.0 - p.rho * p.rho));
  return checked_vol(std::sqrt(w / t), "XSSVI");
}

SmileModel build_spline(SplineKind kind, const SplineNodes& nodes, const MarketSlice& mkt) {
  for (std::size_t i = 1; i < nodes.abscissae.size(); ++i) {
    require(nodes.abscissae[i] > nodes.abscissae[i - 1],
            "spline abscissae must be strictly increasing (duplicates rejected)");
  }
  return SmileModel::spline(kind, nodes, mkt);
}

DeltaRoot solve_delta_implicit(const SmileModel& m, double k) {
  require(is_delta_implicit(m.family()), "solve_delta_implicit: model is not delta-implicit");
  require(k > 0.0, "strike must be positive");
  auto g = [&](double d) {
    const double sigma = checked_vol(m.vol_at_delta(d), "delta-implicit smile");
    return m.abscissa_delta(k, sigma) - d;
  };
  const auto root = bracket_root(g, 0.0, 1.0);
  const double sigma = checked_vol(m.vol_at_delta(root.x), "delta-implicit smile");
  return {root.x, sigma, root.fx, root.iterations};
}

double vol_at_strike(const SmileModel& m, double k) {
  require(std::isfinite(k) && k > 0.0, "vol_at_strike: strike must be positive");
  const auto& mkt = m.market();
  return std::visit(
      Overloaded{
          [&](const SabrParams& p) { return sabr_vol(p, mkt.forward(), k, mkt.t()); },
          [&](const XssviParams& p) { return xssvi_vol(p, mkt.forward(), k, mkt.t()); },
          [&](const PolyDeltaParams&) { return solve_delta_implicit(m, k).sigma; },
          [&](const SplineSmile& s) {
            if (s.kind == SplineKind::ForwardDelta) return solve_delta_implicit(m, k).sigma;
            return checked_vol(s.curve(std::log(k / mkt.forward())), "log-moneyness spline");
          },
      },
      m.params());
}

namespace {

constexpr int kScanIntervals = 240;
constexpr double kScanHalfWidth = 10.0;  // in units of sigma_ref * sqrt(T)

}  // namespace

StrikeVol vol_and_strike_for_delta(const SmileModel& m, DeltaStyle style, OptionType type,
                                   double target) {
  require(std::isfinite(target) && std::abs(target) > 0.0 && std::abs(target) < 1.0,
          "|delta target| must lie in (0, 1)");
  require((target > 0.0) == (type == OptionType::Call), "delta target sign must match option type");
  const auto& mkt = m.market();
  const double f = mkt.forward();
  require(mkt.t() > 0.0, "vol_and_strike_for_delta: t must be positive");

  auto smile_delta = [&](double x) {
    const double k = f * std::exp(x);
    return delta(style, {type, k}, mkt, vol_at_strike(m, k));
  };
  auto try_delta = [&](double x) -> std::optional<double> {
    try {
      const double d = smile_delta(x);
      if (std::isfinite(d)) return d;
    } catch (const Error&) {
    }
    return std::nullopt;
  };

  const double sd = vol_at_strike(m, f) * std::sqrt(mkt.t());
  const double lo = -kScanHalfWidth * sd;
  const double step = 2.0 * kScanHalfWidth * sd / kScanIntervals;
  std::vector<double> xs(kScanIntervals + 1);
  std::vector<std::optional<double>> ds(kScanIntervals + 1);
  for (int i = 0; i <= kScanIntervals; ++i) {
    xs[i] = lo + i * step;
    ds[i] = try_delta(xs[i]);
  }

  // Crossings with delta decreasing through the target.
  std::optional<int> pick;
  for (int i = 0; i < kScanIntervals; ++i) {
    if (!ds[i] || !ds[i + 1]) continue;
    if (*ds[i] >= target && *ds[i + 1] < target) {
      if (type == OptionType::Put) {
        pick = i;
        break;
      }
      pick = i;  // calls keep the right-most
    }
  }

  if (!pick) {
    double closest = std::numeric_limits<double>::quiet_NaN();
    for (const auto& d : ds) {
      if (d && (std::isnan(closest) || std::abs(*d - target) < std::abs(closest - target))) {
        closest = *d;
      }
    }
    throw UnreachableDelta(target, closest, "no strike attains the delta under the smile");
  }

  const double x0 = xs[*pick];
  const double x1 = xs[*pick + 1];
  double root = x0;
  if (*ds[*pick] != target) {
    root = bracket_root([&](double x) { return smile_delta(x) - target; }, x0, x1).x;
  }
  const double k = f * std::exp(root);
  return {k, vol_at_strike(m, k)};
}

IterationTrace fixed_point_vol(const SmileModel& m, double k, double sigma0, double tol,
                               int max_iterations) {
  require(is_delta_implicit(m.family()), "fixed_point_vol: model is not delta-implicit");
  IterationTrace trace{false, 0, sigma0};
  double sigma = sigma0;
  for (int n = 1; n <= max_iterations; ++n) {
    const double next = m.vol_at_delta(m.abscissa_delta(k, sigma));
    trace.iterations = n;
    trace.sigma = next;
    if (!std::isfinite(next) || next <= 0.0) return trace;
    if (std::abs(next - sigma) < tol) {
      trace.converged = true;
      return trace;
    }
    sigma = next;
  }
  return trace;
}

IterationTrace newton_vol(const SmileModel& m, double k, double sigma0, double tol,
                          int max_iterations) {
  require(is_delta_implicit(m.family()), "newton_vol: model is not delta-implicit");
  auto fn = [&](double v) { return m.vol_at_delta(m.abscissa_delta(k, v)) - v; };
  IterationTrace trace{false, 0, sigma0};
  double v = sigma0;
  for (int n = 1; n <= max_iterations; ++n) {
    trace.iterations = n;
    const double h = 1e-7 * std::max(1.0, std::abs(v));
    if (v - h <= 0.0) return trace;
    const double slope = (fn(v + h) - fn(v - h)) / (2.0 * h);
    const double next = v - fn(v) / slope;
    trace.sigma = next;
    if (!std::isfinite(next) || next <= 0.0) return trace;
    if (std::abs(next - v) < tol) {
      trace.converged = true;
      return trace;
    }
    v = next;
  }
  return trace;
}

IterationTrace sigmoid_newton_vol(const SmileModel& m, double k, double tol, int max_iterations) {
  require(is_delta_implicit(m.family()), "sigmoid_newton_vol: model is not delta-implicit");
  auto logistic = [](double y) { return 1.0 / (1.0 + std::exp(-y)); };
  auto g = [&](double y) {
    const double d = logistic(y);
    return m.abscissa_delta(k, m.vol_at_delta(d)) - d;
  };
  const double d0 = std::clamp(m.abscissa_delta(k, m.vol_at_delta(0.5)), 1e-12, 1.0 - 1e-12);
  double y = std::log(d0 / (1.0 - d0));
  IterationTrace trace{false, 0, 0.0};
  for (int n = 1; n <= max_iterations; ++n) {
    trace.iterations = n;
    const double h = 1e-6;
    const double gy = g(y);
    const double slope = (g(y + h) - g(y - h)) / (2.0 * h);
    const double next = y - gy / slope;
    if (!std::isfinite(next)) return trace;
    y = next;
    if (std::abs(gy / slope) < tol * std::max(1.0, std::abs(y))) {
      trace.converged = true;
      break;
    }
  }
  trace.sigma = m.vol_at_delta(logistic(y));
  return trace;
}

}  // namespace fxsmile
