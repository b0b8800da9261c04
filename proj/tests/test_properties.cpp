#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "fxsmile/calibration.hpp"
#include "fxsmile/cli.hpp"
#include "fxsmile/conventions.hpp"
#include "fxsmile/errors.hpp"
#include "test_support.hpp"

using namespace fxsmile;
using doctest::Approx;

namespace {

constexpr DeltaStyle kQuotedStyles[] = {DeltaStyle::ForwardPips, DeltaStyle::ForwardPercent,
                                        DeltaStyle::SpotPips, DeltaStyle::SpotPercent};

struct Draw {
  std::mt19937_64 rng{20221129};
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  MarketSlice market() {
    const double t = uniform(0.05, 2.0);
    return MarketSlice::from_rates(uniform(0.5, 150.0), uniform(-0.01, 0.12), uniform(-0.01, 0.08), t);
  }
};

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("put-call parity") {
  Draw draw;
  for (int i = 0; i < 2000; ++i) {
    const auto mkt = draw.market();
    const double k = mkt.forward() * std::exp(draw.uniform(-0.8, 0.8));
    const double sigma = draw.uniform(0.01, 1.0);
    const double c = vanilla_price({OptionType::Call, k}, mkt, sigma);
    const double p = vanilla_price({OptionType::Put, k}, mkt, sigma);
    CHECK(c - p == Approx(mkt.df_dom() * (mkt.forward() - k)).epsilon(1e-12).scale(mkt.forward()));
    const double dc = delta(DeltaStyle::ForwardPips, {OptionType::Call, k}, mkt, sigma);
    const double dp = delta(DeltaStyle::ForwardPips, {OptionType::Put, k}, mkt, sigma);
    CHECK(dc - dp == Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("delta to strike round trips") {
  Draw draw;
  for (int i = 0; i < 2000; ++i) {
    const auto mkt = draw.market();
    const double sigma = draw.uniform(0.02, 0.6);
    const auto style = kQuotedStyles[draw.index(4)];
    const auto type = draw.index(2) == 0 ? OptionType::Call : OptionType::Put;
    const double target = sign(type) * draw.uniform(0.05, 0.45);
    double k = 0.0;
    try {
      k = strike_for_delta_flat_vol(style, type, target, mkt, sigma);
    } catch (const UnreachableDelta& e) {
      CHECK(is_percent(style));
      CHECK(type == OptionType::Call);
      CHECK(e.attainable() < target);
      continue;
    }
    CHECK(delta(style, {type, k}, mkt, sigma) == Approx(target).epsilon(1e-10));
    if (is_percent(style) && type == OptionType::Call) {
      CHECK(k >= call_delta_max(style, mkt, sigma).k_star);
    }
  }
}

TEST_CASE("ATM identities") {
  Draw draw;
  for (int i = 0; i < 1000; ++i) {
    const auto mkt = draw.market();
    const double sigma = draw.uniform(0.02, 0.8);
    const auto style = kQuotedStyles[draw.index(4)];
    const Convention conv{style, AtmStyle::DeltaNeutralStraddle};
    const double k = atm_strike(conv, mkt, sigma);
    const double c = delta(style, {OptionType::Call, k}, mkt, sigma);
    const double p = delta(style, {OptionType::Put, k}, mkt, sigma);
    CHECK(c + p == Approx(0.0).scale(1.0).epsilon(1e-13));
    const Convention fwd{style, AtmStyle::AtmForward};
    CHECK(atm_strike(fwd, mkt, sigma) == mkt.forward());
  }
}

TEST_CASE("risk reversal identity") {
  Draw draw;
  for (int i = 0; i < 1000; ++i) {
    QuoteSlice q;
    q.sigma_atm = draw.uniform(0.03, 0.4);
    q.rr25 = q.sigma_atm * draw.uniform(-0.5, 0.5);
    q.rr10 = q.sigma_atm * draw.uniform(-0.8, 0.8);
    q.bf25 = draw.uniform(0.0, 0.03);
    q.bf10 = draw.uniform(0.0, 0.08);
    const double s25 = draw.uniform(-0.1, 1.0) * q.bf25;
    const double s10 = draw.uniform(0.0, 1.0) * q.bf10;
    const auto v = vanilla_vols_from_quotes(q, s25, s10);
    CHECK(v.call25 - v.put25 == Approx(q.rr25).scale(1.0).epsilon(1e-15));
    CHECK(v.call10 - v.put10 == Approx(q.rr10).scale(1.0).epsilon(1e-15));
    CHECK(0.5 * (v.call25 + v.put25) - v.atm == Approx(s25).scale(1.0).epsilon(1e-15));
  }
}

TEST_CASE("exact interpolation on randomized feasible quotes") {
  Draw draw;
  const SmileFamily families[] = {SmileFamily::SplineLogM, SmileFamily::SplineDelta,
                                  SmileFamily::PolyDelta};
  int solved = 0;
  for (int i = 0; i < 500; ++i) {
    const double t = draw.uniform(0.05, 2.0);
    const auto mkt = MarketSlice::from_rates(draw.uniform(0.5, 150.0), draw.uniform(0.0, 0.1),
                                             draw.uniform(0.0, 0.05), t);
    QuoteSlice q;
    q.sigma_atm = draw.uniform(0.04, 0.3);
    q.bf25 = q.sigma_atm * draw.uniform(0.01, 0.08);
    q.bf10 = q.bf25 * draw.uniform(2.5, 4.0);
    q.rr25 = q.sigma_atm * draw.uniform(-0.25, 0.25);
    q.rr10 = q.rr25 * draw.uniform(1.6, 2.0);
    q.convention = {kQuotedStyles[draw.index(4)], AtmStyle::DeltaNeutralStraddle};
    q.maturity = t;
    const auto family = families[i % 3];
    CAPTURE(i);
    CAPTURE(to_string(family));
    const auto rep = calibrate_nested(family, q, mkt);
    CHECK(rep.converged);
    CHECK(rep.residuals.linf() < 1e-6);
    if (rep.residuals.linf() < 1e-6) ++solved;
  }
  CHECK(solved == 500);
}

TEST_CASE("dimension five never loses to dimension two") {
  const test::Case cases[] = {test::eurhkd(), test::eurtry("1y"), test::eurtry("2y")};
  const cli::ModelChoice models[] = {{SmileFamily::Sabr, true}, {SmileFamily::Sabr, false},
                                     {SmileFamily::Xssvi, false}};
  for (const auto& c : cases) {
    for (const auto& m : models) {
      for (auto [two, five] : {std::pair{cli::Method::Nested2, cli::Method::Nested5},
                               std::pair{cli::Method::Nested2Merged, cli::Method::Nested5Merged}}) {
        const auto r2 = cli::run_method(m, two, c.quotes, c.market);
        const auto r5 = cli::run_method(m, five, c.quotes, c.market);
        CAPTURE(cli::model_name(m));
        CAPTURE(cli::to_string(five));
        CHECK(r5.l2_fixed_strikes <= r2.l2_fixed_strikes + 1e-9);
        CHECK(r5.l2_fixed_deltas <= r2.l2_fixed_deltas + 1e-9);
      }
    }
  }
}

TEST_CASE("determinism") {
  const auto c = test::eurtry("2y");
  for (auto family : {SmileFamily::Sabr, SmileFamily::Xssvi, SmileFamily::PolyDelta}) {
    CalibrationOptions o;
    o.mode = StrikeMode::MergedDeltaLookup;
    const auto a = calibrate_nested(family, c.quotes, c.market, o);
    const auto b = calibrate_nested(family, c.quotes, c.market, o);
    for (std::size_t i = 0; i < 5; ++i) CHECK(same_bits(a.residuals.values[i], b.residuals.values[i]));
    CHECK(same_bits(a.objective, b.objective));
    CHECK(same_bits(a.l2_fixed_strikes, b.l2_fixed_strikes));
    CHECK(a.iterations == b.iterations);
  }

  cli::RunConfig cfg;
  cfg.data = {test::data_path("eurhkd_147d.json")};
  cfg.models = {"xssvi"};
  cfg.methods = {"direct"};
  std::ostringstream first, second, err;
  CHECK(cli::cmd_calibrate(cfg, first, err) == cli::kOk);
  CHECK(cli::cmd_calibrate(cfg, second, err) == cli::kOk);
  CHECK(first.str() == second.str());
}
