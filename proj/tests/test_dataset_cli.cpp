#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fxsmile/cli.hpp"
#include "fxsmile/dataset.hpp"
#include "fxsmile/errors.hpp"
#include "test_support.hpp"

using namespace fxsmile;
using doctest::Approx;
using nlohmann::json;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_dataset(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidInput);
    return e.what();
  }
  FAIL("expected a dataset error");
  return {};
}

std::string slice_json(const std::string& market, const std::string& extra = "") {
  return R"({"schema_version": 1, "name": "t", "slices": [{"label": "a", "maturity": 0.5,
    "convention": {"delta": "forward-pips", "atm": "dns"}, "market": )" +
         market + extra + "}]}";
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(s);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(cli::RunConfig cfg, int (*cmd)(const cli::RunConfig&, std::ostream&, std::ostream&)) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cmd(cfg, out, err);
  return {code, out.str(), err.str()};
}

int exit_code(const std::string& args) {
  const std::string cmd = std::string(FXSMILE_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("dataset: market forms") {
  const auto rates = parse_dataset(slice_json(R"({"spot": 1.2, "r_dom": 0.03, "r_for": 0.01})"));
  const auto& m = rates.slices[0].market;
  CHECK(m.forward == Approx(1.2 * std::exp(0.02 * 0.5)).epsilon(1e-15));
  CHECK(m.df_dom == Approx(std::exp(-0.015)).epsilon(1e-15));

  const auto fwd = parse_dataset(slice_json(R"({"forward": 39.512, "df": 0.96175})"));
  CHECK(fwd.slices[0].market.spot == 39.512);
  CHECK(fwd.slices[0].market.df_dom == 0.96175);
  CHECK(fwd.slices[0].market.df_for == 0.96175);

  const auto hkd = load_dataset(test::data_path("eurhkd_147d.json"));
  const auto mkt = hkd.slice("147d").market_slice();
  CHECK(mkt.forward() == 8.500504);
  CHECK(mkt.t() == Approx(147.0 / 365.0).epsilon(1e-15));
  CHECK(hkd.slice("0").label == "147d");
  CHECK(hkd.slice("147d").resolved_convention().delta_style == DeltaStyle::ForwardPips);

  const auto q = hkd.slice("147d").quote_slice();
  CHECK(q.sigma_atm == Approx(0.06575).epsilon(1e-15));
  CHECK(q.rr25 == Approx(-0.00647).epsilon(1e-15));
}

TEST_CASE("dataset: errors name the field") {
  CHECK(error_of(slice_json(R"({"spot": 1.2})")).find("$.slices[0].market") != std::string::npos);
  CHECK(error_of(slice_json(R"({"forward": 1.0, "df": 1.0})",
                            R"(, "quotes": {"atm": 10, "rr25": 1, "bf25": 0.2, "rr10": 2})"))
            .find("$.slices[0].quotes.bf10") != std::string::npos);
  CHECK(error_of(slice_json(R"({"forward": -1.0, "df": 1.0})")).find("market") != std::string::npos);
  CHECK(error_of("{\"schema_version\": 1,\n \"slices\": [ ,]}").find("line 2") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 2, "name": "t", "slices": []})").find("schema_version") !=
        std::string::npos);
  CHECK(error_of(slice_json(R"({"forward": 1.0, "df": 1.0})",
                            R"(, "quotes": {"atm": 5, "rr25": 30, "bf25": 0.2, "rr10": 2, "bf10": 1})"))
            .find("infeasible") != std::string::npos);
  CHECK(error_of(slice_json(R"({"forward": 1.0, "df": 1.0})",
                            R"(, "models": [{"name": "x", "params": {"family": "sabr", "alpha": -1, "rho": 0, "nu": 1}}])"))
            .find("$.slices[0].models[0].params") != std::string::npos);
  CHECK_THROWS_AS(load_dataset(test::data_path("does-not-exist.json")), Error);
  CHECK_THROWS_AS(load_dataset(test::data_path("eurtry.json")).slice("3y"), Error);
}

TEST_CASE("dataset: canonical round trip") {
  for (const char* file : {"eurhkd_147d.json", "eurtry.json", "eurtry_manufactured.json",
                           "sabr_pathological.json"}) {
    const auto d = load_dataset(test::data_path(file));
    const auto text = serialize_dataset(d);
    const auto again = parse_dataset(text);
    CHECK(again == d);
    CHECK(serialize_dataset(again) == text);
  }
}

TEST_CASE("dataset: model parameters") {
  const auto mkt = test::eurtry("2y").market;
  const std::vector<SmileModel> models{
      SmileModel::sabr({0.3, 1.0, 0.4, 0.9}, mkt),
      SmileModel::xssvi({0.2, 0.7, 1.5}, mkt),
      SmileModel::poly_delta({{-1.2, 0.1, 0.3, -0.2, 0.05}}, mkt),
      build_spline(SplineKind::LogMoneyness, {{-0.5, -0.2, 0.0, 0.3, 0.6}, {0.25, 0.28, 0.31, 0.4, 0.5}}, mkt),
      build_spline(SplineKind::ForwardDelta, {{0.1, 0.3, 0.5, 0.7, 0.9}, {0.5, 0.4, 0.31, 0.28, 0.25}}, mkt),
  };
  for (const auto& m : models) {
    const json j = model_to_json(m);
    const auto back = model_from_json(j, mkt);
    CHECK(back.family() == m.family());
    CHECK(model_to_json(back) == j);
    for (double k : {20.0, 30.0, 45.0}) CHECK(vol_at_strike(back, k) == vol_at_strike(m, k));
  }
  CHECK_THROWS_AS(model_from_json(json{{"family", "heston"}}, mkt), Error);
  CHECK_THROWS_AS(smile_family_from_string("svi"), Error);
}

TEST_CASE("dump_json keeps full precision") {
  const json j = {{"x", 0.1}, {"y", std::nan("")}, {"z", {1, 2}}};
  const auto text = dump_json(j, 0);
  CHECK(text == R"({"x":0.10000000000000001,"y":null,"z":[1,2]})");
  CHECK(json::parse(text)["x"].get<double>() == 0.1);
}

TEST_CASE("cli: calibrate") {
  cli::RunConfig cfg;
  cfg.data = {test::data_path("eurhkd_147d.json")};
  cfg.models = {"sabr"};
  cfg.methods = {"nested5"};
  const auto r = run(cfg, cli::cmd_calibrate);
  CHECK(r.code == cli::kOk);
  const auto j = json::parse(r.out);
  const auto& res = j["results"][0];
  for (const char* key : {"l2_fixed_strikes", "l2_fixed_deltas", "residuals", "params", "strikes",
                          "implied_vanillas", "iterations", "converged", "status", "objective"}) {
    CHECK(res.contains(key));
  }
  CHECK(res["status"] == "converged");
  CHECK(res["params"]["family"] == "sabr");
  CHECK(res["implied_vanillas"].size() == 5);

  cfg.format = cli::Format::Csv;
  const auto csv = run(cfg, cli::cmd_calibrate);
  CHECK(csv.code == cli::kOk);
  CHECK(lines(csv.out).size() == 2);
  CHECK(lines(csv.out)[0].rfind("dataset,slice,model,method,status", 0) == 0);
}

TEST_CASE("cli: input errors") {
  cli::RunConfig cfg;
  cfg.data = {test::data_path("eurhkd_147d.json")};
  cfg.models = {"heston"};
  const auto r = run(cfg, cli::cmd_calibrate);
  CHECK(r.code == cli::kInputError);
  for (const char* name : {"sabr", "atm-sabr", "xssvi", "spline-logm", "spline-delta", "poly-delta"}) {
    CHECK(r.err.find(name) != std::string::npos);
  }

  cli::RunConfig missing;
  missing.data = {test::data_path("nope.json")};
  CHECK(run(missing, cli::cmd_calibrate).code == cli::kInputError);

  cli::RunConfig no_params;
  no_params.data = {test::data_path("sabr_pathological.json")};
  no_params.no_fit = true;
  CHECK(run(no_params, cli::cmd_calibrate).code == cli::kInputError);

  CHECK_THROWS_AS(cli::grid_from_string("1,0.5,10"), Error);
  CHECK_THROWS_AS(cli::grid_from_string("0.5,2"), Error);
  CHECK_THROWS_AS(cli::method_from_string("nested3"), Error);
}

TEST_CASE("cli: fixed pathological parameters") {
  cli::RunConfig cfg;
  cfg.data = {test::data_path("sabr_pathological.json")};
  cfg.models = {"sabr"};
  cfg.no_fit = true;
  cfg.params = "Set I";
  const auto r = run(cfg, cli::cmd_calibrate);
  CHECK(r.code == cli::kNumericalFailure);
  const auto res = json::parse(r.out)["results"][0];
  CHECK(res["status"] == "pathology");
  CHECK(res["issues"].size() == 2);
  CHECK(res["issues"][0].get<std::string>().find("unreachable") != std::string::npos);

  cfg.params = R"({"family": "sabr", "alpha": 0.375, "beta": 1, "rho": 0.66, "nu": 1.0})";
  CHECK(run(cfg, cli::cmd_calibrate).code == cli::kNumericalFailure);

  cli::RunConfig fine = cfg;
  fine.params = R"({"family": "sabr", "alpha": 0.3, "beta": 1, "rho": 0.0, "nu": 0.3})";
  CHECK(run(fine, cli::cmd_calibrate).code == cli::kOk);
}

TEST_CASE("cli: sample") {
  cli::RunConfig cfg;
  cfg.data = {test::data_path("sabr_pathological.json")};
  cfg.models = {"sabr"};
  cfg.no_fit = true;
  cfg.params = R"({"family": "sabr", "alpha": 0.2, "beta": 1, "rho": 0, "nu": 0})";
  cfg.grid = cli::Grid{0.8, 1.25, 101};
  cfg.format = cli::Format::Csv;
  const auto flat = run(cfg, cli::cmd_sample);
  CHECK(flat.code == cli::kOk);
  const auto rows = lines(flat.out);
  REQUIRE(rows.size() == 102);
  CHECK(rows[0] == "strike,log_moneyness,vol,call_delta_forward_pips");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(split(rows[i])[2]) == Approx(0.2).epsilon(1e-14));

  cfg.params = "Set I";
  cfg.grid = cli::Grid{0.5, 20.0, 400};
  const auto patho = run(cfg, cli::cmd_sample);
  CHECK(patho.code == cli::kOk);
  const auto prows = lines(patho.out);
  int sign_changes = 0;
  double prev_d = std::stod(split(prows[1])[3]);
  double prev_step = 0.0;
  for (std::size_t i = 2; i < prows.size(); ++i) {
    const double d = std::stod(split(prows[i])[3]);
    const double step = d - prev_d;
    if (step * prev_step < 0.0) ++sign_changes;
    prev_step = step;
    prev_d = d;
  }
  CHECK(sign_changes >= 1);

  cli::RunConfig fit;
  fit.data = {test::data_path("eurtry.json")};
  fit.models = {"xssvi"};
  fit.format = cli::Format::Csv;
  CHECK(run(fit, cli::cmd_sample).code == cli::kInputError);
  fit.slice = "2y";
  const auto fitted = run(fit, cli::cmd_sample);
  CHECK(fitted.code == cli::kOk);
  CHECK(lines(fitted.out).size() == 102);
}

TEST_CASE("cli: error table") {
  cli::RunConfig cfg;
  cfg.data = {test::data_path("eurhkd_147d.json"), test::data_path("eurtry.json")};
  cfg.format = cli::Format::Csv;
  const auto r = run(cfg, cli::cmd_error_table);
  CHECK(r.code == cli::kOk);
  const auto rows = lines(r.out);
  CHECK(rows[0] == "dataset,slice,model,method,l2_fixed_strikes,l2_fixed_deltas");
  CHECK(rows.size() == 1 + 3 * 2 * std::size(cli::kAllMethods));
  std::set<std::string> models;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cells = split(rows[i]);
    REQUIRE(cells.size() == 6);
    models.insert(cells[2]);
    const bool via = cells[3].rfind("via-", 0) == 0;
    CHECK(cells[5].empty() == via);
    CHECK(std::stod(cells[4]) > 1e-6);
    if (cells[1] == "2y" && cells[2] == "atm-sabr" && cells[3] == "nested5-merged") {
      CHECK(std::stod(cells[4]) == Approx(0.00665).epsilon(0.001 / 0.00665));
      CHECK(std::stod(cells[5]) == Approx(0.00663).epsilon(0.001 / 0.00663));
    }
  }
  CHECK(models == std::set<std::string>{"atm-sabr", "xssvi"});

  cli::RunConfig spline;
  spline.data = {test::data_path("eurhkd_147d.json")};
  spline.models = {"spline-logm"};
  spline.methods = {"via-spline", "via-spline-delta"};
  spline.format = cli::Format::Csv;
  const auto s = lines(run(spline, cli::cmd_error_table).out);
  CHECK(std::stod(split(s[1])[4]) < 1e-6);
  CHECK(std::stod(split(s[2])[4]) > 1e-6);
}

TEST_CASE("cli: process exit codes") {
  const std::string hkd = test::data_path("eurhkd_147d.json");
  const std::string patho = test::data_path("sabr_pathological.json");
  CHECK(exit_code("calibrate --data " + hkd + " --model sabr --method nested5") == 0);
  CHECK(exit_code("calibrate --data " + hkd + " --model heston") == 1);
  CHECK(exit_code("calibrate --data " + patho + " --no-fit --params 'Set I' --model sabr") == 2);
  CHECK(exit_code("frobnicate") != 0);
  CHECK(exit_code("sample --data " + hkd + " --grid 0.9,1.1,11") == 0);
  const int status = std::system(("FXSMILE_MAX_ITER=abc " + std::string(FXSMILE_EXE) +
                                  " calibrate --data " + hkd + " >/dev/null 2>&1")
                                     .c_str());
  CHECK(WEXITSTATUS(status) == 1);
}
