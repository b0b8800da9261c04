#include "fxsmile/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fxsmile/errors.hpp"

namespace fxsmile::cli {

using nlohmann::json;

namespace {

struct WingProbe {
  const char* label;
  OptionType type;
  double delta;
};
constexpr WingProbe kProbes[] = {
    {"10D-Put", OptionType::Put, -0.10},
    {"25D-Put", OptionType::Put, -0.25},
    {"25D-Call", OptionType::Call, 0.25},
    {"10D-Call", OptionType::Call, 0.10},
};

std::string fmt17(double x) {
  if (!std::isfinite(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

bool is_input_error(const Error& e) { return e.kind() == ErrorKind::InvalidInput; }

std::vector<DatasetFile> load_all(const RunConfig& cfg) {
  require(!cfg.data.empty(), "no dataset given (use --data <path>)");
  std::vector<DatasetFile> out;
  for (const auto& path : cfg.data) out.push_back(load_dataset(path));
  return out;
}

std::vector<const DatasetSlice*> selected_slices(const DatasetFile& d, const RunConfig& cfg) {
  std::vector<const DatasetSlice*> out;
  if (cfg.slice) {
    out.push_back(&d.slice(*cfg.slice));
  } else {
    for (const auto& s : d.slices) out.push_back(&s);
  }
  return out;
}

ModelChoice resolve_model(const std::string& name, bool fix_atm_flag) {
  ModelChoice m = model_from_string(name);
  if (fix_atm_flag) {
    require(m.family == SmileFamily::Sabr, "--fix-atm applies to SABR only");
    m.fix_atm = true;
  }
  return m;
}

json read_params(const std::string& spec, const DatasetSlice& slice) {
  require(!spec.empty(), "--no-fit needs --params <json|file|name>");
  for (const auto& np : slice.models) {
    if (np.name == spec) return np.params;
  }
  std::string content = spec;
  if (spec.find('{') == std::string::npos) {
    std::ifstream in(spec);
    if (!in) {
      std::string names;
      for (const auto& np : slice.models) names += (names.empty() ? "" : ", ") + np.name;
      fail(ErrorKind::InvalidInput, "--params '" + spec + "' is neither JSON, a readable file nor a "
                                    "parameter set of the slice" +
                                        (names.empty() ? "" : " (available: " + names + ")"));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::InvalidInput, std::string("--params: malformed JSON: ") + e.what());
  }
}

/// Delta lookups under the smile that fail, as human-readable issues.
std::vector<std::string> probe_wings(const SmileModel& m, DeltaStyle style) {
  std::vector<std::string> issues;
  for (const auto& w : kProbes) {
    try {
      (void)vol_and_strike_for_delta(m, style, w.type, w.delta);
    } catch (const UnreachableDelta& e) {
      issues.push_back(std::string(w.label) + " unreachable: closest attainable delta " +
                       fmt17(e.attainable()));
    } catch (const Error& e) {
      issues.push_back(std::string(w.label) + " failed (" + std::string(to_string(e.kind())) +
                       "): " + e.what());
    }
  }
  return issues;
}

json strikes_json(const StrikeSet& s) {
  return {{"atm", s.k_atm},           {"ms_put25", s.k_ms_put25}, {"ms_call25", s.k_ms_call25},
          {"ms_put10", s.k_ms_put10}, {"ms_call10", s.k_ms_call10}, {"put25", s.k_put25},
          {"call25", s.k_call25},     {"put10", s.k_put10},       {"call10", s.k_call10}};
}

json residuals_json(const ResidualVector& r) {
  json j = json::object();
  json missing = json::array();
  for (auto leg : kLegs) {
    const std::string name(to_string(leg));
    j[name] = r.is_missing(leg) ? json(nullptr) : json(r[leg]);
    if (r.is_missing(leg)) missing.push_back(name);
  }
  j["missing"] = missing;
  return j;
}

json vanillas_json(const std::array<ImpliedVanilla, 5>& v) {
  json a = json::array();
  for (const auto& iv : v) {
    a.push_back({{"label", iv.label},
                 {"strike", number_or_null(iv.strike)},
                 {"vol", number_or_null(iv.sigma)},
                 {"available", iv.available}});
  }
  return a;
}

struct SliceOutcome {
  json doc;
  int code = kOk;
  // Flat fields for CSV.
  bool converged = false;
  int iterations = 0;
  double l2fs = NAN;
  double l2fd = NAN;
  ResidualVector residuals;
  std::string status;
};

SliceOutcome report_outcome(const CalibrationReport& rep, const QuoteSlice& q, bool fitted) {
  SliceOutcome o;
  std::vector<std::string> issues = probe_wings(rep.model, q.convention.delta_style);
  const bool pathology = !issues.empty() || !rep.errors_complete;
  const bool converged = fitted ? rep.converged : true;
  o.status = pathology ? "pathology" : (converged ? "converged" : "not-converged");
  o.code = (pathology || !converged) ? kNumericalFailure : kOk;
  o.converged = converged;
  o.iterations = rep.iterations;
  o.l2fs = rep.l2_fixed_strikes;
  o.l2fd = rep.l2_fixed_deltas;
  o.residuals = rep.residuals;
  json j = json::object();
  j["status"] = o.status;
  j["converged"] = converged;
  j["iterations"] = rep.iterations;
  j["objective"] = number_or_null(rep.objective);
  j["params"] = model_to_json(rep.model);
  j["smile_butterflies"] =
      rep.smile_butterflies ? json(*rep.smile_butterflies) : json(nullptr);
  j["strikes"] = strikes_json(rep.strikes);
  j["implied_vanillas"] = vanillas_json(rep.implied_vanillas);
  j["residuals"] = residuals_json(rep.residuals);
  j["l2_fixed_strikes"] = number_or_null(rep.l2_fixed_strikes);
  j["l2_fixed_deltas"] = number_or_null(rep.l2_fixed_deltas);
  j["errors_complete"] = rep.errors_complete;
  j["issues"] = issues;
  o.doc = std::move(j);
  return o;
}

/// Report for fixed parameters on a slice without quotes: only the delta
/// lookups can be checked.
SliceOutcome probe_outcome(const SmileModel& m, const Convention& conv) {
  SliceOutcome o;
  std::vector<std::string> issues = probe_wings(m, conv.delta_style);
  json vanillas = json::array();
  for (const auto& w : kProbes) {
    json v = {{"label", w.label}, {"strike", nullptr}, {"vol", nullptr}, {"available", false}};
    try {
      const auto sv = vol_and_strike_for_delta(m, conv.delta_style, w.type, w.delta);
      v = {{"label", w.label}, {"strike", sv.strike}, {"vol", sv.sigma}, {"available", true}};
    } catch (const Error&) {
    }
    vanillas.push_back(v);
  }
  o.status = issues.empty() ? "converged" : "pathology";
  o.code = issues.empty() ? kOk : kNumericalFailure;
  o.converged = true;
  o.doc = {{"status", o.status},
           {"params", model_to_json(m)},
           {"implied_vanillas", vanillas},
           {"issues", issues}};
  return o;
}

void write_output(std::ostream& out, const std::string& text) { out << text; }

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Nested2: return "nested2";
    case Method::Nested2Merged: return "nested2-merged";
    case Method::Nested5: return "nested5";
    case Method::Nested5Merged: return "nested5-merged";
    case Method::Direct: return "direct";
    case Method::ViaSpline: return "via-spline";
    case Method::ViaSplineDelta: return "via-spline-delta";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (auto m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorKind::InvalidInput,
       "unknown method '" + std::string(name) +
           "' (valid: nested2, nested2-merged, nested5, nested5-merged, direct, via-spline, "
           "via-spline-delta)");
}

ModelChoice model_from_string(std::string_view name) {
  if (name == "atm-sabr") return {SmileFamily::Sabr, true};
  for (auto f : {SmileFamily::Sabr, SmileFamily::Xssvi, SmileFamily::SplineLogM,
                 SmileFamily::SplineDelta, SmileFamily::PolyDelta}) {
    if (fxsmile::to_string(f) == name) return {f, false};
  }
  fail(ErrorKind::InvalidInput,
       "unknown model '" + std::string(name) +
           "' (valid: sabr, atm-sabr, xssvi, spline-logm, spline-delta, poly-delta)");
}

std::string model_name(const ModelChoice& m) {
  if (m.family == SmileFamily::Sabr && m.fix_atm) return "atm-sabr";
  return std::string(fxsmile::to_string(m.family));
}

Grid grid_from_string(const std::string& spec) {
  Grid g;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%lf,%lf,%d%c", &g.lo, &g.hi, &g.n, &tail) != 3) {
    fail(ErrorKind::InvalidInput, "--grid must be lo,hi,n (K/F bounds and point count)");
  }
  require(g.lo > 0.0 && g.hi > g.lo, "--grid needs 0 < lo < hi");
  require(g.n >= 2, "--grid needs at least two points");
  return g;
}

int max_iterations_from_env(int fallback) {
  const char* v = std::getenv("FXSMILE_MAX_ITER");
  if (v == nullptr || *v == '\0') return fallback;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n <= 0 || n > 1000000) {
    fail(ErrorKind::InvalidInput, "FXSMILE_MAX_ITER must be a positive integer");
  }
  return static_cast<int>(n);
}

CalibrationReport run_method(const ModelChoice& model, Method method, const QuoteSlice& q,
                             const MarketSlice& mkt, int max_iterations) {
  require(!model.fix_atm || model.family == SmileFamily::Sabr, "ATM pinning applies to SABR only");
  CalibrationOptions o;
  o.fix_atm = model.fix_atm;
  o.max_iterations = max_iterations;
  auto run = [&]() {
    switch (method) {
      case Method::Nested2:
      case Method::Nested2Merged:
      case Method::Nested5:
      case Method::Nested5Merged:
        o.dim = (method == Method::Nested2 || method == Method::Nested2Merged) ? 2 : 5;
        o.mode = (method == Method::Nested2Merged || method == Method::Nested5Merged)
                     ? StrikeMode::MergedDeltaLookup
                     : StrikeMode::StrikesUpfront;
        return calibrate_nested(model.family, q, mkt, o);
      case Method::Direct:
        o.mode = StrikeMode::MergedDeltaLookup;
        return calibrate_direct(model.family, q, mkt, o);
      case Method::ViaSpline:
        return calibrate_via_exact(model.family, SplineKind::LogMoneyness, q, mkt, o);
      case Method::ViaSplineDelta:
        break;
    }
    return calibrate_via_exact(model.family, SplineKind::ForwardDelta, q, mkt, o);
  };
  CalibrationReport rep = run();
  rep.method = std::string(to_string(method));
  return rep;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<DatasetFile> files;
  ModelChoice model;
  Method method = Method::Nested5;
  try {
    files = load_all(cfg);
    require(cfg.models.size() <= 1, "calibrate takes a single --model");
    require(cfg.methods.size() <= 1, "calibrate takes a single --method");
    model = resolve_model(cfg.models.empty() ? "sabr" : cfg.models.front(), cfg.fix_atm);
    if (!cfg.methods.empty()) method = method_from_string(cfg.methods.front());
    for (const auto& d : files) (void)selected_slices(d, cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  int code = kOk;
  json results = json::array();
  std::ostringstream csv;
  csv << "dataset,slice,model,method,status,iterations,l2_fixed_strikes,l2_fixed_deltas,"
         "ms25,ms10,rr25,rr10,atm\n";
  for (const auto& d : files) {
    for (const DatasetSlice* s : selected_slices(d, cfg)) {
      SliceOutcome o;
      try {
        const MarketSlice mkt = s->market_slice();
        if (cfg.no_fit) {
          const SmileModel m = model_from_json(read_params(cfg.params, *s), mkt);
          if (s->quotes) {
            const QuoteSlice q = s->quote_slice();
            const StrikeSet strikes = upfront_strikes(q, mkt, q.bf25, q.bf10);
            auto rep = make_report(m, q, mkt, strikes, StrikeMode::StrikesUpfront);
            rep.objective = rep.residuals.l2() * rep.residuals.l2();
            o = report_outcome(rep, q, false);
          } else {
            o = probe_outcome(m, s->resolved_convention());
          }
          o.doc["method"] = "no-fit";
        } else {
          const QuoteSlice q = s->quote_slice();
          o = report_outcome(run_method(model, method, q, mkt, cfg.max_iterations), q, true);
          o.doc["method"] = std::string(to_string(method));
        }
        o.doc["model"] = cfg.no_fit ? std::string(o.doc["params"]["family"]) : model_name(model);
      } catch (const Error& e) {
        if (is_input_error(e)) {
          err << "error: " << e.what() << "\n";
          return kInputError;
        }
        o.status = "failed";
        o.code = kNumericalFailure;
        o.doc = {{"status", o.status},
                 {"model", model_name(model)},
                 {"method", cfg.no_fit ? "no-fit" : std::string(to_string(method))},
                 {"error", {{"kind", std::string(fxsmile::to_string(e.kind()))}, {"message", e.what()}}}};
      }
      o.doc["dataset"] = d.name;
      o.doc["slice"] = s->label;
      code = std::max(code, o.code);

      csv << csv_field(d.name) << ',' << csv_field(s->label) << ','
          << csv_field(o.doc.value("model", std::string{})) << ','
          << csv_field(o.doc.value("method", std::string{})) << ',' << o.status << ','
          << o.iterations << ',' << fmt17(o.l2fs) << ',' << fmt17(o.l2fd);
      for (auto leg : kLegs) {
        csv << ',' << (o.residuals.is_missing(leg) ? std::string{} : fmt17(o.residuals[leg]));
      }
      csv << '\n';
      results.push_back(std::move(o.doc));
    }
  }
  if (cfg.format == Format::Csv) {
    write_output(out, csv.str());
  } else {
    write_output(out, dump_json(json{{"results", results}}) + "\n");
  }
  return code;
}

int cmd_sample(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::optional<SmileModel> model;
  int code = kOk;
  try {
    const auto files = load_all(cfg);
    require(files.size() == 1, "sample takes a single --data");
    const DatasetFile& d = files.front();
    require(cfg.slice.has_value() || d.slices.size() == 1,
            "dataset has several slices; choose one with --slice");
    const DatasetSlice& s = cfg.slice ? d.slice(*cfg.slice) : d.slices.front();
    const MarketSlice mkt = s.market_slice();
    if (cfg.no_fit) {
      model = model_from_json(read_params(cfg.params, s), mkt);
    } else {
      require(cfg.models.size() <= 1 && cfg.methods.size() <= 1,
              "sample takes a single --model and --method");
      const ModelChoice choice =
          resolve_model(cfg.models.empty() ? "sabr" : cfg.models.front(), cfg.fix_atm);
      const Method method = cfg.methods.empty() ? Method::Nested5 : method_from_string(cfg.methods.front());
      const QuoteSlice q = s.quote_slice();
      try {
        const auto rep = run_method(choice, method, q, mkt, cfg.max_iterations);
        if (!rep.converged) code = kNumericalFailure;
        model = rep.model;
      } catch (const Error& e) {
        if (is_input_error(e)) throw;
        err << "error: calibration failed (" << fxsmile::to_string(e.kind()) << "): " << e.what()
            << "\n";
        return kNumericalFailure;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  const Grid g = cfg.grid.value_or(Grid{});
  const double f = model->market().forward();
  std::ostringstream csv;
  json rows = json::array();
  csv << "strike,log_moneyness,vol,call_delta_forward_pips\n";
  for (int i = 0; i < g.n; ++i) {
    const double ratio = g.lo + (g.hi - g.lo) * static_cast<double>(i) / (g.n - 1);
    const double k = f * ratio;
    double vol = NAN;
    double dlt = NAN;
    try {
      vol = vol_at_strike(*model, k);
      dlt = delta(DeltaStyle::ForwardPips, {OptionType::Call, k}, model->market(), vol);
    } catch (const Error&) {
    }
    csv << fmt17(k) << ',' << fmt17(std::log(ratio)) << ',' << fmt17(vol) << ',' << fmt17(dlt)
        << '\n';
    rows.push_back({{"strike", k},
                    {"log_moneyness", std::log(ratio)},
                    {"vol", number_or_null(vol)},
                    {"call_delta_forward_pips", number_or_null(dlt)}});
  }
  if (cfg.format == Format::Json) {
    write_output(out, dump_json(json{{"params", model_to_json(*model)}, {"rows", rows}}) + "\n");
  } else {
    write_output(out, csv.str());
  }
  return code;
}

int cmd_error_table(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<DatasetFile> files;
  std::vector<ModelChoice> models;
  std::vector<Method> methods;
  try {
    files = load_all(cfg);
    for (const auto& name : cfg.models.empty() ? std::vector<std::string>{"atm-sabr", "xssvi"}
                                               : cfg.models) {
      models.push_back(resolve_model(name, cfg.fix_atm));
    }
    if (cfg.methods.empty()) {
      methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
    } else {
      for (const auto& name : cfg.methods) methods.push_back(method_from_string(name));
    }
    for (const auto& d : files) {
      for (const DatasetSlice* s : selected_slices(d, cfg)) (void)s->quote_slice();
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  int code = kOk;
  std::ostringstream csv;
  json rows = json::array();
  csv << "dataset,slice,model,method,l2_fixed_strikes,l2_fixed_deltas\n";
  for (const auto& d : files) {
    for (const DatasetSlice* s : selected_slices(d, cfg)) {
      const QuoteSlice q = s->quote_slice();
      const MarketSlice mkt = s->market_slice();
      for (const auto& model : models) {
        for (Method method : methods) {
          const bool spline_method = method == Method::ViaSpline || method == Method::ViaSplineDelta;
          std::string fs;
          std::string fd;
          try {
            const auto rep = run_method(model, method, q, mkt, cfg.max_iterations);
            const char* mark = rep.errors_complete ? "" : "*";
            fs = fmt17(rep.l2_fixed_strikes) + mark;
            fd = spline_method ? std::string{} : fmt17(rep.l2_fixed_deltas) + mark;
            if (!rep.converged || !rep.errors_complete) code = kNumericalFailure;
          } catch (const Error& e) {
            fs = "ERR(" + std::string(fxsmile::to_string(e.kind())) + ")";
            fd = spline_method ? std::string{} : fs;
            code = kNumericalFailure;
          }
          csv << csv_field(d.name) << ',' << csv_field(s->label) << ',' << model_name(model) << ','
              << to_string(method) << ',' << fs << ',' << fd << '\n';
          rows.push_back({{"dataset", d.name},
                          {"slice", s->label},
                          {"model", model_name(model)},
                          {"method", std::string(to_string(method))},
                          {"l2_fixed_strikes", fs},
                          {"l2_fixed_deltas", fd}});
        }
      }
    }
  }
  if (cfg.format == Format::Json) {
    write_output(out, dump_json(json{{"rows", rows}}) + "\n");
  } else {
    write_output(out, csv.str());
  }
  return code;
}

}  // namespace fxsmile::cli
