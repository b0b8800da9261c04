#include "fxsmile/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fxsmile/errors.hpp"

namespace fxsmile {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  fail(ErrorKind::InvalidInput, "dataset: field '" + path + "' " + what);
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) bad_field(path, "must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) bad_field(path + "." + key, "is missing");
  return *it;
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_number()) bad_field(path + "." + key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad_field(path + "." + key, "must be finite");
  return x;
}

std::string text(const json& obj, const std::string& key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_string()) bad_field(path + "." + key, "must be a string");
  return v.get<std::string>();
}

bool flag(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) return false;
  if (!it->is_boolean()) bad_field(path + "." + key, "must be true or false");
  return it->get<bool>();
}

template <std::size_t N>
std::array<double, N> numbers(const json& obj, const std::string& key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_array() || v.size() != N) {
    bad_field(path + "." + key, "must be an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) bad_field(path + "." + key, "must contain numbers only");
    out[i] = v[i].get<double>();
  }
  return out;
}

bool has(const json& obj, const char* key) { return obj.contains(key); }

MarketSlice parse_market(const json& m, double t, const std::string& path) {
  if (!m.is_object()) bad_field(path, "must be an object");
  auto num = [&](const char* k) { return number(m, k, path); };
  try {
    if (has(m, "r_dom") || has(m, "r_for")) {
      return MarketSlice::from_rates(num("spot"), num("r_dom"), num("r_for"), t);
    }
    if (has(m, "df") && !has(m, "spot")) return MarketSlice::forward_only(num("forward"), num("df"), t);
    if (has(m, "forward") && has(m, "df_dom")) {
      return MarketSlice::make(num("spot"), num("forward"), num("df_dom"), num("df_for"), t);
    }
    if (has(m, "forward")) return MarketSlice::from_forward(num("forward"), num("spot"), num("df_for"), t);
    return MarketSlice::from_spot(num("spot"), num("df_dom"), num("df_for"), t);
  } catch (const Error& e) {
    if (std::string(e.what()).rfind("dataset:", 0) == 0) throw;
    bad_field(path, std::string("is inconsistent: ") + e.what());
  }
}

DatasetSlice parse_slice(const json& s, const std::string& path) {
  if (!s.is_object()) bad_field(path, "must be an object");
  DatasetSlice out;
  out.label = s.contains("label") ? text(s, "label", path) : std::string{};
  out.maturity = number(s, "maturity", path);
  if (!(out.maturity > 0.0)) bad_field(path + ".maturity", "must be positive");

  if (s.contains("pair")) {
    const json& p = s["pair"];
    const std::string pp = path + ".pair";
    PairDescriptor d;
    d.base_ccy = text(p, "base", pp);
    d.quote_ccy = text(p, "quote", pp);
    d.premium_ccy = text(p, "premium", pp);
    d.maturity = out.maturity;
    d.latam_atm_forward = flag(p, "latam_atm_forward", pp);
    d.both_oecd = flag(p, "both_oecd", pp);
    if (d.premium_ccy != d.base_ccy && d.premium_ccy != d.quote_ccy) {
      bad_field(pp + ".premium", "must be the base or the quote currency");
    }
    out.pair = d;
  }
  if (s.contains("convention")) {
    const json& c = s["convention"];
    const std::string cp = path + ".convention";
    Convention conv;
    try {
      conv.delta_style = delta_style_from_string(text(c, "delta", cp));
    } catch (const Error&) {
      bad_field(cp + ".delta", "must be one of forward-pips, forward-percent, spot-pips, "
                               "spot-percent, simple");
    }
    try {
      conv.atm_style = atm_style_from_string(text(c, "atm", cp));
    } catch (const Error&) {
      bad_field(cp + ".atm", "must be dns or atm-forward");
    }
    out.convention = conv;
  }
  if (!out.pair && !out.convention) bad_field(path, "needs a pair or a convention");

  const MarketSlice mkt = parse_market(member(s, "market", path), out.maturity, path + ".market");
  out.market = {mkt.spot(), mkt.forward(), mkt.df_dom(), mkt.df_for()};

  if (s.contains("quotes") && !s["quotes"].is_null()) {
    const json& q = s["quotes"];
    const std::string qp = path + ".quotes";
    out.quotes = PercentQuotes{number(q, "atm", qp), number(q, "rr25", qp), number(q, "bf25", qp),
                               number(q, "rr10", qp), number(q, "bf10", qp)};
    try {
      out.quote_slice().validate();
    } catch (const Error& e) {
      bad_field(qp, std::string("are infeasible: ") + e.what());
    }
  }
  if (s.contains("models")) {
    const json& ms = s["models"];
    if (!ms.is_array()) bad_field(path + ".models", "must be an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string mp = path + ".models[" + std::to_string(i) + "]";
      NamedParams np{text(ms[i], "name", mp), member(ms[i], "params", mp)};
      try {
        (void)model_from_json(np.params, mkt);
      } catch (const Error& e) {
        bad_field(mp + ".params", std::string("are invalid: ") + e.what());
      }
      out.models.push_back(std::move(np));
    }
  }
  return out;
}

void write_json(std::ostringstream& os, const json& j, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  const char* colon = indent > 0 ? ": " : ":";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{' << nl;
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) os << ',' << nl;
        first = false;
        os << pad << json(k).dump() << colon;
        write_json(os, v, indent, depth + 1);
      }
      os << nl << close << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << '[' << nl;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) os << ',' << nl;
        os << pad;
        write_json(os, j[i], indent, depth + 1);
      }
      os << nl << close << ']';
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      if (!std::isfinite(x)) {
        os << "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", x);
      os << buf;
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace

MarketSlice DatasetSlice::market_slice() const {
  return MarketSlice::make(market.spot, market.forward, market.df_dom, market.df_for, maturity);
}

Convention DatasetSlice::resolved_convention() const {
  if (convention) return *convention;
  require(pair.has_value(), "slice has neither a convention nor a pair");
  return resolve_convention(*pair);
}

QuoteSlice DatasetSlice::quote_slice() const {
  require(quotes.has_value(), "slice '" + label + "' carries no quotes");
  QuoteSlice q;
  q.sigma_atm = quotes->atm / 100.0;
  q.rr25 = quotes->rr25 / 100.0;
  q.bf25 = quotes->bf25 / 100.0;
  q.rr10 = quotes->rr10 / 100.0;
  q.bf10 = quotes->bf10 / 100.0;
  q.convention = resolved_convention();
  q.maturity = maturity;
  return q;
}

const DatasetSlice& DatasetFile::slice(const std::string& key) const {
  for (const auto& s : slices) {
    if (s.label == key) return s;
  }
  std::size_t pos = 0;
  try {
    const auto idx = std::stoul(key, &pos);
    if (pos == key.size() && idx < slices.size()) return slices[idx];
  } catch (const std::exception&) {
  }
  std::string labels;
  for (const auto& s : slices) labels += (labels.empty() ? "" : ", ") + s.label;
  fail(ErrorKind::InvalidInput, "no slice '" + key + "' (available: " + labels + ")");
}

DatasetFile parse_dataset(const std::string& content) {
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, content.size());
    const auto line = 1 + std::count(content.begin(), content.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    fail(ErrorKind::InvalidInput, "dataset: malformed JSON at line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) bad_field("$", "must be an object");
  DatasetFile out;
  const double version = number(doc, "schema_version", "$");
  if (version != kSchemaVersion) {
    bad_field("$.schema_version", "must be " + std::to_string(kSchemaVersion));
  }
  out.name = doc.contains("name") ? text(doc, "name", "$") : std::string{};
  const json& slices = member(doc, "slices", "$");
  if (!slices.is_array() || slices.empty()) bad_field("$.slices", "must be a non-empty array");
  for (std::size_t i = 0; i < slices.size(); ++i) {
    out.slices.push_back(parse_slice(slices[i], "$.slices[" + std::to_string(i) + "]"));
  }
  return out;
}

DatasetFile load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open dataset '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

std::string serialize_dataset(const DatasetFile& d) {
  json doc = json::object();
  doc["schema_version"] = d.schema_version;
  doc["name"] = d.name;
  json slices = json::array();
  for (const auto& s : d.slices) {
    json js = json::object();
    js["label"] = s.label;
    js["maturity"] = s.maturity;
    if (s.pair) {
      js["pair"] = {{"base", s.pair->base_ccy},
                    {"quote", s.pair->quote_ccy},
                    {"premium", s.pair->premium_ccy},
                    {"latam_atm_forward", s.pair->latam_atm_forward},
                    {"both_oecd", s.pair->both_oecd}};
    }
    if (s.convention) {
      js["convention"] = {{"delta", std::string(to_string(s.convention->delta_style))},
                          {"atm", std::string(to_string(s.convention->atm_style))}};
    }
    js["market"] = {{"spot", s.market.spot},
                    {"forward", s.market.forward},
                    {"df_dom", s.market.df_dom},
                    {"df_for", s.market.df_for}};
    if (s.quotes) {
      js["quotes"] = {{"atm", s.quotes->atm},
                      {"rr25", s.quotes->rr25},
                      {"bf25", s.quotes->bf25},
                      {"rr10", s.quotes->rr10},
                      {"bf10", s.quotes->bf10}};
    }
    if (!s.models.empty()) {
      json ms = json::array();
      for (const auto& m : s.models) ms.push_back({{"name", m.name}, {"params", m.params}});
      js["models"] = ms;
    }
    slices.push_back(std::move(js));
  }
  doc["slices"] = slices;
  return dump_json(doc) + "\n";
}

std::string dump_json(const json& j, int indent) {
  std::ostringstream os;
  write_json(os, j, indent, 0);
  return os.str();
}

SmileFamily smile_family_from_string(std::string_view name) {
  for (auto f : {SmileFamily::Sabr, SmileFamily::Xssvi, SmileFamily::SplineLogM,
                 SmileFamily::SplineDelta, SmileFamily::PolyDelta}) {
    if (to_string(f) == name) return f;
  }
  fail(ErrorKind::InvalidInput, "unknown smile family '" + std::string(name) +
                                    "' (valid: sabr, xssvi, spline-logm, spline-delta, poly-delta)");
}

json model_to_json(const SmileModel& m) {
  json j = json::object();
  j["family"] = std::string(to_string(m.family()));
  if (const auto* p = std::get_if<SabrParams>(&m.params())) {
    j["alpha"] = p->alpha;
    j["beta"] = p->beta;
    j["rho"] = p->rho;
    j["nu"] = p->nu;
  } else if (const auto* x = std::get_if<XssviParams>(&m.params())) {
    j["theta"] = x->theta;
    j["rho"] = x->rho;
    j["phi"] = x->phi;
  } else if (const auto* a = std::get_if<PolyDeltaParams>(&m.params())) {
    j["a"] = a->a;
  } else {
    const auto& s = std::get<SplineSmile>(m.params());
    j["abscissae"] = s.nodes.abscissae;
    j["vols"] = s.nodes.values;
  }
  return j;
}

SmileModel model_from_json(const json& j, const MarketSlice& mkt) {
  const std::string path = "params";
  const SmileFamily family = smile_family_from_string(text(j, "family", path));
  switch (family) {
    case SmileFamily::Sabr: {
      SabrParams p;
      p.alpha = number(j, "alpha", path);
      p.beta = j.contains("beta") ? number(j, "beta", path) : 1.0;
      p.rho = number(j, "rho", path);
      p.nu = number(j, "nu", path);
      return SmileModel::sabr(p, mkt);
    }
    case SmileFamily::Xssvi:
      return SmileModel::xssvi({number(j, "theta", path), number(j, "rho", path), number(j, "phi", path)},
                               mkt);
    case SmileFamily::PolyDelta:
      return SmileModel::poly_delta({numbers<kNodeCount>(j, "a", path)}, mkt);
    case SmileFamily::SplineLogM:
    case SmileFamily::SplineDelta: {
      SplineNodes n{numbers<kNodeCount>(j, "abscissae", path), numbers<kNodeCount>(j, "vols", path)};
      return build_spline(family == SmileFamily::SplineLogM ? SplineKind::LogMoneyness
                                                            : SplineKind::ForwardDelta,
                          n, mkt);
    }
  }
  fail(ErrorKind::InvalidInput, "unsupported family");
}

}  // namespace fxsmile
