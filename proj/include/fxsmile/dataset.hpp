#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fxsmile/calibration.hpp"

namespace fxsmile {

inline constexpr int kSchemaVersion = 1;

/// Broker quotes as printed, in percent.
struct PercentQuotes {
  double atm = 0.0;
  double rr25 = 0.0;
  double bf25 = 0.0;
  double rr10 = 0.0;
  double bf10 = 0.0;
  bool operator==(const PercentQuotes&) const = default;
};

/// Fully resolved market inputs of a slice.
struct MarketFields {
  double spot = 0.0;
  double forward = 0.0;
  double df_dom = 0.0;
  double df_for = 0.0;
  bool operator==(const MarketFields&) const = default;
};

/// A parameter set stored with a slice, e.g. a known problematic SABR smile.
struct NamedParams {
  std::string name;
  nlohmann::json params;  ///< as accepted by model_from_json
  bool operator==(const NamedParams&) const = default;
};

struct DatasetSlice {
  std::string label;
  std::optional<PairDescriptor> pair;
  std::optional<Convention> convention;  ///< overrides the pair's convention
  double maturity = 0.0;
  MarketFields market;
  std::optional<PercentQuotes> quotes;
  std::vector<NamedParams> models;

  bool operator==(const DatasetSlice&) const = default;

  MarketSlice market_slice() const;
  /// Explicit convention, else resolved from the pair descriptor.
  Convention resolved_convention() const;
  /// Decimal quotes; throws InvalidInput when the slice carries none.
  QuoteSlice quote_slice() const;
};

struct DatasetFile {
  int schema_version = kSchemaVersion;
  std::string name;
  std::vector<DatasetSlice> slices;

  bool operator==(const DatasetFile&) const = default;

  /// Slice by label, or by zero-based index when `key` is a number.
  const DatasetSlice& slice(const std::string& key) const;
};

/// Parse and validate. Market fields may be given as {spot, forward, df_dom,
/// df_for}, {spot, forward, df_for}, {spot, df_dom, df_for}, {spot, r_dom,
/// r_for} (continuous rates) or {forward, df}. Errors name the offending
/// field path and are InvalidInput.
DatasetFile parse_dataset(const std::string& text);
DatasetFile load_dataset(const std::string& path);

/// Canonical form: all four market fields written out.
std::string serialize_dataset(const DatasetFile& d);

/// Numbers as JSON with 17 significant digits.
std::string dump_json(const nlohmann::json& j, int indent = 2);

nlohmann::json model_to_json(const SmileModel& m);
/// {"family": ..., parameters...}. SABR and XSSVI take named fields, poly-delta
/// "a": [5], splines "abscissae" and "vols": [5] each.
SmileModel model_from_json(const nlohmann::json& j, const MarketSlice& mkt);

SmileFamily smile_family_from_string(std::string_view name);

}  // namespace fxsmile
