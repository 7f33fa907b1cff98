#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffbound/ate_bounds.hpp"
#include "diffbound/cate_bounds.hpp"
#include "diffbound/dataset.hpp"
#include "diffbound/moment_inference.hpp"

namespace diffbound {

inline constexpr const char* kVersion = "0.1.0";

// Everything one analysis run produced: the bound pair, the confidence
// region, diagnostics, and provenance. Serializes losslessly to JSON with
// sorted keys; the timestamp is the only field excluded from the
// reproducibility guarantee.
struct AnalysisReport {
  std::optional<BoundsEstimate> ate;
  std::optional<CateEstimate> cate;
  std::optional<ConfidenceRegion> region;
  CellCounts cells;
  ValidationReport validation;
  ValidationReport positivity;
  std::vector<std::string> warnings;  // each warning appears exactly once
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string timestamp;
};

nlohmann::json to_json(const AnalysisReport& report);
std::string to_json_string(const AnalysisReport& report, bool drop_timestamp = false);

// Aligned plain-text rendering; every numeric shown here is also present in
// the JSON form.
std::string to_text(const AnalysisReport& report);

std::string direction_name(Direction direction);
std::string estimator2_name(Estimator2 estimator2);

}  // namespace diffbound
