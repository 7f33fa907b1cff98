#include "diffbound/report.hpp"

#include <cstdio>
#include <sstream>

namespace diffbound {

namespace {

using nlohmann::json;

json severity_name(Severity s) {
  return s == Severity::Error ? "error" : "warning";
}

json validation_json(const ValidationReport& report) {
  json messages = json::array();
  for (const auto& m : report.messages) {
    messages.push_back({{"severity", severity_name(m.severity)},
                        {"text", m.text}});
  }
  return {{"ok", report.ok}, {"messages", messages}};
}

json bounds_json(const BoundsEstimate& b) {
  return {{"mu1_hat", b.mu1_hat},
          {"mu2_hat", b.mu2_hat},
          {"tau_minus", b.tau_minus},
          {"tau_plus", b.tau_plus},
          {"sigma1_hat", b.sigma1_hat},
          {"sigma2_hat", b.sigma2_hat},
          {"direction", direction_name(b.direction)},
          {"estimator2", estimator2_name(b.estimator2)},
          {"crossed", b.crossed}};
}

json cate_json(const CateEstimate& c) {
  return {{"x0", c.x0},
          {"cov_index", c.cov_index},
          {"mu1x", c.mu1x},
          {"mu2x", c.mu2x},
          {"tau_minus_x", c.tau_minus_x},
          {"tau_plus_x", c.tau_plus_x},
          {"sigma1x_hat", c.sigma1x_hat},
          {"sigma2x_hat", c.sigma2x_hat},
          {"bandwidths", {{"h1", c.h1}, {"h2", c.h2}, {"h3", c.h3}}},
          {"direction", direction_name(c.direction)},
          {"crossed", c.crossed}};
}

json region_json(const ConfidenceRegion& r) {
  return {{"lower", r.lower},
          {"upper", r.upper},
          {"alpha", r.alpha},
          {"beta", r.beta},
          {"n_boot", r.n_boot},
          {"grid_points", r.grid_points},
          {"contiguous", r.contiguous}};
}

std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string direction_name(Direction direction) {
  switch (direction) {
    case Direction::Mu1Upper:
      return "mu1-upper";
    case Direction::Mu2Upper:
      return "mu2-upper";
    case Direction::Point:
      return "point";
  }
  return "unknown";
}

std::string estimator2_name(Estimator2 estimator2) {
  return estimator2 == Estimator2::Aipw ? "aipw" : "ipw";
}

json to_json(const AnalysisReport& report) {
  json out;
  if (report.ate) out["ate"] = bounds_json(*report.ate);
  if (report.cate) out["cate"] = cate_json(*report.cate);
  if (report.region) out["region"] = region_json(*report.region);
  out["cells"] = {{"n00", report.cells.n00},
                  {"n01", report.cells.n01},
                  {"n10", report.cells.n10},
                  {"n11", report.cells.n11}};
  out["validation"] = validation_json(report.validation);
  out["positivity"] = validation_json(report.positivity);
  out["warnings"] = report.warnings;
  out["seed"] = report.seed;
  out["version"] = report.version;
  out["timestamp"] = report.timestamp;
  return out;
}

std::string to_json_string(const AnalysisReport& report, bool drop_timestamp) {
  json out = to_json(report);
  if (drop_timestamp) out.erase("timestamp");
  return out.dump(2) + "\n";
}

std::string to_text(const AnalysisReport& report) {
  std::ostringstream out;
  out << "differential-effect bound analysis (version " << report.version
      << ", seed " << report.seed << ")\n";
  out << "cells (z1,z2): n00=" << report.cells.n00
      << " n01=" << report.cells.n01 << " n10=" << report.cells.n10
      << " n11=" << report.cells.n11 << "\n";
  if (report.ate) {
    const auto& b = *report.ate;
    out << "estimators: mu1_hat=" << format_num(b.mu1_hat)
        << " (sigma1_hat=" << format_num(b.sigma1_hat) << ")"
        << "  mu2_hat=" << format_num(b.mu2_hat)
        << " (sigma2_hat=" << format_num(b.sigma2_hat) << ", "
        << estimator2_name(b.estimator2) << ")\n";
    out << "direction: " << direction_name(b.direction) << "\n";
    out << "estimated bounds: [" << format_num(b.tau_minus) << ", "
        << format_num(b.tau_plus) << "]"
        << (b.crossed ? "  (order-corrected: bounds crossed)" : "") << "\n";
  }
  if (report.cate) {
    const auto& c = *report.cate;
    out << "conditional at x0=" << format_num(c.x0) << " (covariate "
        << c.cov_index << "): mu1x=" << format_num(c.mu1x)
        << " (sigma1x_hat=" << format_num(c.sigma1x_hat) << ")"
        << "  mu2x=" << format_num(c.mu2x)
        << " (sigma2x_hat=" << format_num(c.sigma2x_hat) << ")\n";
    out << "bandwidths: h1=" << format_num(c.h1) << " h2=" << format_num(c.h2)
        << " h3=" << format_num(c.h3) << "\n";
    out << "direction: " << direction_name(c.direction) << "\n";
    out << "estimated bounds: [" << format_num(c.tau_minus_x) << ", "
        << format_num(c.tau_plus_x) << "]"
        << (c.crossed ? "  (order-corrected: bounds crossed)" : "") << "\n";
  }
  if (report.region) {
    const auto& r = *report.region;
    out << "confidence region (alpha=" << format_num(r.alpha)
        << ", beta=" << format_num(r.beta) << ", boot=" << r.n_boot
        << "): [" << format_num(r.lower) << ", " << format_num(r.upper) << "]"
        << (r.contiguous ? "" : "  (non-contiguous: hull reported)") << "\n";
  }
  auto print_validation = [&](const char* name, const ValidationReport& v) {
    for (const auto& m : v.messages) {
      out << name << ' '
          << (m.severity == Severity::Error ? "error" : "warning") << ": "
          << m.text << "\n";
    }
  };
  print_validation("validation", report.validation);
  print_validation("positivity", report.positivity);
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  return out.str();
}

}  // namespace diffbound
