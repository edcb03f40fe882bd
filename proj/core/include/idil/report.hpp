#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idil/metrics.hpp"

namespace idil::metrics {

// One (in-dist, OOD, method, seed) cell. Values are percentages.
struct MetricsReport {
  std::string in_dist;
  std::string ood;
  std::string method;
  std::string seed;  // a seed number, or "mean"
  double fpr95 = 0.0;
  double err = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  std::optional<double> accuracy;
};

MetricsReport make_report(std::string in_dist, std::string ood, std::string method, std::string seed,
                          const OodMetrics& m, std::optional<double> accuracy_fraction);

// Arithmetic mean of every metric; identifying fields come from the first
// row and the seed becomes "mean". Accuracy is averaged when all rows have it.
MetricsReport mean_report(std::span<const MetricsReport> rows);

inline constexpr const char* kReportHeader = "in_dist,ood,method,seed,fpr95,err,auroc,aupr,accuracy";

// Header plus one line per row, two decimals, LF endings.
std::string report_csv(std::span<const MetricsReport> rows);
std::string report_csv_row(const MetricsReport& row);

// `threshold,pct_in,pct_ood`
std::string percentile_csv(const PercentileTable& table);

// Cumulative percentile curves for both populations with the least
// in-distribution score marked. Self-contained SVG.
std::string percentile_svg(const PercentileTable& table, const std::string& title);

// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_escape(const std::string& field);

}  // namespace idil::metrics
