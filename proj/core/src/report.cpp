#include "idil/report.hpp"

#include <cstdio>

#include "idil/error.hpp"

namespace idil::metrics {

namespace {

std::string fixed2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

MetricsReport make_report(std::string in_dist, std::string ood, std::string method, std::string seed,
                          const OodMetrics& m, std::optional<double> accuracy_fraction) {
  MetricsReport r{std::move(in_dist), std::move(ood), std::move(method), std::move(seed),
                  100.0 * m.fpr95,    100.0 * m.err,  100.0 * m.auroc,   100.0 * m.aupr,
                  std::nullopt};
  if (accuracy_fraction) r.accuracy = 100.0 * *accuracy_fraction;
  return r;
}

MetricsReport mean_report(std::span<const MetricsReport> rows) {
  if (rows.empty()) throw DataError("mean_report: no rows");
  MetricsReport out = rows.front();
  out.seed = "mean";
  out.fpr95 = out.err = out.auroc = out.aupr = 0.0;
  double acc = 0.0;
  bool all_acc = true;
  for (const auto& r : rows) {
    out.fpr95 += r.fpr95;
    out.err += r.err;
    out.auroc += r.auroc;
    out.aupr += r.aupr;
    if (r.accuracy) acc += *r.accuracy;
    else all_acc = false;
  }
  const double n = static_cast<double>(rows.size());
  out.fpr95 /= n;
  out.err /= n;
  out.auroc /= n;
  out.aupr /= n;
  out.accuracy = all_acc ? std::optional<double>(acc / n) : std::nullopt;
  return out;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string report_csv_row(const MetricsReport& r) {
  return csv_escape(r.in_dist) + "," + csv_escape(r.ood) + "," + csv_escape(r.method) + "," + csv_escape(r.seed) +
         "," + fixed2(r.fpr95) + "," + fixed2(r.err) + "," + fixed2(r.auroc) + "," + fixed2(r.aupr) + "," +
         (r.accuracy ? fixed2(*r.accuracy) : std::string()) + "\n";
}

std::string report_csv(std::span<const MetricsReport> rows) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : rows) out += report_csv_row(r);
  return out;
}

std::string percentile_csv(const PercentileTable& table) {
  std::string out = "threshold,pct_in,pct_ood\n";
  for (const auto& row : table.rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.6f,%.2f,%.2f\n", row.threshold, row.pct_in, row.pct_ood);
    out += buf;
  }
  return out;
}

std::string percentile_svg(const PercentileTable& table, const std::string& title) {
  constexpr double W = 480, H = 320, L = 56, R = 16, T = 32, B = 44;
  const double lo = table.rows.front().threshold;
  const double hi = table.rows.back().threshold;
  const double span = hi > lo ? hi - lo : 1.0;
  auto x = [&](double score) { return L + (score - lo) / span * (W - L - R); };
  auto y = [&](double pct) { return H - B - pct / 100.0 * (H - T - B); };

  auto polyline = [&](bool ood, const char* color) {
    std::string pts;
    for (const auto& row : table.rows) {
      if (!pts.empty()) pts += ' ';
      pts += num(x(row.threshold)) + "," + num(y(ood ? row.pct_ood : row.pct_in));
    }
    return "  <polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts +
           "\"/>\n";
  };

  std::string escaped;
  for (char c : title) {
    switch (c) {
      case '<': escaped += "&lt;"; break;
      case '>': escaped += "&gt;"; break;
      case '&': escaped += "&amp;"; break;
      default: escaped += c;
    }
  }

  const double tx = x(table.min_in_score);
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) + "\">\n";
  svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Shaded region: OOD scores at or above the least in-distribution score.
  svg += "  <rect x=\"" + num(tx) + "\" y=\"" + num(T) + "\" width=\"" + num(W - R - tx) + "\" height=\"" +
         num(H - T - B) + "\" fill=\"#d62728\" fill-opacity=\"0.12\"/>\n";
  svg += "  <line x1=\"" + num(L) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(W - R) + "\" y2=\"" + num(H - B) +
         "\" stroke=\"black\"/>\n";
  svg += "  <line x1=\"" + num(L) + "\" y1=\"" + num(T) + "\" x2=\"" + num(L) + "\" y2=\"" + num(H - B) +
         "\" stroke=\"black\"/>\n";
  svg += polyline(false, "#1f77b4");
  svg += polyline(true, "#d62728");
  svg += "  <line x1=\"" + num(tx) + "\" y1=\"" + num(T) + "\" x2=\"" + num(tx) + "\" y2=\"" + num(H - B) +
         "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
  svg += "  <text x=\"" + num(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + escaped + "</text>\n";
  svg += "  <text x=\"" + num(W / 2) + "\" y=\"" + num(H - 10) +
         "\" text-anchor=\"middle\" font-size=\"12\">max softmax score</text>\n";
  svg += "  <text x=\"14\" y=\"" + num(H / 2) + "\" transform=\"rotate(-90 14 " + num(H / 2) +
         ")\" text-anchor=\"middle\" font-size=\"12\">percentile (%)</text>\n";
  svg += "  <text x=\"" + num(W - R - 4) + "\" y=\"" + num(T + 14) +
         "\" text-anchor=\"end\" font-size=\"11\" fill=\"#d62728\">OOD at/above threshold: " +
         fixed2(100.0 * table.ood_mass_at_or_above) + "%</text>\n";
  svg += "  <text x=\"" + num(L + 6) + "\" y=\"" + num(T + 14) +
         "\" font-size=\"11\" fill=\"#1f77b4\">in-distribution</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace idil::metrics
