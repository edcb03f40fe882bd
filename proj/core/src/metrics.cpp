#include "idil/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "idil/error.hpp"

namespace idil::metrics {

namespace {

void require_scores(const ScoreSet& s, const char* op) {
  if (s.in_scores.empty() || s.ood_scores.empty()) {
    throw DataError(std::string(op) + ": both score lists must be non-empty");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(s.in_scores.begin(), s.in_scores.end(), finite) ||
      !std::all_of(s.ood_scores.begin(), s.ood_scores.end(), finite)) {
    throw DataError(std::string(op) + ": scores must be finite");
  }
}

// Visits every threshold on the midpoint grid with the number of in and OOD
// samples strictly above it, from +inf downwards.
template <typename Visit>
void scan_thresholds(const ScoreSet& s, Visit&& visit) {
  std::vector<double> in = s.in_scores;
  std::vector<double> ood = s.ood_scores;
  std::sort(in.begin(), in.end(), std::greater<>());
  std::sort(ood.begin(), ood.end(), std::greater<>());
  std::size_t tp = 0;
  std::size_t fp = 0;
  visit(tp, fp);
  while (tp < in.size() || fp < ood.size()) {
    double next = -INFINITY;
    if (tp < in.size()) next = std::max(next, in[tp]);
    if (fp < ood.size()) next = std::max(next, ood[fp]);
    while (tp < in.size() && in[tp] == next) ++tp;
    while (fp < ood.size() && ood[fp] == next) ++fp;
    visit(tp, fp);
  }
}

}  // namespace

std::vector<double> max_softmax(const ad::Tensor& probs) {
  const std::size_t n = probs.rows();
  const std::size_t k = probs.cols();
  const auto v = probs.values();
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) out[r] = *std::max_element(v.begin() + r * k, v.begin() + (r + 1) * k);
  return out;
}

double fpr_at_tpr(const ScoreSet& s, double tpr_target) {
  require_scores(s, "fpr_at_tpr");
  const double n_in = static_cast<double>(s.in_scores.size());
  const double n_ood = static_cast<double>(s.ood_scores.size());
  double best = 1.0;
  scan_thresholds(s, [&](std::size_t tp, std::size_t fp) {
    if (static_cast<double>(tp) / n_in >= tpr_target) best = std::min(best, static_cast<double>(fp) / n_ood);
  });
  return best;
}

double detection_error(const ScoreSet& s) {
  require_scores(s, "detection_error");
  const double n_in = static_cast<double>(s.in_scores.size());
  const double n_ood = static_cast<double>(s.ood_scores.size());
  double best = 1.0;
  scan_thresholds(s, [&](std::size_t tp, std::size_t fp) {
    const double e = 0.5 * (1.0 - static_cast<double>(tp) / n_in) + 0.5 * (static_cast<double>(fp) / n_ood);
    best = std::min(best, e);
  });
  return best;
}

double auroc(const ScoreSet& s) {
  require_scores(s, "auroc");
  std::vector<double> ood = s.ood_scores;
  std::sort(ood.begin(), ood.end());
  double wins = 0.0;
  for (double x : s.in_scores) {
    const auto lo = std::lower_bound(ood.begin(), ood.end(), x);
    const auto hi = std::upper_bound(lo, ood.end(), x);
    wins += static_cast<double>(lo - ood.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(s.in_scores.size()) * static_cast<double>(s.ood_scores.size()));
}

double aupr(const ScoreSet& s) {
  require_scores(s, "aupr");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(s.in_scores.size() + s.ood_scores.size());
  for (double x : s.in_scores) items.push_back({x, true});
  for (double x : s.ood_scores) items.push_back({x, false});
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.score != b.score) return a.score > b.score;
    return !a.positive && b.positive;
  });
  double precision_sum = 0.0;
  std::size_t tp = 0;
  for (std::size_t rank = 1; rank <= items.size(); ++rank) {
    if (!items[rank - 1].positive) continue;
    ++tp;
    precision_sum += static_cast<double>(tp) / static_cast<double>(rank);
  }
  return precision_sum / static_cast<double>(s.in_scores.size());
}

double accuracy(const ad::Tensor& probs, std::span<const std::size_t> gold) {
  if (probs.rows() != gold.size()) {
    throw ShapeError("accuracy: " + std::to_string(probs.rows()) + " prediction rows but " +
                     std::to_string(gold.size()) + " gold labels");
  }
  if (gold.empty()) throw DataError("accuracy: no rows");
  const std::size_t k = probs.cols();
  const auto v = probs.values();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < gold.size(); ++r) {
    const auto row = v.begin() + r * k;
    const auto argmax = static_cast<std::size_t>(std::max_element(row, row + k) - row);
    if (argmax == gold[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

PercentileTable percentile_table(const ScoreSet& s, std::size_t bins) {
  if (bins < 2) throw ConfigError("percentile_table: bins must be >= 2");
  require_scores(s, "percentile_table");
  std::vector<double> in = s.in_scores;
  std::vector<double> ood = s.ood_scores;
  std::sort(in.begin(), in.end());
  std::sort(ood.begin(), ood.end());
  const double lo = std::min(in.front(), ood.front());
  const double hi = std::max(in.back(), ood.back());

  auto pct_at_or_below = [](const std::vector<double>& sorted, double t) {
    const auto n = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    return 100.0 * static_cast<double>(n) / static_cast<double>(sorted.size());
  };

  PercentileTable table;
  table.rows.reserve(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    const double t = i == bins ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    table.rows.push_back({t, pct_at_or_below(in, t), pct_at_or_below(ood, t)});
  }
  table.min_in_score = in.front();
  const auto below = std::lower_bound(ood.begin(), ood.end(), table.min_in_score) - ood.begin();
  table.ood_mass_at_or_above = static_cast<double>(static_cast<std::ptrdiff_t>(ood.size()) - below) /
                               static_cast<double>(ood.size());
  return table;
}

OodMetrics evaluate(const ScoreSet& s) { return {fpr_at_tpr(s, 0.95), detection_error(s), auroc(s), aupr(s)}; }

}  // namespace idil::metrics
