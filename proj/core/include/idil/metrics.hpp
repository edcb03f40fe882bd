#pragma once

// OOD separability metrics. In-distribution samples are the positives and a
// higher score means "more in-distribution". All functions return fractions
// in [0, 1]; MetricsReport (report.hpp) converts to percentages.
//
// Threshold-based metrics scan every achievable operating point: a sample
// counts as positive when its score exceeds the threshold, and thresholds sit
// at midpoints between adjacent distinct pooled scores plus -inf and +inf.

#include <span>
#include <vector>

#include "idil/autodiff.hpp"

namespace idil::metrics {

struct ScoreSet {
  std::vector<double> in_scores;
  std::vector<double> ood_scores;
};

// Per-row maximum probability.
std::vector<double> max_softmax(const ad::Tensor& probs);

// Smallest FPR over thresholds whose TPR reaches `tpr_target`.
double fpr_at_tpr(const ScoreSet& s, double tpr_target = 0.95);

// min over thresholds of 0.5 * (1 - TPR) + 0.5 * FPR.
double detection_error(const ScoreSet& s);

// P(in > ood) + 0.5 * P(in == ood).
double auroc(const ScoreSet& s);

// Average precision with in-distribution as positives. Within a run of
// equal scores negatives rank ahead of positives.
double aupr(const ScoreSet& s);

// Fraction of rows whose argmax (lowest index on ties) equals the gold label.
double accuracy(const ad::Tensor& probs, std::span<const std::size_t> gold);

struct PercentileRow {
  double threshold;
  double pct_in;   // % of in-distribution scores <= threshold
  double pct_ood;  // % of OOD scores <= threshold
};

struct PercentileTable {
  std::vector<PercentileRow> rows;  // bins + 1 evenly spaced thresholds
  double min_in_score = 0.0;
  // Fraction of OOD scores >= min_in_score: OOD that the least confident
  // in-distribution sample would let through.
  double ood_mass_at_or_above = 0.0;
};

PercentileTable percentile_table(const ScoreSet& s, std::size_t bins);

struct OodMetrics {
  double fpr95 = 0.0;
  double err = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
};

OodMetrics evaluate(const ScoreSet& s);

}  // namespace idil::metrics
