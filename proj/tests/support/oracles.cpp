#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace idil::oracle {

long double sigmoid_ld(long double x) { return 1.0L / (1.0L + std::exp(-x)); }

double silu(double x) { return x * (1.0 / (1.0 + std::exp(-x))); }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Matrix softmax(const Matrix& logits) {
  Matrix out;
  for (const auto& row : logits) {
    long double total = 0.0L;
    for (double z : row) total += std::exp(static_cast<long double>(z));
    std::vector<double> p;
    for (double z : row) p.push_back(static_cast<double>(std::exp(static_cast<long double>(z)) / total));
    out.push_back(std::move(p));
  }
  return out;
}

double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

bool gradients_agree(double analytic, double numeric, double rel, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) <= rel * scale;
}

double batch_loss(const Matrix& live, const Matrix& frozen, const std::vector<std::size_t>& labels,
                  losses::LossVariant variant) {
  using losses::LossVariant;
  const std::size_t n = labels.size();
  if (variant == LossVariant::ce) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::log(live[i][labels[i]]);
    return total * (-1.0 / static_cast<double>(n));
  }
  const std::size_t k = live.front().size();
  const bool minuend_live = variant != LossVariant::idil_gradsub;
  const bool subtrahend_live = variant == LossVariant::idil_gradsub || variant == LossVariant::idil_gradboth;
  const bool wrap = variant != LossVariant::idil_nosilu;

  double total = 0.0;
  bool any = false;
  for (std::size_t l = 0; l < k; ++l) {
    for (std::size_t a = 0; a < n; ++a) {
      if (labels[a] != l) continue;
      for (std::size_t b = 0; b < n; ++b) {
        if (labels[b] == l) continue;
        const double minuend = minuend_live ? live[b][l] : frozen[b][l];
        const double subtrahend = subtrahend_live ? live[a][l] : frozen[a][l];
        const double d = minuend - subtrahend;
        total = any ? total + (wrap ? silu(d) : d) : (wrap ? silu(d) : d);
        any = true;
      }
    }
  }
  if (variant == LossVariant::idil_intradoc) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < k; ++l) {
        if (l == labels[i]) continue;
        const double t = silu(live[i][l] - frozen[i][labels[i]]);
        total = any ? total + t : t;
        any = true;
      }
    }
  }
  return total;
}

std::size_t pair_terms(const std::vector<std::size_t>& labels, std::size_t num_labels) {
  std::size_t count = 0;
  for (std::size_t l = 0; l < num_labels; ++l)
    for (auto a : labels)
      for (auto b : labels)
        if (a == l && b != l) ++count;
  return count;
}

double auroc_pairwise(const std::vector<double>& in, const std::vector<double>& ood) {
  double credit = 0.0;
  for (double x : in)
    for (double y : ood) credit += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return credit / (static_cast<double>(in.size()) * static_cast<double>(ood.size()));
}

namespace {

std::vector<double> anchored_thresholds(const std::vector<double>& in, const std::vector<double>& ood) {
  std::vector<double> t = {-std::numeric_limits<double>::infinity()};
  for (const auto* list : {&in, &ood}) {
    for (double s : *list) {
      t.push_back(s);
      t.push_back(std::nextafter(s, -std::numeric_limits<double>::infinity()));
    }
  }
  return t;
}

double rate_above(const std::vector<double>& scores, double threshold) {
  std::size_t n = 0;
  for (double s : scores) n += s > threshold ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(scores.size());
}

}  // namespace

double fpr_at_tpr_exhaustive(const std::vector<double>& in, const std::vector<double>& ood, double target) {
  double best = 1.0;
  for (double t : anchored_thresholds(in, ood))
    if (rate_above(in, t) >= target) best = std::min(best, rate_above(ood, t));
  return best;
}

double detection_error_exhaustive(const std::vector<double>& in, const std::vector<double>& ood) {
  double best = 1.0;
  for (double t : anchored_thresholds(in, ood))
    best = std::min(best, 0.5 * (1.0 - rate_above(in, t)) + 0.5 * rate_above(ood, t));
  return best;
}

double average_precision(const std::vector<double>& in, const std::vector<double>& ood) {
  const std::set<double, std::greater<>> levels(in.begin(), in.end());
  double sum = 0.0;
  std::size_t tp = 0;
  for (double level : levels) {
    std::size_t above = 0;
    std::size_t neg_tied = 0;
    std::size_t pos_tied = 0;
    for (double x : in) {
      above += x > level ? 1 : 0;
      pos_tied += x == level ? 1 : 0;
    }
    for (double y : ood) {
      above += y > level ? 1 : 0;
      neg_tied += y == level ? 1 : 0;
    }
    for (std::size_t k = 1; k <= pos_tied; ++k) {
      ++tp;
      sum += static_cast<double>(tp) / static_cast<double>(above + neg_tied + k);
    }
  }
  return sum / static_cast<double>(in.size());
}

}  // namespace idil::oracle
