#include "idil/losses.hpp"

#include <algorithm>

#include "idil/error.hpp"

namespace idil::losses {

std::string_view to_string(LossVariant v) {
  switch (v) {
    case LossVariant::idil: return "idil";
    case LossVariant::idil_gradsub: return "idil-gradsub";
    case LossVariant::idil_gradboth: return "idil-gradboth";
    case LossVariant::idil_intradoc: return "idil-intradoc";
    case LossVariant::idil_nosilu: return "idil-nosilu";
    case LossVariant::ce: return "ce";
  }
  return "?";
}

LossVariant parse_variant(std::string_view name) {
  for (auto v : kAllVariants)
    if (to_string(v) == name) return v;
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (expected idil, idil-gradsub, idil-gradboth, idil-intradoc, idil-nosilu or ce)");
}

bool is_pairwise(LossVariant v) { return v != LossVariant::ce; }

std::size_t BatchBuckets::batch_size() const {
  std::size_t n = 0;
  for (const auto& b : by_label) n += b.size();
  return n;
}

std::vector<std::size_t> BatchBuckets::complement(std::size_t label) const {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < by_label.size(); ++l) {
    if (l == label) continue;
    out.insert(out.end(), by_label[l].begin(), by_label[l].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t BatchBuckets::pair_count() const {
  const std::size_t n = batch_size();
  std::size_t pairs = 0;
  for (const auto& b : by_label) pairs += b.size() * (n - b.size());
  return pairs;
}

BatchBuckets bucket_batch(std::span<const std::size_t> labels, std::size_t num_labels) {
  std::size_t k = num_labels;
  if (k == 0 && !labels.empty()) k = *std::max_element(labels.begin(), labels.end()) + 1;
  BatchBuckets buckets;
  buckets.by_label.resize(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k) throw IndexError(0, labels[i], k);
    buckets.by_label[labels[i]].push_back(i);
  }
  return buckets;
}

ad::Tensor idil_pair_loss(const ad::Tensor& p_minuend, const ad::Tensor& p_subtrahend, LossVariant variant) {
  switch (variant) {
    case LossVariant::idil:
    case LossVariant::idil_intradoc:
      return ad::silu(p_minuend - ad::detach(p_subtrahend));
    case LossVariant::idil_gradsub:
      return ad::silu(ad::detach(p_minuend) - p_subtrahend);
    case LossVariant::idil_gradboth:
      return ad::silu(p_minuend - p_subtrahend);
    case LossVariant::idil_nosilu:
      return p_minuend - ad::detach(p_subtrahend);
    case LossVariant::ce:
      break;
  }
  throw ConfigError("idil_pair_loss: the ce variant has no pairwise form");
}

namespace {

ad::Tensor cross_entropy(const ad::Tensor& probs, std::span<const std::size_t> labels) {
  std::vector<ad::Tensor> terms;
  terms.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) terms.push_back(ad::log(ad::select(probs, i, labels[i])));
  return ad::scale(ad::add_n(terms), -1.0 / static_cast<double>(labels.size()));
}

}  // namespace

ad::Tensor batch_loss(const ad::Tensor& probs, std::span<const std::size_t> labels, LossVariant variant) {
  if (labels.empty()) throw ShapeError("batch_loss: empty batch");
  if (probs.rank() != 2 || probs.rows() != labels.size()) {
    throw ShapeError("batch_loss: " + std::to_string(labels.size()) + " labels for a probability matrix with " +
                     std::to_string(probs.rows()) + " rows");
  }
  const std::size_t num_labels = probs.cols();
  if (variant == LossVariant::ce) {
    for (auto y : labels)
      if (y >= num_labels) throw IndexError(1, y, num_labels);
    return cross_entropy(probs, labels);
  }

  const BatchBuckets buckets = bucket_batch(labels, num_labels);
  std::vector<ad::Tensor> terms;
  terms.reserve(buckets.pair_count() + (variant == LossVariant::idil_intradoc ? labels.size() * num_labels : 0));

  for (std::size_t l = 0; l < num_labels; ++l) {
    const auto& members = buckets.by_label[l];
    if (members.empty()) continue;
    const auto others = buckets.complement(l);
    for (std::size_t x1 : members) {
      const ad::Tensor subtrahend = ad::select(probs, x1, l);
      for (std::size_t x2 : others) terms.push_back(idil_pair_loss(ad::select(probs, x2, l), subtrahend, variant));
    }
  }

  if (variant == LossVariant::idil_intradoc) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const ad::Tensor own = ad::detach(ad::select(probs, i, labels[i]));
      for (std::size_t l = 0; l < num_labels; ++l) {
        if (l == labels[i]) continue;
        terms.push_back(ad::silu(ad::select(probs, i, l) - own));
      }
    }
  }

  if (terms.empty()) {
    // Single-label batch: no pairs. Keep the graph connected so backward is a no-op.
    return ad::scale(ad::sum(probs), 0.0);
  }
  return ad::add_n(terms);
}

}  // namespace idil::losses
