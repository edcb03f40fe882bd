#pragma once

// Inter-document intra-label (IDIL) ranking loss.
//
// For a label l, a document x1 annotated with l and a document x2 annotated
// otherwise, the pair term is SiLU(p(l|x2) - p(l|x1)). Only the minuend
// p(l|x2) carries gradient; the subtrahend is detached. Training therefore
// pushes down the probability of labels a document does not carry, and the
// objective never reads a document's own-label probability directly.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idil/autodiff.hpp"

namespace idil::losses {

enum class LossVariant {
  idil,           // subtrahend detached
  idil_gradsub,   // minuend detached instead
  idil_gradboth,  // nothing detached
  idil_intradoc,  // idil plus within-document pair terms
  idil_nosilu,    // idil without the SiLU wrapper
  ce,             // cross-entropy baseline
};

inline constexpr LossVariant kAllVariants[] = {
    LossVariant::idil,          LossVariant::idil_gradsub, LossVariant::idil_gradboth,
    LossVariant::idil_intradoc, LossVariant::idil_nosilu,  LossVariant::ce,
};

// Config spellings: "idil", "idil-gradsub", "idil-gradboth", "idil-intradoc",
// "idil-nosilu", "ce".
std::string_view to_string(LossVariant v);
LossVariant parse_variant(std::string_view name);

bool is_pairwise(LossVariant v);

// Batch positions grouped by annotated label, in batch order.
struct BatchBuckets {
  std::vector<std::vector<std::size_t>> by_label;

  std::size_t batch_size() const;
  // Positions whose label is not `label`, in batch order.
  std::vector<std::size_t> complement(std::size_t label) const;
  // Sum over labels of |b_l| * |b_not_l|: the number of ordered pair terms.
  std::size_t pair_count() const;
};

// `num_labels` sizes the bucket table; 0 infers it from the largest label.
BatchBuckets bucket_batch(std::span<const std::size_t> labels, std::size_t num_labels = 0);

// SiLU(p_minuend - p_subtrahend) with the variant's gradient routing.
// idil_nosilu returns the raw difference. Throws ConfigError for ce.
ad::Tensor idil_pair_loss(const ad::Tensor& p_minuend, const ad::Tensor& p_subtrahend, LossVariant variant);

// Mini-batch loss. Pairwise variants sum, over every label l, every x1 in
// b_l and every x2 outside b_l, the pair term with minuend p(l|x2) and
// subtrahend p(l|x1). idil_intradoc then adds SiLU(p(l|x) - detach(p(y|x)))
// for every document x and every label l != y. ce is the batch mean of
// -log p(y|x).
ad::Tensor batch_loss(const ad::Tensor& probs, std::span<const std::size_t> labels, LossVariant variant);

}  // namespace idil::losses
