#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace idil::data {

struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> label;  // absent for OOD sets
};

// Ordered, de-duplicated label names.
class LabelVocab {
 public:
  LabelVocab() = default;
  explicit LabelVocab(std::vector<std::string> names);

  // Appends `name` if unseen; returns its index either way.
  std::size_t add(const std::string& name);
  std::optional<std::size_t> find(std::string_view name) const;
  // Throws DataError for unknown names.
  std::size_t index_of(std::string_view name) const;
  const std::string& name(std::size_t index) const;

  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool operator==(const LabelVocab& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Dataset {
  std::vector<Document> documents;
  LabelVocab vocab;
  std::string provenance;

  std::size_t size() const noexcept { return documents.size(); }
  // Every document carries a label.
  bool labeled() const;
  // Label indices in document order. Throws if any document is unlabeled.
  std::vector<std::size_t> label_indices() const;
};

enum class Format { jsonl, csv };

// Picks the format from the extension (.csv, anything else is JSONL).
Format format_for(const std::filesystem::path& path);

// Reads a corpus. Records need a non-empty `text`; `label` is optional.
// The vocabulary lists observed labels in first-appearance order.
Dataset load(const std::filesystem::path& path, Format format);
Dataset load(const std::filesystem::path& path);

// One JSON object per line, keys `id`, `text` and (when present) `label`.
void write_jsonl(const Dataset& ds, const std::filesystem::path& path);
std::string to_jsonl(const Dataset& ds);

struct Split {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Seeded shuffle, then floor(10%) validation, floor(10%) test and the rest
// for training. All three share the input vocabulary.
Split split(const Dataset& ds, std::uint64_t seed);

// Sparse, sorted by index.
struct FeatureVector {
  std::size_t dim = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;

  double norm() const;
  bool operator==(const FeatureVector&) const = default;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Lowercased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

// Hashed bag of words: FNV-1a 64 of each token modulo `dim`, term counts,
// then L2 normalisation. Token-free text yields the zero vector.
FeatureVector featurize(std::string_view text, std::size_t dim);

struct FeaturizedSet {
  std::vector<FeatureVector> features;
  std::vector<std::size_t> labels;  // empty for unlabeled sets
};

FeaturizedSet featurize(const Dataset& ds, std::size_t dim);

struct SynthConfig {
  std::size_t n_per_label = 200;
  std::size_t labels = 4;
  double overlap = 0.0;
  std::size_t doc_len = 20;
  std::uint64_t seed = 1;
  // OOD corpus size; 0 means n_per_label.
  std::size_t n_ood = 0;
};

// Size of each synthetic token block.
inline constexpr std::size_t kSynthBlockSize = 200;

struct SynthCorpora {
  Dataset in_dist;
  Dataset ood;
};

// Each in-distribution label samples tokens from its own block; the OOD
// corpus samples from a separate block in which a fraction `overlap` of
// the tokens is borrowed from the in-distribution blocks.
SynthCorpora synth_generate(const SynthConfig& cfg);

}  // namespace idil::data
