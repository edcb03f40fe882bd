#include "idil/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "idil/error.hpp"
#include "idil/io.hpp"
#include "idil/random.hpp"

namespace idil::data {

using nlohmann::json;

// ---------------------------------------------------------------------------
// LabelVocab / Dataset

LabelVocab::LabelVocab(std::vector<std::string> names) {
  for (auto& n : names) {
    if (index_.contains(n)) throw DataError("duplicate label '" + n + "' in vocabulary");
    add(n);
  }
}

std::size_t LabelVocab::add(const std::string& name) {
  if (auto it = index_.find(name); it != index_.end()) return it->second;
  const std::size_t idx = names_.size();
  names_.push_back(name);
  index_.emplace(name, idx);
  return idx;
}

std::optional<std::size_t> LabelVocab::find(std::string_view name) const {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  return std::nullopt;
}

std::size_t LabelVocab::index_of(std::string_view name) const {
  if (auto idx = find(name)) return *idx;
  throw DataError("unknown label '" + std::string(name) + "'");
}

const std::string& LabelVocab::name(std::size_t index) const {
  if (index >= names_.size()) throw IndexError(0, index, names_.size());
  return names_[index];
}

bool Dataset::labeled() const {
  return !documents.empty() &&
         std::all_of(documents.begin(), documents.end(), [](const Document& d) { return d.label.has_value(); });
}

std::vector<std::size_t> Dataset::label_indices() const {
  std::vector<std::size_t> out;
  out.reserve(documents.size());
  for (const auto& d : documents) {
    if (!d.label) throw DataError("document '" + d.id + "' has no label");
    out.push_back(vocab.index_of(*d.label));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

class DatasetBuilder {
 public:
  DatasetBuilder(const std::filesystem::path& path) : source_(path.string()), stem_(path.stem().string()) {}

  void add(std::size_t line, std::optional<std::string> id, std::string text,
           std::optional<std::string> label) {
    if (blank(text)) throw ParseError(source_, line, "empty `text` field");
    Document doc;
    doc.id = id ? std::move(*id) : stem_ + "-" + std::to_string(line);
    if (!ids_.insert(doc.id).second) throw ParseError(source_, line, "duplicate id '" + doc.id + "'");
    doc.text = std::move(text);
    if (label) {
      ds_.vocab.add(*label);
      doc.label = std::move(label);
    }
    ds_.documents.push_back(std::move(doc));
  }

  Dataset finish() {
    if (ds_.documents.empty()) throw ParseError(source_, 0, "no records");
    ds_.provenance = source_;
    return std::move(ds_);
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::string stem_;
  std::set<std::string> ids_;
  Dataset ds_;
};

std::optional<std::string> string_field(const json& obj, const char* key, const std::string& source,
                                        std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw ParseError(source, line, std::string("field `") + key + "` must be a string");
}

Dataset load_jsonl(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  DatasetBuilder builder(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(builder.source(), lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(builder.source(), lineno, "expected a JSON object");
    auto text = string_field(obj, "text", builder.source(), lineno);
    if (!text) throw ParseError(builder.source(), lineno, "missing `text` field");
    builder.add(lineno, string_field(obj, "id", builder.source(), lineno), std::move(*text),
                string_field(obj, "label", builder.source(), lineno));
  }
  return builder.finish();
}

struct CsvRecord {
  std::size_t line;
  std::vector<std::string> fields;
};

// RFC 4180: quoted fields may contain commas, doubled quotes and newlines.
std::vector<CsvRecord> parse_csv(const std::string& text, const std::string& source) {
  std::vector<CsvRecord> records;
  CsvRecord current{1, {}};
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  auto end_record = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    if (!(current.fields.size() == 1 && current.fields[0].empty())) records.push_back(std::move(current));
    current = CsvRecord{line, {}};
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) throw ParseError(source, line, "stray quote in unquoted field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        current.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw ParseError(source, line, "unterminated quoted field");
  if (!field.empty() || !current.fields.empty()) end_record();
  return records;
}

Dataset load_csv(const std::filesystem::path& path) {
  DatasetBuilder builder(path);
  const auto records = parse_csv(io::read_text(path), builder.source());
  if (records.empty()) throw ParseError(builder.source(), 0, "empty file");
  const auto& header = records.front().fields;
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto text_col = column("text");
  if (!text_col) throw ParseError(builder.source(), 1, "header has no `text` column");
  const auto label_col = column("label");
  const auto id_col = column("id");
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size()) {
      throw ParseError(builder.source(), rec.line,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(rec.fields.size()));
    }
    std::optional<std::string> label;
    if (label_col && !rec.fields[*label_col].empty()) label = rec.fields[*label_col];
    std::optional<std::string> id;
    if (id_col && !rec.fields[*id_col].empty()) id = rec.fields[*id_col];
    builder.add(rec.line, std::move(id), rec.fields[*text_col], std::move(label));
  }
  return builder.finish();
}

}  // namespace

Format format_for(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? Format::csv : Format::jsonl;
}

Dataset load(const std::filesystem::path& path, Format format) {
  return format == Format::csv ? load_csv(path) : load_jsonl(path);
}

Dataset load(const std::filesystem::path& path) { return load(path, format_for(path)); }

std::string to_jsonl(const Dataset& ds) {
  std::string out;
  for (const auto& doc : ds.documents) {
    json obj;
    obj["id"] = doc.id;
    obj["text"] = doc.text;
    if (doc.label) obj["label"] = *doc.label;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const Dataset& ds, const std::filesystem::path& path) { io::write_text(path, to_jsonl(ds)); }

// ---------------------------------------------------------------------------
// Splitting

Split split(const Dataset& ds, std::uint64_t seed) {
  if (!ds.labeled()) throw DataError("split: dataset '" + ds.provenance + "' is not fully labeled");
  const std::size_t n = ds.size();
  if (n < 10) throw DataError("split: need at least 10 documents, got " + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5117));
  rng.shuffle(std::span<std::size_t>(order));

  const std::size_t n_val = n / 10;
  const std::size_t n_test = n / 10;
  const std::size_t n_train = n - n_val - n_test;

  auto take = [&](std::size_t begin, std::size_t count, const char* part) {
    Dataset out;
    out.vocab = ds.vocab;
    out.provenance = ds.provenance + "#" + part;
    out.documents.reserve(count);
    for (std::size_t i = begin; i < begin + count; ++i) out.documents.push_back(ds.documents[order[i]]);
    return out;
  };
  return Split{take(0, n_train, "train"), take(n_train, n_val, "val"), take(n_train + n_val, n_test, "test")};
}

// ---------------------------------------------------------------------------
// Featurization

double FeatureVector::norm() const {
  double sq = 0.0;
  for (const auto& [idx, w] : entries) sq += w * w;
  return std::sqrt(sq);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    // Bytes of multi-byte UTF-8 sequences stay inside tokens.
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

FeatureVector featurize(std::string_view text, std::size_t dim) {
  if (dim < 2) throw ConfigError("featurize: dimension must be at least 2");
  std::map<std::uint32_t, double> counts;
  for (const auto& tok : tokenize(text)) counts[static_cast<std::uint32_t>(fnv1a64(tok) % dim)] += 1.0;
  FeatureVector fv;
  fv.dim = dim;
  fv.entries.assign(counts.begin(), counts.end());
  const double n = fv.norm();
  if (n > 0.0)
    for (auto& [idx, w] : fv.entries) w /= n;
  return fv;
}

FeaturizedSet featurize(const Dataset& ds, std::size_t dim) {
  FeaturizedSet out;
  out.features.reserve(ds.size());
  for (const auto& d : ds.documents) out.features.push_back(featurize(d.text, dim));
  if (ds.labeled()) out.labels = ds.label_indices();
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

SynthCorpora synth_generate(const SynthConfig& cfg) {
  if (!(cfg.overlap >= 0.0 && cfg.overlap <= 1.0)) {
    throw ConfigError("synth: overlap must lie in [0, 1], got " + std::to_string(cfg.overlap));
  }
  if (cfg.labels < 2) throw ConfigError("synth: need at least 2 labels");
  if (cfg.n_per_label == 0) throw ConfigError("synth: n_per_label must be positive");
  if (cfg.doc_len == 0) throw ConfigError("synth: doc_len must be positive");

  Rng rng(derive_seed(cfg.seed, 0x5e7));

  std::vector<std::vector<std::string>> blocks(cfg.labels);
  std::vector<std::string> in_union;
  for (std::size_t c = 0; c < cfg.labels; ++c) {
    for (std::size_t k = 0; k < kSynthBlockSize; ++k) {
      blocks[c].push_back("c" + std::to_string(c) + "w" + std::to_string(k));
      in_union.push_back(blocks[c].back());
    }
  }

  const auto n_shared = static_cast<std::size_t>(std::llround(cfg.overlap * kSynthBlockSize));
  rng.shuffle(std::span<std::string>(in_union));
  std::vector<std::string> ood_block(in_union.begin(), in_union.begin() + static_cast<std::ptrdiff_t>(n_shared));
  for (std::size_t k = n_shared; k < kSynthBlockSize; ++k) ood_block.push_back("oodw" + std::to_string(k));

  auto make_text = [&](const std::vector<std::string>& block) {
    std::string text;
    for (std::size_t t = 0; t < cfg.doc_len; ++t) {
      if (t) text += ' ';
      text += block[rng.below(block.size())];
    }
    return text;
  };

  SynthCorpora out;
  const std::string tag = "synth:seed=" + std::to_string(cfg.seed);
  out.in_dist.provenance = tag + ":in";
  out.ood.provenance = tag + ":ood";
  for (std::size_t c = 0; c < cfg.labels; ++c) out.in_dist.vocab.add("label" + std::to_string(c));

  for (std::size_t i = 0; i < cfg.n_per_label; ++i) {
    for (std::size_t c = 0; c < cfg.labels; ++c) {
      Document doc;
      doc.id = "in-" + std::to_string(i * cfg.labels + c);
      doc.text = make_text(blocks[c]);
      doc.label = out.in_dist.vocab.name(c);
      out.in_dist.documents.push_back(std::move(doc));
    }
  }
  const std::size_t n_ood = cfg.n_ood ? cfg.n_ood : cfg.n_per_label;
  for (std::size_t i = 0; i < n_ood; ++i) {
    out.ood.documents.push_back(Document{"ood-" + std::to_string(i), make_text(ood_block), std::nullopt});
  }
  return out;
}

}  // namespace idil::data
