#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "idil/data.hpp"
#include "idil/error.hpp"
#include "idil/io.hpp"
#include "oracles.hpp"

namespace idil::data {
namespace {

using idil::testing::TempDir;

Dataset labeled_dataset(std::size_t n, std::size_t labels = 3) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string label = "L" + std::to_string(i % labels);
    ds.vocab.add(label);
    ds.documents.push_back({"doc-" + std::to_string(i), "text " + std::to_string(i), label});
  }
  ds.provenance = "memory";
  return ds;
}

TEST(Load, JsonlBuildsVocabInFirstAppearanceOrder) {
  TempDir dir;
  io::write_text(dir / "c.jsonl", "{\"text\":\"a\",\"label\":\"X\"}\n{\"text\":\"b\",\"label\":\"Y\"}\n");
  const auto ds = load(dir / "c.jsonl");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.vocab.names(), (std::vector<std::string>{"X", "Y"}));
  EXPECT_EQ(ds.documents[1].text, "b");
  EXPECT_TRUE(ds.labeled());
  EXPECT_EQ(ds.label_indices(), (std::vector<std::size_t>{0, 1}));
}

TEST(Load, CsvWithoutLabelColumnIsUnlabeled) {
  TempDir dir;
  io::write_text(dir / "ood.csv", "text\nfirst doc\n\"second, quoted \"\"doc\"\"\"\n");
  const auto ds = load(dir / "ood.csv");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_FALSE(ds.labeled());
  EXPECT_TRUE(ds.vocab.empty());
  EXPECT_EQ(ds.documents[1].text, "second, quoted \"doc\"");
  EXPECT_FALSE(ds.documents[0].label.has_value());
}

TEST(Load, CsvWithLabelsAndCrlf) {
  TempDir dir;
  io::write_text(dir / "in.csv", "id,text,label\r\na1,hello world,greet\r\na2,\"multi\nline\",other\r\n");
  const auto ds = load(dir / "in.csv");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.documents[0].id, "a1");
  EXPECT_EQ(ds.documents[1].text, "multi\nline");
  EXPECT_EQ(ds.vocab.names(), (std::vector<std::string>{"greet", "other"}));
}

TEST(Load, EmptyTextNamesTheLine) {
  TempDir dir;
  io::write_text(dir / "bad.jsonl", "{\"text\":\"ok\"}\n{\"text\":\"  \"}\n");
  try {
    load(dir / "bad.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(Load, MissingTextFieldNamesTheLine) {
  TempDir dir;
  io::write_text(dir / "bad.jsonl", "{\"text\":\"ok\"}\n\n{\"label\":\"X\"}\n");
  try {
    load(dir / "bad.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Load, EmptyFileAndMissingFileFail) {
  TempDir dir;
  io::write_text(dir / "empty.jsonl", "");
  EXPECT_THROW(load(dir / "empty.jsonl"), ParseError);
  io::write_text(dir / "empty.csv", "");
  EXPECT_THROW(load(dir / "empty.csv"), ParseError);
  EXPECT_THROW(load(dir / "nope.jsonl"), DataError);
}

TEST(Load, MalformedInputs) {
  TempDir dir;
  io::write_text(dir / "bad.jsonl", "{\"text\": \"a\"\n");
  EXPECT_THROW(load(dir / "bad.jsonl"), ParseError);
  io::write_text(dir / "dup.jsonl", "{\"id\":\"x\",\"text\":\"a\"}\n{\"id\":\"x\",\"text\":\"b\"}\n");
  EXPECT_THROW(load(dir / "dup.jsonl"), ParseError);
  io::write_text(dir / "notext.csv", "body,label\nx,y\n");
  EXPECT_THROW(load(dir / "notext.csv"), ParseError);
  io::write_text(dir / "ragged.csv", "text,label\nx,y,z\n");
  EXPECT_THROW(load(dir / "ragged.csv"), ParseError);
}

TEST(Load, JsonlRoundTrip) {
  TempDir dir;
  auto ds = labeled_dataset(7);
  ds.documents[2].label.reset();
  ds.documents[3].text = "quotes \" and \\ and unicode \xc3\xa9";
  write_jsonl(ds, dir / "rt.jsonl");
  const auto back = load(dir / "rt.jsonl");
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.documents[i].id, ds.documents[i].id);
    EXPECT_EQ(back.documents[i].text, ds.documents[i].text);
    EXPECT_EQ(back.documents[i].label, ds.documents[i].label);
  }
}

TEST(LabelVocab, RoundTripsAndRejectsUnknown) {
  LabelVocab v;
  EXPECT_EQ(v.add("a"), 0u);
  EXPECT_EQ(v.add("b"), 1u);
  EXPECT_EQ(v.add("a"), 0u);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.index_of(v.name(i)), i);
  EXPECT_THROW(v.index_of("c"), DataError);
  EXPECT_THROW(v.name(2), IndexError);
  EXPECT_THROW(LabelVocab({"x", "x"}), DataError);
}

TEST(Split, Sizes) {
  const auto s = split(labeled_dataset(100), 1);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.val.size(), 10u);
  EXPECT_EQ(s.test.size(), 10u);

  const auto big = split(labeled_dataset(13081), 1);
  EXPECT_EQ(big.train.size(), 10465u);
  EXPECT_EQ(big.val.size(), 1308u);
  EXPECT_EQ(big.test.size(), 1308u);
}

std::vector<std::string> ids(const Dataset& ds) {
  std::vector<std::string> out;
  for (const auto& d : ds.documents) out.push_back(d.id);
  return out;
}

TEST(Split, DeterministicPerSeed) {
  const auto ds = labeled_dataset(57);
  const auto a = split(ds, 7);
  const auto b = split(ds, 7);
  EXPECT_EQ(ids(a.train), ids(b.train));
  EXPECT_EQ(ids(a.val), ids(b.val));
  EXPECT_EQ(ids(a.test), ids(b.test));
  EXPECT_NE(ids(split(ds, 8).train), ids(a.train));
}

TEST(Split, PartitionsTheInput) {
  for (std::size_t n : {10u, 11u, 19u, 57u, 300u}) {
    const auto ds = labeled_dataset(n);
    const auto s = split(ds, n);
    std::multiset<std::string> seen;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      EXPECT_EQ(part->vocab, ds.vocab);
      for (const auto& d : part->documents) seen.insert(d.id);
    }
    const auto all = ids(ds);
    EXPECT_EQ(seen, std::multiset<std::string>(all.begin(), all.end()));
  }
}

TEST(Split, Preconditions) {
  auto ds = labeled_dataset(20);
  ds.documents[4].label.reset();
  EXPECT_THROW(split(ds, 1), DataError);
  EXPECT_THROW(split(labeled_dataset(9), 1), DataError);
}

TEST(Featurize, Deterministic) {
  EXPECT_EQ(featurize("Some words, some more!", 1024), featurize("Some words, some more!", 1024));
}

TEST(Featurize, CaseFoldingCollapsesToOneIndex) {
  const auto fv = featurize("The the THE", 1 << 14);
  ASSERT_EQ(fv.entries.size(), 1u);
  EXPECT_EQ(fv.entries[0].second, 1.0);
}

TEST(Featurize, IndexIsFnvModuloDim) {
  // Published FNV-1a 64 test vectors.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(fnv1a64("abc"), oracle::fnv1a64("abc"));

  const auto fv = featurize("abc", 1 << 15);
  ASSERT_EQ(fv.entries.size(), 1u);
  EXPECT_EQ(fv.entries[0].first, oracle::fnv1a64("abc") % 32768);
}

TEST(Featurize, UnitNormForAnyTokenizedText) {
  Rng rng(21);
  const std::string alphabet = "abcXYZ019 .,-_\t\xc3\xa9";
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const auto len = 1 + rng.below(60);
    for (std::size_t i = 0; i < len; ++i) text += alphabet[rng.below(alphabet.size())];
    const auto fv = featurize(text, 64 << rng.below(6));
    if (tokenize(text).empty()) {
      EXPECT_TRUE(fv.entries.empty());
    } else {
      EXPECT_NEAR(fv.norm(), 1.0, 1e-12) << text;
    }
    for (std::size_t i = 0; i < fv.entries.size(); ++i) {
      EXPECT_LT(fv.entries[i].first, fv.dim);
      if (i) EXPECT_LT(fv.entries[i - 1].first, fv.entries[i].first);
    }
  }
}

TEST(Featurize, TokenizerAndEdgeCases) {
  EXPECT_EQ(tokenize("Hello, WORLD-42!"), (std::vector<std::string>{"hello", "world", "42"}));
  EXPECT_TRUE(featurize("... ---", 16).entries.empty());
  EXPECT_THROW(featurize("x", 1), ConfigError);
}

TEST(Featurize, CountsWeighRepeatedTokens) {
  // "a a b" -> counts (2, 1) -> (2, 1) / sqrt(5), unless both hash together.
  const auto fv = featurize("a a b", 1 << 20);
  ASSERT_EQ(fv.entries.size(), 2u);
  const auto ia = oracle::fnv1a64("a") % (1 << 20);
  for (const auto& [idx, w] : fv.entries) EXPECT_NEAR(w, (idx == ia ? 2.0 : 1.0) / std::sqrt(5.0), 1e-15);
}

std::set<std::string> token_set(const Dataset& ds) {
  std::set<std::string> out;
  for (const auto& d : ds.documents)
    for (auto& t : tokenize(d.text)) out.insert(t);
  return out;
}

TEST(Synth, DisjointAtZeroOverlap) {
  const auto c = synth_generate({.n_per_label = 50, .labels = 4, .overlap = 0.0, .doc_len = 20, .seed = 3});
  EXPECT_EQ(c.in_dist.size(), 200u);
  EXPECT_EQ(c.ood.size(), 50u);
  const auto in = token_set(c.in_dist), ood = token_set(c.ood);
  std::vector<std::string> shared;
  std::set_intersection(in.begin(), in.end(), ood.begin(), ood.end(), std::back_inserter(shared));
  EXPECT_TRUE(shared.empty());
  EXPECT_FALSE(c.ood.labeled());
  for (const auto& d : c.ood.documents) EXPECT_FALSE(d.label.has_value());
  EXPECT_EQ(c.in_dist.vocab.size(), 4u);
}

TEST(Synth, OverlapSharesTokens) {
  const auto c = synth_generate({.n_per_label = 200, .labels = 4, .overlap = 0.5, .doc_len = 20, .seed = 3});
  const auto in = token_set(c.in_dist), ood = token_set(c.ood);
  std::size_t shared = 0;
  for (const auto& t : ood) shared += in.count(t);
  EXPECT_GT(shared, 0u);
  EXPECT_LE(shared, kSynthBlockSize / 2);
}

TEST(Synth, LabelsAreBalancedAndDocsHaveRequestedLength) {
  const auto c = synth_generate({.n_per_label = 30, .labels = 3, .overlap = 0.0, .doc_len = 7, .seed = 1});
  std::vector<std::size_t> counts(3);
  for (auto y : c.in_dist.label_indices()) ++counts[y];
  EXPECT_EQ(counts, (std::vector<std::size_t>{30, 30, 30}));
  for (const auto& d : c.in_dist.documents) EXPECT_EQ(tokenize(d.text).size(), 7u);
}

TEST(Synth, SameSeedSameBytes) {
  const SynthConfig cfg{.n_per_label = 40, .labels = 4, .overlap = 0.2, .doc_len = 12, .seed = 9};
  const auto a = synth_generate(cfg), b = synth_generate(cfg);
  EXPECT_EQ(to_jsonl(a.in_dist), to_jsonl(b.in_dist));
  EXPECT_EQ(to_jsonl(a.ood), to_jsonl(b.ood));
  auto other = cfg;
  other.seed = 10;
  EXPECT_NE(to_jsonl(synth_generate(other).in_dist), to_jsonl(a.in_dist));
}

TEST(Synth, RejectsBadConfig) {
  EXPECT_THROW(synth_generate({.overlap = 1.5}), ConfigError);
  EXPECT_THROW(synth_generate({.overlap = -0.1}), ConfigError);
  EXPECT_THROW(synth_generate({.labels = 1}), ConfigError);
}

}  // namespace
}  // namespace idil::data
