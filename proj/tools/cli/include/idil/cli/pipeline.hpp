#pragma once

// Experiment steps shared by the subcommands: train one seed on the
// training split, persist its artifacts, score the held-out test split and
// OOD corpora, and assemble report rows.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idil/checkpoint.hpp"
#include "idil/cli/config.hpp"
#include "idil/data.hpp"
#include "idil/mahalanobis.hpp"
#include "idil/report.hpp"
#include "idil/trainer.hpp"

namespace idil::cli {

// Report name of a corpus: the file stem.
std::string dataset_name(const std::filesystem::path& path);

struct TrainedRun {
  model::Checkpoint checkpoint;
  train::TrainLog log;
  std::optional<mahalanobis::GaussianStats> stats;
  std::size_t n_train = 0;
};

// Splits `in_dist` with `seed`, trains on the training split only and fits
// Mahalanobis statistics on its penultimate features. `val_ood`, when given,
// is scored against the validation split after every epoch.
TrainedRun train_run(const ExperimentConfig& cfg, const data::Dataset& in_dist, std::uint64_t seed,
                     const data::Dataset* val_ood = nullptr);

// model.ckpt, steps.csv, epochs.csv, manifest.json and (if fitted)
// mahalanobis.json inside `dir`.
void write_run(const TrainedRun& run, const ExperimentConfig& cfg, const std::filesystem::path& dir);

std::filesystem::path seed_dir(const std::filesystem::path& out_dir, std::uint64_t seed);

struct SeedScores {
  std::uint64_t seed = 0;
  double accuracy = 0.0;               // on the in-distribution test split
  std::vector<double> in_scores;       // test split confidences
  std::vector<std::vector<double>> ood_scores;  // one list per OOD corpus
};

// Throws DataError when the checkpoint's labels differ from the corpus vocabulary.
SeedScores score_run(const model::Checkpoint& ckpt, const std::optional<mahalanobis::GaussianStats>& stats,
                     const data::Dataset& in_dist, std::span<const data::Dataset> oods, Confidence confidence,
                     std::optional<double> mahalanobis_eps = std::nullopt);

std::string method_name(losses::LossVariant variant, Confidence confidence);

// Per OOD corpus: one row per seed, then the mean row.
std::vector<metrics::MetricsReport> report_rows(const std::string& in_name, std::span<const std::string> ood_names,
                                                const std::string& method, std::span<const SeedScores> scores);

std::string config_hash(const ExperimentConfig& cfg);

}  // namespace idil::cli
