#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "idil/trainer.hpp"

namespace idil::cli {

enum class Confidence { max_softmax, mahalanobis };

std::string to_string(Confidence c);
Confidence parse_confidence(const std::string& name);

// One experiment: an in-distribution corpus, the OOD corpora it is judged
// against, and how to train and score.
struct ExperimentConfig {
  std::filesystem::path in_dist;
  std::vector<std::filesystem::path> ood;
  std::size_t feature_dim = 1u << 14;
  std::size_t hidden_dim = 64;
  train::TrainConfig train;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  Confidence confidence = Confidence::max_softmax;
  std::filesystem::path out_dir = "out";
  // Optional OOD sample scored after each epoch (validation curve). Never
  // used for gradients.
  std::optional<std::filesystem::path> val_ood;
  std::optional<double> mahalanobis_eps;
  std::size_t bins = 20;
};

// INI-style file:
//
//   [data]    in_dist, ood (comma separated), feature_dim
//   [model]   hidden_dim
//   [train]   loss, epochs, batch_size, lr (number or "finetune"),
//             weight_decay, beta1, beta2, eps, seeds, val_ood
//   [eval]    confidence, bins, mahalanobis_eps
//   [output]  dir
//
// Values may be double-quoted. Relative paths resolve against the file's
// directory. Unknown sections or keys are rejected.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {},
                              const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical INI rendering, written into every output directory.
std::string render_config(const ExperimentConfig& cfg);

// Output directory after applying the IDIL_OOD_OUT environment override.
std::filesystem::path resolve_out_dir(const std::filesystem::path& configured);

inline constexpr const char* kOutDirEnv = "IDIL_OOD_OUT";

}  // namespace idil::cli
