#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "idil/model.hpp"

namespace idil::model {

inline constexpr int kCheckpointVersion = 1;

// Everything needed to score new documents with a trained classifier.
struct Checkpoint {
  MlpClassifier model;
  std::vector<std::string> labels;
  std::size_t feature_dim = 0;
  std::uint64_t seed = 0;
  std::string loss;
};

// Binary container: magic, version, a JSON header with the configuration
// and label names, then the raw parameter arrays. save/load is value-exact.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source = "<memory>");

}  // namespace idil::model
