#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "idil/autodiff.hpp"
#include "idil/data.hpp"

namespace idil::model {

struct ModelConfig {
  std::size_t input_dim = 1u << 14;
  std::size_t hidden_dim = 64;
  std::size_t num_labels = 2;
  std::uint64_t init_seed = 0;

  bool operator==(const ModelConfig&) const = default;
};

struct NamedParameter {
  std::string name;
  ad::Tensor tensor;
};

struct ForwardResult {
  ad::Tensor probs;        // [batch x labels]
  ad::Tensor penultimate;  // [batch x hidden], rectified
};

// One hidden rectifier layer followed by a softmax head.
class MlpClassifier {
 public:
  // Glorot-uniform weights, zero biases, deterministic in cfg.init_seed.
  static MlpClassifier init(const ModelConfig& cfg);

  // Builds a classifier from explicit parameter values (checkpoint loading).
  static MlpClassifier from_parameters(const ModelConfig& cfg, std::vector<std::vector<double>> values);

  const ModelConfig& config() const noexcept { return cfg_; }

  // Rows are independent; recorded on the active tape when one exists.
  ForwardResult forward(std::span<const data::FeatureVector> batch) const;

  // Inference in fixed-size chunks without recording. Same values as forward().
  ForwardResult predict(std::span<const data::FeatureVector> docs, std::size_t chunk = 128) const;

  // W1, b1, W2, b2 in that order.
  std::vector<NamedParameter> parameters() const;
  void zero_grad();

  // Deep copy with fresh parameter storage.
  MlpClassifier clone() const;

  std::size_t parameter_count() const;

 private:
  MlpClassifier() = default;

  ModelConfig cfg_;
  ad::Tensor w1_, b1_, w2_, b2_;
};

// Dense [batch x dim] matrix from sparse rows. Throws on dimension mismatch.
ad::Tensor densify(std::span<const data::FeatureVector> batch, std::size_t dim);

}  // namespace idil::model
