#include "idil/model.hpp"

#include <cmath>

#include "idil/error.hpp"
#include "idil/random.hpp"

namespace idil::model {

namespace {

void validate(const ModelConfig& cfg) {
  if (cfg.input_dim == 0 || cfg.hidden_dim == 0 || cfg.num_labels == 0) {
    throw ConfigError("model: input_dim, hidden_dim and num_labels must all be >= 1 (got " +
                      std::to_string(cfg.input_dim) + ", " + std::to_string(cfg.hidden_dim) + ", " +
                      std::to_string(cfg.num_labels) + ")");
  }
}

std::vector<double> glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(fan_in * fan_out);
  for (auto& v : w) v = rng.uniform(-bound, bound);
  return w;
}

}  // namespace

MlpClassifier MlpClassifier::init(const ModelConfig& cfg) {
  validate(cfg);
  Rng rng(derive_seed(cfg.init_seed, 0x1417));
  std::vector<std::vector<double>> values;
  values.push_back(glorot(rng, cfg.input_dim, cfg.hidden_dim));
  values.emplace_back(cfg.hidden_dim, 0.0);
  values.push_back(glorot(rng, cfg.hidden_dim, cfg.num_labels));
  values.emplace_back(cfg.num_labels, 0.0);
  return from_parameters(cfg, std::move(values));
}

MlpClassifier MlpClassifier::from_parameters(const ModelConfig& cfg, std::vector<std::vector<double>> values) {
  validate(cfg);
  if (values.size() != 4) throw ShapeError("model: expected 4 parameter arrays, got " + std::to_string(values.size()));
  MlpClassifier m;
  m.cfg_ = cfg;
  m.w1_ = ad::Tensor::parameter({cfg.input_dim, cfg.hidden_dim}, std::move(values[0]));
  m.b1_ = ad::Tensor::parameter({cfg.hidden_dim}, std::move(values[1]));
  m.w2_ = ad::Tensor::parameter({cfg.hidden_dim, cfg.num_labels}, std::move(values[2]));
  m.b2_ = ad::Tensor::parameter({cfg.num_labels}, std::move(values[3]));
  return m;
}

ad::Tensor densify(std::span<const data::FeatureVector> batch, std::size_t dim) {
  std::vector<double> x(batch.size() * dim, 0.0);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    if (batch[r].dim != dim) {
      throw ShapeError("model: feature dimension mismatch at row " + std::to_string(r) + ": expected " +
                       std::to_string(dim) + ", got " + std::to_string(batch[r].dim));
    }
    for (const auto& [idx, w] : batch[r].entries) x[r * dim + idx] = w;
  }
  return ad::Tensor::matrix(batch.size(), dim, std::move(x));
}

ForwardResult MlpClassifier::forward(std::span<const data::FeatureVector> batch) const {
  if (batch.empty()) throw ShapeError("model: empty batch");
  const ad::Tensor x = densify(batch, cfg_.input_dim);
  ad::Tensor hidden = ad::relu(ad::affine(x, w1_, b1_));
  ad::Tensor probs = ad::softmax_rows(ad::affine(hidden, w2_, b2_));
  return {std::move(probs), std::move(hidden)};
}

ForwardResult MlpClassifier::predict(std::span<const data::FeatureVector> docs, std::size_t chunk) const {
  if (docs.empty()) throw ShapeError("model: nothing to predict");
  MlpClassifier frozen = clone();
  for (auto& p : frozen.parameters()) p.tensor.set_requires_grad(false);

  std::vector<double> probs;
  std::vector<double> hidden;
  probs.reserve(docs.size() * cfg_.num_labels);
  hidden.reserve(docs.size() * cfg_.hidden_dim);
  for (std::size_t begin = 0; begin < docs.size(); begin += chunk) {
    const auto part = docs.subspan(begin, std::min(chunk, docs.size() - begin));
    const auto out = frozen.forward(part);
    probs.insert(probs.end(), out.probs.values().begin(), out.probs.values().end());
    hidden.insert(hidden.end(), out.penultimate.values().begin(), out.penultimate.values().end());
  }
  return {ad::Tensor::matrix(docs.size(), cfg_.num_labels, std::move(probs)),
          ad::Tensor::matrix(docs.size(), cfg_.hidden_dim, std::move(hidden))};
}

std::vector<NamedParameter> MlpClassifier::parameters() const {
  return {{"W1", w1_}, {"b1", b1_}, {"W2", w2_}, {"b2", b2_}};
}

void MlpClassifier::zero_grad() {
  for (auto& p : parameters()) p.tensor.zero_grad();
}

MlpClassifier MlpClassifier::clone() const {
  MlpClassifier m;
  m.cfg_ = cfg_;
  m.w1_ = w1_.clone();
  m.b1_ = b1_.clone();
  m.w2_ = w2_.clone();
  m.b2_ = b2_.clone();
  return m;
}

std::size_t MlpClassifier::parameter_count() const {
  return w1_.size() + b1_.size() + w2_.size() + b2_.size();
}

}  // namespace idil::model
