#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idil/data.hpp"
#include "idil/losses.hpp"
#include "idil/model.hpp"

namespace idil::train {

// Learning rate used for transformer fine-tuning; selectable as the
// "finetune" preset.
inline constexpr double kFinetuneLearningRate = 5e-5;

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  AdamWConfig adamw;
  std::uint64_t seed = 1;
  losses::LossVariant variant = losses::LossVariant::idil;

  // Throws ConfigError when the configuration cannot train.
  void validate() const;
};

// lr0 * (1 - step / total_steps), no warm-up.
double linear_lr(std::size_t step, std::size_t total_steps, double lr0);

// Moment buffers, one per parameter, plus the shared step counter.
struct AdamWState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

// One decoupled-weight-decay Adam update from each parameter's grad buffer:
//   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
// Parameters without a grad buffer are treated as having zero gradient.
// Throws NumericError naming the parameter on a non-finite gradient.
void adamw_step(std::span<model::NamedParameter> params, AdamWState& state, double lr, const AdamWConfig& cfg);

struct StepRecord {
  std::size_t step = 0;  // 1-based
  std::size_t epoch = 0; // 1-based
  double lr = 0.0;
  double loss = 0.0;
};

// Scores from an OOD validation probe, as fractions.
struct ValidationMetrics {
  double fpr95 = 0.0;
  double err = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double seconds = 0.0;
  double mean_loss = 0.0;
  std::optional<ValidationMetrics> validation;
};

struct TrainLog {
  TrainConfig config;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::vector<std::string> warnings;
};

// Called after each epoch with the current parameters.
using ValidationHook = std::function<ValidationMetrics(const model::MlpClassifier&, std::size_t epoch)>;

// Shuffled mini-batches per epoch (last partial batch kept), linear decay
// over epochs * ceil(n / batch_size) steps. Deterministic in cfg.seed.
TrainLog train(model::MlpClassifier& model, const data::FeaturizedSet& train_set, const TrainConfig& cfg,
               const ValidationHook& val_hook = {});

std::size_t total_steps(std::size_t n_train, const TrainConfig& cfg);

// `step,epoch,lr,loss`
std::string steps_csv(const TrainLog& log);
// `epoch,fpr95,err,auroc,aupr,mean_loss,seconds`; metric cells empty without a hook.
std::string epochs_csv(const TrainLog& log);

}  // namespace idil::train
