#include "idil/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "idil/error.hpp"
#include "idil/random.hpp"

namespace idil::train {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (losses::is_pairwise(variant) && batch_size < 2) {
    throw ConfigError("train: batch_size must be >= 2 for pairwise losses");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train: lr must be positive");
  if (!(adamw.weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be non-negative");
}

double linear_lr(std::size_t step, std::size_t total, double lr0) {
  if (total == 0) throw ConfigError("linear_lr: total_steps must be positive");
  if (step > total) throw ConfigError("linear_lr: step beyond total_steps");
  return lr0 * (1.0 - static_cast<double>(step) / static_cast<double>(total));
}

void adamw_step(std::span<model::NamedParameter> params, AdamWState& state, double lr, const AdamWConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.size(), 0.0);
      state.v.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adamw: state tracks a different parameter list");

  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto g = params[k].tensor.grad();
    if (state.m[k].size() != params[k].tensor.size()) {
      throw ShapeError("adamw: moment buffer shape mismatch for " + params[k].name);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericError("adamw: non-finite gradient in parameter " + params[k].name + " at index " +
                           std::to_string(i));
      }
    }
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k].tensor.mutable_values();
    const auto g = params[k].tensor.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * theta[i]);
    }
  }
}

std::size_t total_steps(std::size_t n_train, const TrainConfig& cfg) {
  return cfg.epochs * ((n_train + cfg.batch_size - 1) / cfg.batch_size);
}

TrainLog train(model::MlpClassifier& model, const data::FeaturizedSet& train_set, const TrainConfig& cfg,
               const ValidationHook& val_hook) {
  cfg.validate();
  const std::size_t n = train_set.features.size();
  if (n == 0) throw DataError("train: empty training set");
  if (train_set.labels.size() != n) throw DataError("train: training set must be fully labeled");
  for (auto y : train_set.labels) {
    if (y >= model.config().num_labels) {
      throw DataError("train: label index " + std::to_string(y) + " exceeds model output size " +
                      std::to_string(model.config().num_labels));
    }
  }

  TrainLog log;
  log.config = cfg;
  const std::size_t steps_total = total_steps(n, cfg);
  auto params = model.parameters();
  AdamWState state;
  Rng rng(derive_seed(cfg.seed, 0x7a1));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<data::FeatureVector> batch;
  std::vector<std::size_t> batch_labels;

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    rng.shuffle(std::span<std::size_t>(order));
    double loss_total = 0.0;
    std::size_t batches = 0;
    bool any_pairs = false;

    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      batch.clear();
      batch_labels.clear();
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(train_set.features[order[i]]);
        batch_labels.push_back(train_set.labels[order[i]]);
      }
      if (std::set<std::size_t>(batch_labels.begin(), batch_labels.end()).size() > 1) any_pairs = true;

      const double lr = linear_lr(step, steps_total, cfg.lr);
      double loss_value = 0.0;
      {
        ad::Tape tape;
        model.zero_grad();
        const auto out = model.forward(batch);
        const ad::Tensor loss = losses::batch_loss(out.probs, batch_labels, cfg.variant);
        loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
          throw NumericError("train: non-finite loss at step " + std::to_string(step + 1));
        }
        tape.backward(loss);
      }
      adamw_step(params, state, lr, cfg.adamw);
      ++step;
      log.steps.push_back({step, epoch, lr, loss_value});
      loss_total += loss_value;
      ++batches;
    }

    if (losses::is_pairwise(cfg.variant) && !any_pairs) {
      log.warnings.push_back("epoch " + std::to_string(epoch) +
                             ": every mini-batch held a single label; the pairwise loss was identically zero");
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_total / static_cast<double>(batches);
    if (val_hook) rec.validation = val_hook(model, epoch);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log.epochs.push_back(rec);
  }
  return log;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

std::string steps_csv(const TrainLog& log) {
  std::string out = "step,epoch,lr,loss\n";
  for (const auto& s : log.steps) {
    out += std::to_string(s.step) + "," + std::to_string(s.epoch) + "," + fmt("%.9g", s.lr) + "," +
           fmt("%.17g", s.loss) + "\n";
  }
  return out;
}

std::string epochs_csv(const TrainLog& log) {
  std::string out = "epoch,fpr95,err,auroc,aupr,mean_loss,seconds\n";
  for (const auto& e : log.epochs) {
    out += std::to_string(e.epoch) + ",";
    if (e.validation) {
      const auto& v = *e.validation;
      out += fmt("%.2f", 100 * v.fpr95) + "," + fmt("%.2f", 100 * v.err) + "," + fmt("%.2f", 100 * v.auroc) + "," +
             fmt("%.2f", 100 * v.aupr) + ",";
    } else {
      out += ",,,,";
    }
    out += fmt("%.17g", e.mean_loss) + "," + fmt("%.3f", e.seconds) + "\n";
  }
  return out;
}

}  // namespace idil::train
