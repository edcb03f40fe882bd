#include "idil/cli/pipeline.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "idil/error.hpp"
#include "idil/io.hpp"
#include "idil/metrics.hpp"

#ifndef IDIL_OOD_VERSION
#define IDIL_OOD_VERSION "unknown"
#endif

namespace idil::cli {

std::string dataset_name(const std::filesystem::path& path) { return path.stem().string(); }

std::filesystem::path seed_dir(const std::filesystem::path& out_dir, std::uint64_t seed) {
  return out_dir / ("seed-" + std::to_string(seed));
}

std::string method_name(losses::LossVariant variant, Confidence confidence) {
  std::string m(losses::to_string(variant));
  if (confidence == Confidence::mahalanobis) m += "+mahalanobis";
  return m;
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(data::fnv1a64(render_config(cfg))));
  return buf;
}

TrainedRun train_run(const ExperimentConfig& cfg, const data::Dataset& in_dist, std::uint64_t seed,
                     const data::Dataset* val_ood) {
  const auto parts = data::split(in_dist, seed);
  const auto train_set = data::featurize(parts.train, cfg.feature_dim);

  model::ModelConfig mcfg;
  mcfg.input_dim = cfg.feature_dim;
  mcfg.hidden_dim = cfg.hidden_dim;
  mcfg.num_labels = in_dist.vocab.size();
  mcfg.init_seed = seed;
  auto model = model::MlpClassifier::init(mcfg);

  train::TrainConfig tcfg = cfg.train;
  tcfg.seed = seed;

  train::ValidationHook hook;
  data::FeaturizedSet val_in;
  data::FeaturizedSet val_out;
  if (val_ood && parts.val.size() > 0) {
    val_in = data::featurize(parts.val, cfg.feature_dim);
    val_out = data::featurize(*val_ood, cfg.feature_dim);
    hook = [&](const model::MlpClassifier& m, std::size_t) {
      metrics::ScoreSet s{metrics::max_softmax(m.predict(val_in.features).probs),
                          metrics::max_softmax(m.predict(val_out.features).probs)};
      const auto r = metrics::evaluate(s);
      return train::ValidationMetrics{r.fpr95, r.err, r.auroc, r.aupr};
    };
  }

  auto log = train::train(model, train_set, tcfg, hook);
  TrainedRun run{model::Checkpoint{model, in_dist.vocab.names(), cfg.feature_dim, seed,
                                   std::string(losses::to_string(cfg.train.variant))},
                 std::move(log), std::nullopt, train_set.features.size()};

  try {
    const auto penult = model.predict(train_set.features).penultimate;
    run.stats = mahalanobis::fit(penult, train_set.labels, mcfg.num_labels, cfg.mahalanobis_eps);
  } catch (const Error& e) {
    run.log.warnings.push_back(std::string("mahalanobis statistics not fitted: ") + e.what());
  }
  return run;
}

void write_run(const TrainedRun& run, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  model::save_checkpoint(run.checkpoint, dir / "model.ckpt");
  io::write_text(dir / "steps.csv", train::steps_csv(run.log));
  io::write_text(dir / "epochs.csv", train::epochs_csv(run.log));
  if (run.stats) mahalanobis::save(*run.stats, dir / "mahalanobis.json");
  nlohmann::json manifest = {
      {"format", "idil-ood-run"},
      {"version", IDIL_OOD_VERSION},
      {"config_hash", config_hash(cfg)},
      {"seed", run.checkpoint.seed},
      {"loss", run.checkpoint.loss},
      {"n_train", run.n_train},
      {"steps", run.log.steps.size()},
      {"warnings", run.log.warnings},
  };
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

SeedScores score_run(const model::Checkpoint& ckpt, const std::optional<mahalanobis::GaussianStats>& stats,
                     const data::Dataset& in_dist, std::span<const data::Dataset> oods, Confidence confidence,
                     std::optional<double> mahalanobis_eps) {
  if (ckpt.labels != in_dist.vocab.names()) {
    throw DataError("vocabulary mismatch: checkpoint labels do not match the labels of '" + in_dist.provenance +
                    "'");
  }
  const auto parts = data::split(in_dist, ckpt.seed);
  const auto test = data::featurize(parts.test, ckpt.feature_dim);
  const auto& model = ckpt.model;
  const auto test_out = model.predict(test.features);

  SeedScores out;
  out.seed = ckpt.seed;
  out.accuracy = metrics::accuracy(test_out.probs, test.labels);

  std::optional<mahalanobis::GaussianStats> fitted = stats;
  if (confidence == Confidence::mahalanobis && !fitted) {
    const auto train_set = data::featurize(parts.train, ckpt.feature_dim);
    fitted = mahalanobis::fit(model.predict(train_set.features).penultimate, train_set.labels, ckpt.labels.size(),
                              mahalanobis_eps);
  }
  auto confidences = [&](const model::ForwardResult& r) {
    return confidence == Confidence::mahalanobis ? fitted->confidences(r.penultimate)
                                                 : metrics::max_softmax(r.probs);
  };
  out.in_scores = confidences(test_out);
  for (const auto& ood : oods) {
    const auto feats = data::featurize(ood, ckpt.feature_dim);
    out.ood_scores.push_back(confidences(model.predict(feats.features)));
  }
  return out;
}

std::vector<metrics::MetricsReport> report_rows(const std::string& in_name, std::span<const std::string> ood_names,
                                                const std::string& method, std::span<const SeedScores> scores) {
  std::vector<metrics::MetricsReport> rows;
  for (std::size_t o = 0; o < ood_names.size(); ++o) {
    std::vector<metrics::MetricsReport> per_seed;
    for (const auto& s : scores) {
      const metrics::ScoreSet set{s.in_scores, s.ood_scores.at(o)};
      per_seed.push_back(metrics::make_report(in_name, ood_names[o], method, std::to_string(s.seed),
                                              metrics::evaluate(set), s.accuracy));
    }
    rows.insert(rows.end(), per_seed.begin(), per_seed.end());
    rows.push_back(metrics::mean_report(per_seed));
  }
  return rows;
}

}  // namespace idil::cli
