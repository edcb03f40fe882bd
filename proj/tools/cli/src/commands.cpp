#include "idil/cli/commands.hpp"

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "idil/cli/config.hpp"
#include "idil/cli/pipeline.hpp"
#include "idil/error.hpp"
#include "idil/io.hpp"
#include "idil/metrics.hpp"
#include "idil/report.hpp"

namespace idil::cli {

namespace fs = std::filesystem;

namespace {

// Flags shared by train, eval and sweep-batch. Unset flags leave the config
// file (or defaults) untouched.
struct ExperimentFlags {
  std::string config;
  std::string in_dist;
  std::vector<std::string> ood;
  std::string out;
  std::string loss;
  std::vector<std::uint64_t> seeds;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  std::string lr;
  std::size_t hidden = 0;
  std::size_t dim = 0;
  std::string val_ood;
  bool mahalanobis = false;

  void attach(CLI::App& app, bool with_eval_flags) {
    app.add_option("-c,--config", config, "Experiment config file (INI)");
    app.add_option("--in-dist", in_dist, "In-distribution corpus (.jsonl or .csv)");
    app.add_option("--ood", ood, "OOD corpus; repeatable")->delimiter(',');
    app.add_option("-o,--out", out, "Output directory");
    app.add_option("--loss", loss, "idil | idil-gradsub | idil-gradboth | idil-intradoc | idil-nosilu | ce");
    app.add_option("--seeds", seeds, "Comma separated seeds")->delimiter(',');
    app.add_option("--epochs", epochs, "Training epochs");
    app.add_option("--batch-size", batch_size, "Mini-batch size");
    app.add_option("--lr", lr, "Peak learning rate, or 'finetune'");
    app.add_option("--hidden", hidden, "Hidden layer width");
    app.add_option("--dim", dim, "Hashed feature dimension");
    app.add_option("--val-ood", val_ood, "OOD sample for per-epoch validation metrics");
    if (with_eval_flags) app.add_flag("--mahalanobis", mahalanobis, "Score with Mahalanobis distance");
  }

  ExperimentConfig resolve(const CLI::App& app) const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    if (!in_dist.empty()) cfg.in_dist = in_dist;
    if (!ood.empty()) cfg.ood.assign(ood.begin(), ood.end());
    cfg.out_dir = resolve_out_dir(cfg.out_dir);
    if (!out.empty()) cfg.out_dir = out;
    if (!loss.empty()) cfg.train.variant = losses::parse_variant(loss);
    if (!seeds.empty()) cfg.seeds = seeds;
    if (app.count("--epochs")) cfg.train.epochs = epochs;
    if (app.count("--batch-size")) cfg.train.batch_size = batch_size;
    if (!lr.empty()) {
      std::string text = "[train]\nlr = " + lr + "\n";
      cfg.train.lr = parse_config(text, {}, "--lr").train.lr;
    }
    if (app.count("--hidden")) cfg.hidden_dim = hidden;
    if (app.count("--dim")) cfg.feature_dim = dim;
    if (!val_ood.empty()) cfg.val_ood = fs::path(val_ood);
    if (mahalanobis) cfg.confidence = Confidence::mahalanobis;
    if (cfg.seeds.empty()) throw ConfigError("at least one seed is required");
    if (cfg.feature_dim < 2) throw ConfigError("feature_dim must be at least 2");
    if (cfg.hidden_dim < 1) throw ConfigError("hidden_dim must be at least 1");
    cfg.train.validate();
    return cfg;
  }
};

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("no ") + what + " given");
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " '" + path.string() + "' does not exist");
}

std::vector<data::Dataset> load_oods(const ExperimentConfig& cfg) {
  if (cfg.ood.empty()) throw ConfigError("evaluation needs at least one OOD corpus");
  for (const auto& p : cfg.ood) require_file(p, "OOD corpus");
  std::vector<data::Dataset> out;
  for (const auto& p : cfg.ood) out.push_back(data::load(p));
  return out;
}

std::vector<std::string> ood_names(const ExperimentConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& p : cfg.ood) names.push_back(dataset_name(p));
  return names;
}

int cmd_synth(const data::SynthConfig& sc, const fs::path& out_dir, std::ostream& out) {
  const auto corpora = data::synth_generate(sc);
  data::write_jsonl(corpora.in_dist, out_dir / "in_dist.jsonl");
  data::write_jsonl(corpora.ood, out_dir / "ood.jsonl");
  out << "wrote " << corpora.in_dist.size() << " in-distribution documents to " << (out_dir / "in_dist.jsonl").string()
      << "\nwrote " << corpora.ood.size() << " OOD documents to " << (out_dir / "ood.jsonl").string() << "\n";
  return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.in_dist, "in-distribution corpus");
  if (cfg.val_ood) require_file(*cfg.val_ood, "validation OOD corpus");
  const auto in_dist = data::load(cfg.in_dist);
  std::optional<data::Dataset> val_ood;
  if (cfg.val_ood) val_ood = data::load(*cfg.val_ood);

  fs::create_directories(cfg.out_dir);
  io::write_text(cfg.out_dir / "config.ini", render_config(cfg));
  for (auto seed : cfg.seeds) {
    const auto run = train_run(cfg, in_dist, seed, val_ood ? &*val_ood : nullptr);
    write_run(run, cfg, seed_dir(cfg.out_dir, seed));
    for (const auto& w : run.log.warnings) err << "warning (seed " << seed << "): " << w << "\n";
    out << "seed " << seed << ": " << run.log.steps.size() << " steps, final loss "
        << run.log.steps.back().loss << " -> " << seed_dir(cfg.out_dir, seed).string() << "\n";
  }
  return kExitOk;
}

int cmd_eval(const ExperimentConfig& cfg, std::ostream& out) {
  require_file(cfg.in_dist, "in-distribution corpus");
  const auto oods = load_oods(cfg);
  const auto in_dist = data::load(cfg.in_dist);

  std::vector<SeedScores> scores;
  std::string loss;
  for (auto seed : cfg.seeds) {
    const auto dir = seed_dir(cfg.out_dir, seed);
    require_file(dir / "model.ckpt", "checkpoint");
    const auto ckpt = model::load_checkpoint(dir / "model.ckpt");
    if (loss.empty()) loss = ckpt.loss;
    std::optional<mahalanobis::GaussianStats> stats;
    if (cfg.confidence == Confidence::mahalanobis && fs::is_regular_file(dir / "mahalanobis.json")) {
      stats = mahalanobis::load(dir / "mahalanobis.json");
    }
    scores.push_back(score_run(ckpt, stats, in_dist, oods, cfg.confidence, cfg.mahalanobis_eps));
  }

  const auto method = method_name(losses::parse_variant(loss), cfg.confidence);
  const auto names = ood_names(cfg);
  const auto rows = report_rows(dataset_name(cfg.in_dist), names, method, scores);
  const auto csv = metrics::report_csv(rows);
  const auto file = cfg.confidence == Confidence::mahalanobis ? "report-mahalanobis.csv" : "report.csv";
  io::write_text(cfg.out_dir / file, csv);
  out << csv;
  return kExitOk;
}

int cmd_sweep_batch(ExperimentConfig cfg, const std::vector<std::size_t>& sizes, std::ostream& out) {
  if (sizes.empty()) throw ConfigError("sweep-batch: no batch sizes given");
  for (auto b : sizes)
    if (b < 2) throw ConfigError("sweep-batch: batch size " + std::to_string(b) + " is below 2; pairs need two documents");
  require_file(cfg.in_dist, "in-distribution corpus");
  const auto oods = load_oods(cfg);
  const auto in_dist = data::load(cfg.in_dist);
  const auto names = ood_names(cfg);
  const auto in_name = dataset_name(cfg.in_dist);

  std::string csv = "batch_size," + std::string(metrics::kReportHeader) + "\n";
  for (auto b : sizes) {
    cfg.train.batch_size = b;
    std::vector<SeedScores> scores;
    for (auto seed : cfg.seeds) {
      const auto run = train_run(cfg, in_dist, seed);
      scores.push_back(score_run(run.checkpoint, run.stats, in_dist, oods, cfg.confidence, cfg.mahalanobis_eps));
    }
    const auto rows = report_rows(in_name, names, method_name(cfg.train.variant, cfg.confidence), scores);
    for (const auto& r : rows) csv += std::to_string(b) + "," + metrics::report_csv_row(r);
  }
  fs::create_directories(cfg.out_dir);
  io::write_text(cfg.out_dir / "config.ini", render_config(cfg));
  io::write_text(cfg.out_dir / "sweep_batch.csv", csv);
  out << csv;
  return kExitOk;
}

struct AnalyzeArgs {
  std::string checkpoint;
  std::string in_dist;
  std::string ood;
  std::string out;
  std::size_t bins = 20;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.in_dist, "in-distribution corpus");
  require_file(a.ood, "OOD corpus");
  if (a.bins < 2) throw ConfigError("analyze: --bins must be at least 2");
  const auto ckpt = model::load_checkpoint(a.checkpoint);
  const auto in_dist = data::load(a.in_dist);
  const std::vector<data::Dataset> oods = {data::load(a.ood)};
  const auto scores = score_run(ckpt, std::nullopt, in_dist, oods, Confidence::max_softmax);
  const auto table = metrics::percentile_table({scores.in_scores, scores.ood_scores.front()}, a.bins);

  const fs::path dir = a.out.empty() ? resolve_out_dir("out") / "analyze" : fs::path(a.out);
  io::write_text(dir / "percentiles.csv", metrics::percentile_csv(table));
  io::write_text(dir / "percentiles.svg",
                 metrics::percentile_svg(table, dataset_name(a.in_dist) + " vs " + dataset_name(a.ood) + " (" +
                                                    ckpt.loss + ")"));
  char line[128];
  std::snprintf(line, sizeof line, "%.6f,%.6f\n", table.min_in_score, table.ood_mass_at_or_above);
  io::write_text(dir / "summary.csv", std::string("min_in_score,ood_mass_at_or_above\n") + line);
  out << "min in-distribution score: " << table.min_in_score << "\n"
      << "OOD fraction at or above it: " << table.ood_mass_at_or_above << "\n"
      << "wrote " << (dir / "percentiles.csv").string() << " and " << (dir / "percentiles.svg").string() << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-supervised OOD detection with the inter-document intra-label ranking loss"};
  app.name("idil-ood");
  app.require_subcommand(1);

  data::SynthConfig synth_cfg;
  std::string synth_out = ".";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic in-distribution/OOD corpus pair");
  synth->add_option("--labels", synth_cfg.labels, "Number of in-distribution labels")->capture_default_str();
  synth->add_option("--n", synth_cfg.n_per_label, "Documents per label")->capture_default_str();
  synth->add_option("--overlap", synth_cfg.overlap, "Fraction of OOD tokens borrowed from in-distribution")
      ->capture_default_str();
  synth->add_option("--doc-len", synth_cfg.doc_len, "Tokens per document")->capture_default_str();
  synth->add_option("--n-ood", synth_cfg.n_ood, "OOD documents (default: --n)");
  synth->add_option("--seed", synth_cfg.seed, "Generator seed")->capture_default_str();
  synth->add_option("-o,--out", synth_out, "Output directory")->capture_default_str();

  ExperimentFlags train_flags, eval_flags, sweep_flags;
  auto* train_cmd = app.add_subcommand("train", "Train one model per seed on the training split");
  train_flags.attach(*train_cmd, false);
  auto* eval_cmd = app.add_subcommand("eval", "Score test split and OOD corpora; write report.csv");
  eval_flags.attach(*eval_cmd, true);
  auto* sweep_cmd = app.add_subcommand("sweep-batch", "Train and evaluate across batch sizes");
  sweep_flags.attach(*sweep_cmd, true);
  std::vector<std::size_t> sizes = {4, 8, 16, 32};
  sweep_cmd->add_option("--sizes", sizes, "Comma separated batch sizes")->delimiter(',')->capture_default_str();

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Max-softmax percentile curves for one checkpoint");
  analyze->add_option("--checkpoint", analyze_args.checkpoint, "model.ckpt from train")->required();
  analyze->add_option("--in-dist", analyze_args.in_dist, "In-distribution corpus")->required();
  analyze->add_option("--ood", analyze_args.ood, "OOD corpus")->required();
  analyze->add_option("--bins", analyze_args.bins, "Threshold grid resolution")->capture_default_str();
  analyze->add_option("-o,--out", analyze_args.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) {
      if (const char* env = std::getenv(kOutDirEnv); env && *env && !synth->count("--out")) synth_out = env;
      return cmd_synth(synth_cfg, synth_out, out);
    }
    if (*train_cmd) return cmd_train(train_flags.resolve(*train_cmd), out, err);
    if (*eval_cmd) return cmd_eval(eval_flags.resolve(*eval_cmd), out);
    if (*sweep_cmd) return cmd_sweep_batch(sweep_flags.resolve(*sweep_cmd), sizes, out);
    if (*analyze) return cmd_analyze(analyze_args, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace idil::cli
