// Command-line front end: generate, train, eval, ablate, gradcheck, defaults.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pamnet/checkpoint.hpp"
#include "pamnet/config.hpp"
#include "pamnet/errors.hpp"
#include "pamnet/experiment.hpp"
#include "pamnet/training.hpp"

namespace fs = std::filesystem;
using namespace pamnet;

namespace {

ExperimentConfig read_config(const std::string& path, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : load_config(path);
  std::string extra;
  for (const auto& o : overrides) extra += o + "\n";
  if (!extra.empty()) apply_overrides(cfg, extra);
  return cfg;
}

void print_report(const MetricReport& r) {
  for (const auto& s : r.seeds) {
    if (s.ok) {
      std::printf("seed %llu: mse=%.6f mae=%.6f best_epoch=%zu\n", static_cast<unsigned long long>(s.seed),
                  s.metrics.mse, s.metrics.mae, s.train.best_epoch);
    } else {
      std::printf("seed %llu: FAILED: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
    }
  }
  if (r.mse) std::printf("%s: mse mean=%.6f median=%.6f\n", r.ablation.c_str(), r.mse->mean, r.mse->median);
}

int cmd_generate(const std::string& spec_path, const std::vector<std::string>& overrides, const std::string& out) {
  ExperimentConfig cfg = read_config(spec_path, overrides);
  const SeriesFrame frame = synth_generate(cfg.synth);
  save_csv(frame, out);
  std::printf("wrote %zu rows x %zu channels to %s\n", frame.steps(), frame.width(), out.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides, const std::string& output) {
  ExperimentConfig cfg = read_config(config_path, overrides);
  if (!output.empty()) cfg.output_dir = output;
  const MetricReport report = run_experiment(cfg);
  print_report(report);
  return report.all_ok() ? 0 : 1;
}

int cmd_eval(const std::string& checkpoint, const std::string& csv, const std::string& config_path,
             const std::vector<std::string>& overrides, const std::string& target, const std::string& output) {
  ExperimentConfig cfg = read_config(config_path, overrides);
  Checkpoint ck = load_checkpoint(checkpoint);
  cfg.source = DataSource::csv;
  cfg.csv_path = csv;
  cfg.model = ck.config;
  cfg.ablation = "full";  // the checkpoint config already carries the ablation
  if (!target.empty()) cfg.target_channel = target;
  const PreparedData data = prepare_data(cfg);
  if (data.frame.width() != ck.config.channels) {
    throw ConfigError("checkpoint expects " + std::to_string(ck.config.channels) + " channels, csv has " +
                      std::to_string(data.frame.width()));
  }
  const NormStats* raw = (cfg.raw_units && data.standardized) ? &data.stats : nullptr;
  const Evaluation e = evaluate(ck.params, ck.config, data.test, data.frame.channels, cfg.target_channel, raw);
  MetricReport report;
  report.ablation = "checkpoint";
  report.horizon = ck.config.horizon;
  SeedResult s;
  s.seed = ck.meta.seed;
  s.ok = true;
  s.metrics = e.metrics;
  s.train.best_epoch = ck.meta.best_epoch;
  report.seeds.push_back(std::move(s));
  report.mse = aggregate({e.metrics.mse});
  report.mae = aggregate({e.metrics.mae});
  if (e.metrics.target_mse) {
    report.target_mse = aggregate({*e.metrics.target_mse});
    report.target_mae = aggregate({*e.metrics.target_mae});
  }
  const std::string json = metrics_json(report);
  if (!output.empty()) {
    fs::create_directories(output);
    std::ofstream(fs::path(output) / "metrics.json") << json;
  }
  std::cout << json;
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::vector<std::string>& overrides, std::string tags,
               const std::string& output) {
  ExperimentConfig base = read_config(config_path, overrides);
  if (!output.empty()) base.output_dir = output;
  std::vector<std::string> list;
  std::stringstream ss(tags);
  for (std::string t; std::getline(ss, t, ',');)
    if (!t.empty()) list.push_back(t);
  if (list.empty()) list = ablation_tags();
  std::vector<ExperimentConfig> cfgs;
  for (const auto& tag : list) {
    ExperimentConfig c = base;
    ModelConfig m;
    LossConfig l;
    apply_ablation(m, l, tag);  // validates the tag up front
    c.ablation = tag;
    c.output_dir = base.output_dir.empty() ? "" : (fs::path(base.output_dir) / tag).string();
    cfgs.push_back(std::move(c));
  }
  const auto reports = run_experiments(cfgs);
  const std::string table = ablation_table_csv(reports);
  if (!base.output_dir.empty()) {
    fs::create_directories(base.output_dir);
    std::ofstream(fs::path(base.output_dir) / "ablation.csv") << table;
  }
  std::cout << table;
  bool ok = true;
  for (const auto& r : reports) ok = ok && r.all_ok();
  return ok ? 0 : 1;
}

int cmd_gradcheck(const std::string& loss, double tol, std::uint64_t seed) {
  ModelConfig m;
  m.lookback = 8;
  m.horizon = 4;
  m.channels = 3;
  m.embed_dim = 6;
  m.cycle_len = 12;
  m.dropout_rate = 0.0;
  std::vector<LossMode> modes;
  if (loss == "all") modes = {LossMode::hybrid, LossMode::mse, LossMode::mae};
  else modes = {parse_loss_mode(loss)};
  bool ok = true;
  for (auto mode : modes) {
    LossConfig lc;
    lc.mode = mode;
    const GradCheckReport r = grad_check(m, lc, seed, tol);
    std::printf("loss=%s\n", to_string(mode).c_str());
    for (const auto& g : r.groups) {
      std::printf("  %-20s max_rel=%.3e max_abs=%.3e %s\n", g.name.c_str(), g.max_rel_error, g.max_abs_error,
                  g.passed ? "ok" : "FAIL");
    }
    ok = ok && r.passed;
  }
  std::printf("%s\n", ok ? "gradcheck passed" : "gradcheck FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAMNet forecasting engine"};
  app.require_subcommand(1);

  std::string config_path, spec_path, out, output, checkpoint, csv, target, tags, loss = "all";
  std::vector<std::string> overrides;
  double tol = 1e-4;
  std::uint64_t seed = 0;

  auto* gen = app.add_subcommand("generate", "write a synthetic series CSV from a spec file");
  gen->add_option("--spec", spec_path, "key=value file with synth.* keys");
  gen->add_option("--set", overrides, "extra key=value overrides");
  gen->add_option("--out", out, "output CSV")->required();

  auto* train = app.add_subcommand("train", "train every seed of a config and write reports");
  train->add_option("--config", config_path, "experiment config file");
  train->add_option("--set", overrides, "extra key=value overrides");
  train->add_option("--output", output, "output directory (overrides the config)");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on the test split of a CSV");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--csv", csv, "input CSV")->required();
  eval->add_option("--config", config_path, "config supplying split and preprocessing");
  eval->add_option("--set", overrides, "extra key=value overrides");
  eval->add_option("--target-channel", target, "restrict target metrics to one channel");
  eval->add_option("--output", output, "directory for metrics.json");

  auto* ablate = app.add_subcommand("ablate", "run a list of ablation tags and tabulate them");
  ablate->add_option("--config", config_path, "experiment config file");
  ablate->add_option("--set", overrides, "extra key=value overrides");
  ablate->add_option("--tags", tags, "comma-separated tags (default: all registered)");
  ablate->add_option("--output", output, "output directory (overrides the config)");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the tiny model");
  grad->add_option("--loss", loss, "hybrid, mse, mae or all");
  grad->add_option("--tol", tol, "relative error tolerance");
  grad->add_option("--seed", seed, "initialization seed");

  auto* defaults = app.add_subcommand("defaults", "print the built-in default config");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_generate(spec_path, overrides, out);
    if (*train) return cmd_train(config_path, overrides, output);
    if (*eval) return cmd_eval(checkpoint, csv, config_path, overrides, target, output);
    if (*ablate) return cmd_ablate(config_path, overrides, tags, output);
    if (*grad) return cmd_gradcheck(loss, tol, seed);
    if (*defaults) {
      std::cout << dump_config(ExperimentConfig{});
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
