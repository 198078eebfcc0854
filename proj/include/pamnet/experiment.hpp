#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pamnet/config.hpp"
#include "pamnet/data.hpp"
#include "pamnet/model.hpp"
#include "pamnet/training.hpp"

namespace pamnet {

double mse(const Tensor<double>& y, const Tensor<double>& yhat);
double mae(const Tensor<double>& y, const Tensor<double>& yhat);

struct MetricValues {
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> target_mse;
  std::optional<double> target_mae;
};

struct Evaluation {
  MetricValues metrics;
  std::vector<Tensor<double>> predictions;  // one [H x N] per test window
};

/// Test-set metrics with dropout off. With `target_channel` set, target
/// metrics reduce over that channel only; the model still sees every
/// channel. With `raw_units`, predictions and targets are mapped back
/// through the standardization before scoring.
Evaluation evaluate(ModelParams<float>& params, const ModelConfig& config, const WindowBatch& test,
                    const std::vector<std::string>& channel_names,
                    const std::optional<std::string>& target_channel = std::nullopt,
                    const NormStats* raw_units = nullptr);

/// Metrics of precomputed predictions; the same reduction `evaluate` uses.
MetricValues score(const WindowBatch& test, const std::vector<Tensor<double>>& predictions,
                   std::optional<std::size_t> target_channel, const NormStats* raw_units = nullptr);

struct Aggregate {
  double mean = 0.0;
  std::optional<double> stddev;  // sample std; needs at least two seeds
  double median = 0.0;
};

/// Aggregate of the given values; throws DomainError when empty.
Aggregate aggregate(const std::vector<double>& values);

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricValues metrics;
  TrainReport train;
  ModelParams<float> params;
  std::vector<Tensor<double>> predictions;
};

struct MetricReport {
  std::string ablation;
  std::size_t horizon = 0;
  std::vector<SeedResult> seeds;
  std::optional<Aggregate> mse, mae, target_mse, target_mae;

  bool all_ok() const;
  std::size_t completed() const;
};

/// Data shared by every seed of one experiment.
struct PreparedData {
  SeriesFrame frame;  // standardized when the config asks for it
  NormStats stats;
  bool standardized = false;
  SplitRanges ranges;
  WindowBatch train, val, test;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

/// Model config after the ablation tag and the data's channel count apply.
ModelConfig resolve_model_config(const ExperimentConfig& cfg, std::size_t channels);
LossConfig resolve_loss_config(const ExperimentConfig& cfg);

/// Trains and evaluates one seed. Errors are captured in the result.
SeedResult run_seed(const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed);

/// Number of concurrent runs: PAMNET_THREADS when set, else hardware concurrency.
std::size_t run_parallelism();

/// Runs every seed of every config (concurrently up to run_parallelism()).
/// When a config has a non-empty output_dir the artifacts are written there
/// after all runs finish.
std::vector<MetricReport> run_experiments(const std::vector<ExperimentConfig>& cfgs);
MetricReport run_experiment(const ExperimentConfig& cfg);

/// metrics.json body.
std::string metrics_json(const MetricReport& report);
void write_artifacts(const ExperimentConfig& cfg, const MetricReport& report, const PreparedData& data);

/// One row per tag: tag, seeds ok, then mean/std/median of MSE and MAE.
std::string ablation_table_csv(const std::vector<MetricReport>& reports);

}  // namespace pamnet
