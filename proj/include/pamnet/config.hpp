#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pamnet/data.hpp"
#include "pamnet/model.hpp"
#include "pamnet/training.hpp"

namespace pamnet {

enum class DataSource { synth, csv };

/// Every knob of one run. Text form is flat `key=value` lines with
/// namespaced keys (model.d=64, loss.alpha=0.25, ...); see `dump_config`.
struct ExperimentConfig {
  DataSource source = DataSource::synth;
  std::string csv_path;
  std::string dataset;  // benchmark tag; picks model.c when it is not given
  SynthSpec synth;
  SplitSpec split;
  bool standardize = true;
  bool raw_units = false;  // report metrics after undoing standardization
  ModelConfig model;
  LossConfig loss;
  OptimConfig optim;
  CorruptionSpec corruption;
  std::vector<std::uint64_t> seeds{1};
  std::string ablation = "full";
  std::optional<std::string> target_channel;
  std::string output_dir = "pamnet_out";
};

/// Throws ConfigError on unknown keys or malformed values.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& cfg);

/// Applies `key=value` pairs on top of `cfg`.
void apply_overrides(ExperimentConfig& cfg, std::string_view text);

/// model.* keys only; embedded in checkpoints.
std::string dump_model_config(const ModelConfig& model);
ModelConfig parse_model_config(std::string_view text);

/// Default cycle length for the public benchmarks (ETTh*, ETTm*, ECL,
/// Traffic, Weather, Solar, PEMS*). Throws LookupError listing known tags.
std::size_t default_cycle_length(std::string_view dataset);

/// Registered ablation tags: "full" plus one per ablation-table column.
const std::vector<std::string>& ablation_tags();

/// Rewrites the configs for `tag`. Throws RegistryError for unknown tags.
void apply_ablation(ModelConfig& model, LossConfig& loss, std::string_view tag);

}  // namespace pamnet
