#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pamnet/rng.hpp"
#include "pamnet/tensor.hpp"

namespace pamnet {

/// A multivariate series: T rows (time) by N channels. Row position is the
/// absolute time index.
struct SeriesFrame {
  std::vector<std::string> channels;
  Tensor<double> values;  // T x N
  std::string origin;

  std::size_t steps() const { return values.empty() ? 0 : values.dim(0); }
  std::size_t width() const { return channels.size(); }
  /// Index of a channel by name, or nullopt.
  std::optional<std::size_t> channel_index(const std::string& name) const;
};

/// Reads a comma-separated file with a header row. A leading "date" column
/// is dropped; every other cell must parse as a decimal real.
SeriesFrame load_csv(const std::filesystem::path& path);
void save_csv(const SeriesFrame& frame, const std::filesystem::path& path);

struct SplitSpec {
  std::array<double, 3> fractions{0.7, 0.1, 0.2};
  /// Explicit (train, val, test) row counts; overrides the fractions.
  std::optional<std::array<std::size_t, 3>> steps;

  void validate() const;
};

/// Rows [begin, end). Inputs may start at `begin`; forecast targets lie in
/// [begin + L, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct SplitRanges {
  RowRange train;
  RowRange val;
  RowRange test;
  std::size_t train_end = 0;  // first row whose target belongs to validation
  std::size_t val_end = 0;    // first row whose target belongs to test
};

/// Chronological train/val/test split. Validation and test windows reach
/// back `lookback` rows into the preceding split for their inputs only.
SplitRanges split_chronological(std::size_t steps, const SplitSpec& spec, std::size_t lookback, std::size_t horizon);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  double restore(double value, std::size_t channel) const { return value * stddev[channel] + mean[channel]; }
};

/// z-scores every row with statistics computed on `train` rows only.
std::pair<SeriesFrame, NormStats> standardize(const SeriesFrame& frame, RowRange train);

struct Window {
  Tensor<double> x;  // L x N
  Tensor<double> y;  // H x N
  std::size_t tau_end = 0;
};

struct WindowBatch {
  std::vector<Window> windows;

  std::size_t size() const noexcept { return windows.size(); }
  bool empty() const noexcept { return windows.empty(); }
};

/// Every window with X = rows[s, s+L), Y = rows[s+L, s+L+H), tau_end = s+L-1.
WindowBatch make_windows(const SeriesFrame& frame, RowRange range, std::size_t lookback, std::size_t horizon,
                         std::size_t stride = 1);

enum class CorruptionMode { zeros, noise };

struct CorruptionSpec {
  double p = 0.0;
  CorruptionMode mode = CorruptionMode::zeros;
  /// Mask whole timesteps (all channels at once) instead of single elements.
  bool per_row = false;
  /// Also corrupt test inputs (training inputs are always corrupted).
  bool apply_to_test = false;

  void validate() const;
};

std::string to_string(CorruptionMode mode);
CorruptionMode parse_corruption_mode(const std::string& name);

/// Masks input elements with probability p; targets are never touched.
/// Noise mode draws N(0, s^2) where s is the window's empirical std of that
/// channel.
WindowBatch corrupt(const WindowBatch& batch, const CorruptionSpec& spec, Rng& rng);

/// x_i(tau) = A(tau) sin(2 pi (tau mod c)/c + phi_i) + m_i(tau mod c) + noise,
/// A(tau) = 1 + depth sin(2 pi tau / (k c)).
struct SynthSpec {
  std::size_t steps = 6000;
  std::size_t channels = 4;
  std::size_t cycle_len = 24;
  double drift_depth = 0.5;
  std::size_t drift_cycles = 10;  // k
  double noise_std = 0.1;
  double mean_scale = 0.5;        // size of the per-channel mean profile m_i
  std::vector<double> phases;     // phi_i; drawn from the seed when empty
  std::uint64_t seed = 0;

  void validate() const;
};

SeriesFrame synth_generate(const SynthSpec& spec);

/// Amplitude envelope A(tau).
double synth_amplitude(const SynthSpec& spec, std::size_t tau);

}  // namespace pamnet
