#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pamnet/data.hpp"
#include "pamnet/model.hpp"

namespace pamnet {

enum class LossMode { hybrid, mse, mae };

std::string to_string(LossMode mode);
LossMode parse_loss_mode(const std::string& name);

struct LossConfig {
  double alpha = 0.25;  // weight of the frequency term
  LossMode mode = LossMode::hybrid;

  void validate() const;
};

struct OptimConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  std::size_t batch_size = 32;

  void validate() const;
};

/// Mean |Y - Yhat| over every entry.
double time_mae(const Tensor<double>& y, const Tensor<double>& yhat);
/// Mean modulus of DFT(Y) - DFT(Yhat) along the horizon axis, per channel.
double freq_mae(const Tensor<double>& y, const Tensor<double>& yhat);
/// (1-alpha) time_mae + alpha freq_mae, or plain MSE / MAE by mode.
double hybrid_loss(const Tensor<double>& y, const Tensor<double>& yhat, const LossConfig& cfg);

/// Differentiable objective on [H x N] or [B x H x N] forecasts.
template <class Real>
Var<Real> objective(Var<Real> yhat, Var<Real> y, const LossConfig& cfg);

template <class Real>
struct AdamState {
  std::vector<Tensor<Real>> m;
  std::vector<Tensor<Real>> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update over `params`; frozen parameters are
/// skipped. Zeroes every gradient afterwards. Throws NumericError when an
/// updated value is not finite.
template <class Real>
void adam_step(const std::vector<Parameter<Real>*>& params, AdamState<Real>& state, const OptimConfig& cfg);

template <class Real>
void adam_step(ModelParams<Real>& params, AdamState<Real>& state, const OptimConfig& cfg) {
  adam_step(params.all(), state, cfg);
}

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;
  bool stopped_early = false;
  double wall_seconds = 0.0;
};

/// Stacks windows [first, first+count) of `batch` (optionally through an
/// index permutation) into [B x L x N] inputs and [B x H x N] targets.
template <class Real>
struct StackedBatch {
  Tensor<Real> x;
  Tensor<Real> y;
  std::vector<std::size_t> tau_end;
};

template <class Real>
StackedBatch<Real> stack_windows(const WindowBatch& batch, const std::vector<std::size_t>& order,
                                 std::size_t first, std::size_t count);

/// Mean objective over `batch` with dropout disabled.
template <class Real>
double evaluate_loss(ModelParams<Real>& params, const ModelConfig& config, const WindowBatch& batch,
                     const LossConfig& loss_cfg, std::size_t batch_size = 256);

/// Mini-batch Adam with early stopping on the validation objective. On
/// return `params` holds the best-validation snapshot.
template <class Real>
TrainReport fit(ModelParams<Real>& params, const ModelConfig& config, const WindowBatch& train,
                const WindowBatch& val, const LossConfig& loss_cfg, const OptimConfig& optim_cfg,
                std::uint64_t seed);

struct GradCheckGroup {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double tolerance = 0.0;
  bool passed = true;

  /// Names of failing groups, comma separated.
  std::string failures() const;
};

/// Lets a caller tamper with the analytic gradients before comparison.
using GradientHook = std::function<void(ModelParams<double>&)>;

/// Compares analytic gradients against central finite differences (step
/// 1e-5, 64-bit, dropout forced to 0) on one random window. Relative error
/// per entry is |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport grad_check(ModelConfig config, const LossConfig& loss_cfg, std::uint64_t seed, double tolerance,
                           const GradientHook& hook = {});

}  // namespace pamnet
