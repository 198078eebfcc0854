#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pamnet/ops.hpp"
#include "pamnet/rng.hpp"
#include "pamnet/tape.hpp"
#include "pamnet/tensor.hpp"

namespace pamnet {

struct ModelConfig {
  std::size_t lookback = 96;
  std::size_t horizon = 96;
  std::size_t channels = 7;
  std::size_t embed_dim = 512;
  std::size_t cycle_len = 24;
  double dropout_rate = 0.5;
  Activation activation = Activation::silu;
  bool use_phase = true;
  bool use_amplitude = true;
  bool sinusoidal_carriers = false;
  bool use_modulator = true;
  bool share_modulator_weights = false;
  /// Apply dropout to act(E_X W1) before the Hadamard product instead of after it.
  bool dropout_before_product = false;
  bool instance_norm = true;
  double norm_eps = 1e-5;

  /// Throws ConfigError when any invariant is violated.
  void validate() const;
};

template <class Real>
struct CarrierBank {
  Parameter<Real> phase;      // c x d
  Parameter<Real> amplitude;  // c x (N*d)
};

template <class Real>
struct ModulatorParams {
  Parameter<Real> w1;
  Parameter<Real> w2;
  Parameter<Real> w3;
};

/// Every learnable tensor of one model. All groups are always allocated so
/// that initialization draws the same stream regardless of ablation flags;
/// `active_parameters` lists the ones a given config actually uses.
template <class Real>
struct ModelParams {
  Parameter<Real> tokenizer_w;  // L x d
  Parameter<Real> tokenizer_b;  // d
  CarrierBank<Real> carriers;
  ModulatorParams<Real> phase_mod;
  ModulatorParams<Real> amp_mod;
  Parameter<Real> head_hidden_w;  // d x d
  Parameter<Real> head_hidden_b;  // d
  Parameter<Real> head_out_w;     // d x H
  Parameter<Real> head_out_b;     // H

  ModelParams() = default;
  ModelParams(const ModelParams&) = default;
  ModelParams& operator=(const ModelParams&) = default;

  /// Stable order; names are unique.
  std::vector<Parameter<Real>*> all();
  std::vector<const Parameter<Real>*> all() const;
  Parameter<Real>* find(std::string_view name);
  void zero_grad();

  template <class Other>
  ModelParams<Other> cast() const;
};

/// Parameters read by the forward pass under `config`.
template <class Real>
std::vector<Parameter<Real>*> active_parameters(ModelParams<Real>& params, const ModelConfig& config);
bool parameter_is_active(std::string_view name, const ModelConfig& config);

/// Xavier-normal weights (std sqrt(2/(fan_in+fan_out))), zero biases.
/// Deterministic in (config, seed).
template <class Real>
ModelParams<Real> init_params(const ModelConfig& config, std::uint64_t seed);

/// Fixed sinusoidal carrier row: entry j is sin (even j) or cos (odd j) of
/// 2 pi t/c * (j/2 + 1).
std::vector<double> sinusoidal_row(std::size_t t, std::size_t cycle_len, std::size_t width);

std::size_t cycle_index(std::size_t tau_end, std::size_t cycle_len);

template <class Real>
struct NormalizedWindow {
  Tensor<Real> values;  // L x N
  Tensor<Real> mean;    // N
  Tensor<Real> sigma;   // N, population std
};

template <class Real>
NormalizedWindow<Real> instance_normalize(const Tensor<Real>& x, double eps);

template <class Real>
Tensor<Real> instance_denormalize(const Tensor<Real>& y, const Tensor<Real>& mean, const Tensor<Real>& sigma,
                                  double eps);

template <class Real>
Tensor<Real> variate_tokenize(const Tensor<Real>& x, const Parameter<Real>& w, const Parameter<Real>& b);

template <class Real>
Tensor<Real> phase_carrier(const CarrierBank<Real>& bank, std::size_t t, std::size_t channels);

template <class Real>
Tensor<Real> amplitude_carrier(const CarrierBank<Real>& bank, std::size_t t, std::size_t channels,
                               std::size_t embed_dim);

/// act(E_X W1) (.) (S W2), dropout, then W3.
template <class Real>
Var<Real> modulate(Var<Real> ex, Var<Real> carrier, ModulatorParams<Real>& params, const ModelConfig& config,
                   Rng& rng, bool training);

/// Value-level modulator on [N x d] inputs.
template <class Real>
Tensor<Real> modulate(const Tensor<Real>& ex, const Tensor<Real>& carrier, const ModulatorParams<Real>& params,
                      const ModelConfig& config, Rng& rng, bool training);

/// Nodes of one batched forward pass. Token-level tensors are stacked as
/// [(B*N) x d]; the forecast is [B x H x N].
template <class Real>
struct ForwardGraph {
  Var<Real> input;
  ChannelStats<Real> stats;
  Var<Real> ex;
  Var<Real> ep;
  Var<Real> ea;
  Var<Real> mp;
  Var<Real> ma;
  Var<Real> mx;
  Var<Real> yhat;
};

/// Records the forward pass for `x` [B x L x N] whose windows end at `tau_end`.
template <class Real>
ForwardGraph<Real> forward_graph(Tape<Real>& tape, ModelParams<Real>& params, const ModelConfig& config,
                                 Tensor<Real> x, const std::vector<std::size_t>& tau_end, Rng& rng,
                                 bool training);

template <class Real>
struct Activations {
  Tensor<Real> ex, ep, ea, mp, ma, mx;  // N x d; ep/ea/mp/ma empty when unused
  Tensor<Real> norm_mu, norm_sigma;     // N; empty when instance norm is off
};

template <class Real>
struct Forecast {
  Tensor<Real> yhat;  // H x N
  Activations<Real> acts;
};

/// Single-window forward pass.
template <class Real>
Forecast<Real> forward(ModelParams<Real>& params, const ModelConfig& config, const Tensor<Real>& x,
                       std::size_t tau_end, Rng& rng, bool training);

/// Batched inference: one [H x N] forecast per window, dropout off.
template <class Real>
std::vector<Tensor<Real>> predict(ModelParams<Real>& params, const ModelConfig& config,
                                  const std::vector<Tensor<Real>>& windows, const std::vector<std::size_t>& tau_end,
                                  std::size_t batch_size = 256);

}  // namespace pamnet
