#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pamnet/rng.hpp"
#include "pamnet/tape.hpp"

namespace pamnet {

enum class Activation { silu, tanh, sigmoid, relu, gelu };

std::string to_string(Activation a);
/// Throws ConfigError for unknown names.
Activation parse_activation(std::string_view name);

/// Pointwise activation and its derivative. GELU uses the tanh approximation.
double activation_value(Activation a, double x);
double activation_derivative(Activation a, double x);

// Differentiable operations. Each records one node on the tape of its inputs.

/// a[m x k] * b[k x n].
template <class Real>
Var<Real> matmul(Var<Real> a, Var<Real> b);

template <class Real>
Var<Real> add(Var<Real> a, Var<Real> b);

template <class Real>
Var<Real> sub(Var<Real> a, Var<Real> b);

template <class Real>
Var<Real> hadamard(Var<Real> a, Var<Real> b);

/// wa * a + wb * b for equal shapes.
template <class Real>
Var<Real> weighted_sum(Var<Real> a, double wa, Var<Real> b, double wb);

/// a[r x c] + bias[c] broadcast over rows.
template <class Real>
Var<Real> add_row_bias(Var<Real> a, Var<Real> bias);

template <class Real>
Var<Real> activate(Var<Real> x, Activation a);

template <class Real>
Var<Real> silu(Var<Real> x) {
  return activate(x, Activation::silu);
}

/// Inverted dropout: survivors are scaled by 1/(1-rate) at train time; eval
/// mode and rate 0 are identities. Throws ConfigError unless 0 <= rate < 1.
template <class Real>
Var<Real> dropout(Var<Real> x, double rate, Rng& rng, bool training);

/// Rows `indices` of table[r x c], stacked into [len x c]. The backward pass
/// scatter-adds into the selected rows only.
template <class Real>
Var<Real> gather_rows(Var<Real> table, const std::vector<std::size_t>& indices);

template <class Real>
Var<Real> gather_row(Var<Real> table, std::size_t index) {
  return gather_rows(table, std::vector<std::size_t>{index});
}

template <class Real>
Var<Real> reshape(Var<Real> x, Shape shape);

/// Swaps the last two axes of a rank-2 or rank-3 tensor.
template <class Real>
Var<Real> transpose(Var<Real> x);

/// Per-series statistics of a [B x T x N] tensor over the T axis.
/// `scale` is sqrt(population variance + eps).
template <class Real>
struct ChannelStats {
  Var<Real> mean;
  Var<Real> scale;
};

template <class Real>
ChannelStats<Real> channel_stats(Var<Real> x, double eps);

/// (x - mean) / scale, statistics broadcast along T.
template <class Real>
Var<Real> normalize(Var<Real> x, const ChannelStats<Real>& stats);

/// y * scale + mean, statistics broadcast along T.
template <class Real>
Var<Real> denormalize(Var<Real> y, const ChannelStats<Real>& stats);

/// Mean of |x| with sign(0) = 0 in the subgradient. Throws DomainError when empty.
template <class Real>
Var<Real> mean_abs(Var<Real> x);

template <class Real>
Var<Real> mean_square(Var<Real> x);

/// Mean complex modulus of the DFT of every series along the time axis of a
/// [T x N] or [B x T x N] tensor. The subgradient at a zero coefficient is 0.
template <class Real>
Var<Real> spectral_mean_abs(Var<Real> x);

}  // namespace pamnet
