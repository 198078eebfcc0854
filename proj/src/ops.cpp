#include "pamnet/ops.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "pamnet/dft.hpp"
#include "pamnet/errors.hpp"

namespace pamnet {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::silu: return "silu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::gelu: return "gelu";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "silu") return Activation::silu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "relu") return Activation::relu;
  if (name == "gelu") return Activation::gelu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <class T>
T sigmoid_of(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <class T>
T act_value(Activation a, T x) {
  switch (a) {
    case Activation::silu: return x * sigmoid_of(x);
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return sigmoid_of(x);
    case Activation::relu: return x > T(0) ? x : T(0);
    case Activation::gelu: {
      const T u = T(kGeluC) * (x + T(kGeluA) * x * x * x);
      return T(0.5) * x * (T(1) + std::tanh(u));
    }
  }
  return x;
}

template <class T>
T act_derivative(Activation a, T x) {
  switch (a) {
    case Activation::silu: {
      const T s = sigmoid_of(x);
      return s * (T(1) + x * (T(1) - s));
    }
    case Activation::tanh: {
      const T t = std::tanh(x);
      return T(1) - t * t;
    }
    case Activation::sigmoid: {
      const T s = sigmoid_of(x);
      return s * (T(1) - s);
    }
    case Activation::relu: return x > T(0) ? T(1) : T(0);
    case Activation::gelu: {
      const T u = T(kGeluC) * (x + T(kGeluA) * x * x * x);
      const T t = std::tanh(u);
      const T du = T(kGeluC) * (T(1) + T(3 * kGeluA) * x * x);
      return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * du;
    }
  }
  return T(1);
}

// c[m x n] (+)= a[m x k] * b[k x n]
template <class Real>
void gemm(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = c + i * n;
    const Real* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      if (av == Real(0)) continue;
      const Real* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[k x n] += a[m x k]^T * g[m x n]
template <class Real>
void gemm_tn(const Real* a, const Real* g, Real* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * k;
    const Real* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      if (av == Real(0)) continue;
      Real* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
  }
}

template <class Real>
std::vector<Real> transposed(const Real* b, std::size_t rows, std::size_t cols) {
  std::vector<Real> t(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = b[i * cols + j];
  return t;
}

template <class Real>
void accumulate(Tape<Real>& tape, Var<Real> v, const std::vector<Real>& delta) {
  if (!tape.requires_grad(v.id())) return;
  auto& g = tape.grad_slot(v.id()).storage();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void require_rank(const Shape& s, std::size_t rank, std::string_view what) {
  if (s.size() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_to_string(s));
  }
}

// Layout helper for [T x N] or [B x T x N]: number of batches, steps, series.
struct SeriesLayout {
  std::size_t batches;
  std::size_t steps;
  std::size_t channels;
};

SeriesLayout series_layout(const Shape& s, std::string_view what) {
  if (s.size() == 2) return {1, s[0], s[1]};
  if (s.size() == 3) return {s[0], s[1], s[2]};
  throw DimensionError(std::string(what) + ": expected [T x N] or [B x T x N], got " + shape_to_string(s));
}

}  // namespace

double activation_value(Activation a, double x) { return act_value(a, x); }
double activation_derivative(Activation a, double x) { return act_derivative(a, x); }

template <class Real>
Var<Real> matmul(Var<Real> a, Var<Real> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_to_string(av.shape()) + " and " +
                         shape_to_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor<Real> out({m, n});
  gemm(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape<Real>& t, std::size_t self) {
    const Real* g = t.grad_slot(self).data().data();
    if (t.requires_grad(a.id())) {
      const auto bt = transposed(b.value().data().data(), k, n);
      gemm(g, bt.data(), t.grad_slot(a.id()).data().data(), m, n, k);
    }
    if (t.requires_grad(b.id())) {
      gemm_tn(a.value().data().data(), g, t.grad_slot(b.id()).data().data(), m, k, n);
    }
  });
}

template <class Real>
Var<Real> add(Var<Real> a, Var<Real> b) {
  return weighted_sum(a, 1.0, b, 1.0);
}

template <class Real>
Var<Real> sub(Var<Real> a, Var<Real> b) {
  return weighted_sum(a, 1.0, b, -1.0);
}

template <class Real>
Var<Real> weighted_sum(Var<Real> a, double wa, Var<Real> b, double wb) {
  require_same_shape(a.shape(), b.shape(), "elementwise sum");
  const auto& av = a.value();
  const auto& bv = b.value();
  const Real ca = Real(wa), cb = Real(wb);
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ca * av[i] + cb * bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b, ca, cb](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad_slot(self).storage();
    for (auto [v, c] : {std::pair{a, ca}, std::pair{b, cb}}) {
      if (!t.requires_grad(v.id())) continue;
      auto& dst = t.grad_slot(v.id()).storage();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += c * g[i];
    }
  });
}

template <class Real>
Var<Real> hadamard(Var<Real> a, Var<Real> b) {
  require_same_shape(a.shape(), b.shape(), "hadamard");
  const auto& av = a.value();
  const auto& bv = b.value();
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad_slot(self).storage();
    if (t.requires_grad(a.id())) {
      auto& dst = t.grad_slot(a.id()).storage();
      const auto& other = b.value().storage();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * other[i];
    }
    if (t.requires_grad(b.id())) {
      auto& dst = t.grad_slot(b.id()).storage();
      const auto& other = a.value().storage();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * other[i];
    }
  });
}

template <class Real>
Var<Real> add_row_bias(Var<Real> a, Var<Real> bias) {
  const auto& av = a.value();
  const auto& bv = bias.value();
  if (av.rank() != 2 || bv.size() != av.dim(1)) {
    throw DimensionError("add_row_bias: " + shape_to_string(av.shape()) + " with bias " +
                         shape_to_string(bv.shape()));
  }
  const std::size_t rows = av.dim(0), cols = av.dim(1);
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = av[i * cols + j] + bv[j];
  return a.tape().record(std::move(out), {a, bias}, [a, bias, rows, cols](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad_slot(self).storage();
    if (t.requires_grad(a.id())) {
      auto& dst = t.grad_slot(a.id()).storage();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
    if (t.requires_grad(bias.id())) {
      auto& dst = t.grad_slot(bias.id()).storage();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) dst[j] += g[i * cols + j];
    }
  });
}

template <class Real>
Var<Real> activate(Var<Real> x, Activation kind) {
  const auto& xv = x.value();
  Tensor<Real> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = act_value<Real>(kind, xv[i]);
  return x.tape().record(std::move(out), {x}, [x, kind](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad_slot(self).storage();
    const auto& in = x.value().storage();
    auto& dst = t.grad_slot(x.id()).storage();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * act_derivative<Real>(kind, in[i]);
  });
}

template <class Real>
Var<Real> dropout(Var<Real> x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const auto& xv = x.value();
  const Real keep_scale = Real(1.0 / (1.0 - rate));
  std::vector<Real> mask(xv.size());
  Tensor<Real> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    mask[i] = rng.uniform() < rate ? Real(0) : keep_scale;
    out[i] = xv[i] * mask[i];
  }
  return x.tape().record(std::move(out), {x}, [x, mask = std::move(mask)](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad_slot(self).storage();
    auto& dst = t.grad_slot(x.id()).storage();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * mask[i];
  });
}

template <class Real>
Var<Real> gather_rows(Var<Real> table, const std::vector<std::size_t>& indices) {
  const auto& tv = table.value();
  if (tv.rank() != 2) throw DimensionError("gather_rows: table must be rank 2, got " + shape_to_string(tv.shape()));
  if (indices.empty()) throw DimensionError("gather_rows: no indices");
  const std::size_t rows = tv.dim(0), cols = tv.dim(1);
  Tensor<Real> out({indices.size(), cols});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows) {
      throw BoundsError("gather_rows: index " + std::to_string(indices[r]) + " out of range for " +
                        std::to_string(rows) + " rows");
    }
    const Real* src = tv.data().data() + indices[r] * cols;
    std::copy(src, src + cols, out.data().data() + r * cols);
  }
  return table.tape().record(std::move(out), {table}, [table, indices, cols](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad_slot(self).storage();
    auto& dst = t.grad_slot(table.id()).storage();
    for (std::size_t r = 0; r < indices.size(); ++r)
      for (std::size_t j = 0; j < cols; ++j) dst[indices[r] * cols + j] += g[r * cols + j];
  });
}

template <class Real>
Var<Real> reshape(Var<Real> x, Shape shape) {
  Tensor<Real> out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [x](Tape<Real>& t, std::size_t self) {
    accumulate(t, x, t.grad_slot(self).storage());
  });
}

template <class Real>
Var<Real> transpose(Var<Real> x) {
  const auto& xv = x.value();
  std::size_t batches = 1, rows = 0, cols = 0;
  if (xv.rank() == 2) {
    rows = xv.dim(0);
    cols = xv.dim(1);
  } else if (xv.rank() == 3) {
    batches = xv.dim(0);
    rows = xv.dim(1);
    cols = xv.dim(2);
  } else {
    throw DimensionError("transpose: rank must be 2 or 3, got " + shape_to_string(xv.shape()));
  }
  Shape out_shape = xv.rank() == 2 ? Shape{cols, rows} : Shape{batches, cols, rows};
  Tensor<Real> out(out_shape);
  const std::size_t block = rows * cols;
  for (std::size_t b = 0; b < batches; ++b)
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out[b * block + j * rows + i] = xv[b * block + i * cols + j];
  return x.tape().record(std::move(out), {x}, [x, batches, rows, cols](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad_slot(self).storage();
    auto& dst = t.grad_slot(x.id()).storage();
    const std::size_t block = rows * cols;
    for (std::size_t b = 0; b < batches; ++b)
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) dst[b * block + i * cols + j] += g[b * block + j * rows + i];
  });
}

template <class Real>
ChannelStats<Real> channel_stats(Var<Real> x, double eps) {
  const auto& xv = x.value();
  require_rank(xv.shape(), 3, "channel_stats");
  const std::size_t B = xv.dim(0), T = xv.dim(1), N = xv.dim(2);
  Tensor<Real> mean({B, N});
  Tensor<Real> scale({B, N});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t n = 0; n < N; ++n) {
      double s = 0.0;
      for (std::size_t t = 0; t < T; ++t) s += xv.at(b, t, n);
      const double mu = s / double(T);
      double v = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double d = xv.at(b, t, n) - mu;
        v += d * d;
      }
      mean.at(b, n) = Real(mu);
      scale.at(b, n) = Real(std::sqrt(v / double(T) + eps));
    }
  }
  Tape<Real>& tape = x.tape();
  Var<Real> mean_var = tape.record(std::move(mean), {x}, [x, B, T, N](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad_slot(self);
    auto& dst = t.grad_slot(x.id());
    const Real inv = Real(1) / Real(T);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t s = 0; s < T; ++s)
        for (std::size_t n = 0; n < N; ++n) dst.at(b, s, n) += g.at(b, n) * inv;
  });
  Var<Real> scale_var;
  scale_var = tape.record(std::move(scale), {x}, [x, B, T, N, mean_var](Tape<Real>& t, std::size_t self) {
    // d scale / d x_t = (x_t - mean) / (T * scale)
    const auto& g = t.grad_slot(self);
    const auto& sv = t.value(self);
    const auto& mv = mean_var.value();
    const auto& xv = x.value();
    auto& dst = t.grad_slot(x.id());
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t s = 0; s < T; ++s)
        for (std::size_t n = 0; n < N; ++n)
          dst.at(b, s, n) += g.at(b, n) * (xv.at(b, s, n) - mv.at(b, n)) / (Real(T) * sv.at(b, n));
  });
  return {mean_var, scale_var};
}

template <class Real>
Var<Real> normalize(Var<Real> x, const ChannelStats<Real>& stats) {
  const auto& xv = x.value();
  require_rank(xv.shape(), 3, "normalize");
  const std::size_t B = xv.dim(0), T = xv.dim(1), N = xv.dim(2);
  require_same_shape(stats.mean.shape(), Shape{B, N}, "normalize statistics");
  const auto& mv = stats.mean.value();
  const auto& sv = stats.scale.value();
  Tensor<Real> out(xv.shape());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t s = 0; s < T; ++s)
      for (std::size_t n = 0; n < N; ++n) out.at(b, s, n) = (xv.at(b, s, n) - mv.at(b, n)) / sv.at(b, n);
  Var<Real> mean = stats.mean, scale = stats.scale;
  return x.tape().record(std::move(out), {x, mean, scale}, [x, mean, scale, B, T, N](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad_slot(self);
    const auto& xv = x.value();
    const auto& mv = mean.value();
    const auto& sv = scale.value();
    const bool gx = t.requires_grad(x.id()), gm = t.requires_grad(mean.id()), gs = t.requires_grad(scale.id());
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t n = 0; n < N; ++n) {
        const Real inv = Real(1) / sv.at(b, n);
        Real dmean = 0, dscale = 0;
        for (std::size_t s = 0; s < T; ++s) {
          const Real gi = g.at(b, s, n);
          if (gx) t.grad_slot(x.id()).at(b, s, n) += gi * inv;
          dmean -= gi * inv;
          dscale -= gi * (xv.at(b, s, n) - mv.at(b, n)) * inv * inv;
        }
        if (gm) t.grad_slot(mean.id()).at(b, n) += dmean;
        if (gs) t.grad_slot(scale.id()).at(b, n) += dscale;
      }
    }
  });
}

template <class Real>
Var<Real> denormalize(Var<Real> y, const ChannelStats<Real>& stats) {
  const auto& yv = y.value();
  require_rank(yv.shape(), 3, "denormalize");
  const std::size_t B = yv.dim(0), T = yv.dim(1), N = yv.dim(2);
  require_same_shape(stats.mean.shape(), Shape{B, N}, "denormalize statistics");
  require_same_shape(stats.scale.shape(), Shape{B, N}, "denormalize statistics");
  const auto& mv = stats.mean.value();
  const auto& sv = stats.scale.value();
  Tensor<Real> out(yv.shape());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t s = 0; s < T; ++s)
      for (std::size_t n = 0; n < N; ++n) out.at(b, s, n) = yv.at(b, s, n) * sv.at(b, n) + mv.at(b, n);
  Var<Real> mean = stats.mean, scale = stats.scale;
  return y.tape().record(std::move(out), {y, mean, scale}, [y, mean, scale, B, T, N](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad_slot(self);
    const auto& yv = y.value();
    const auto& sv = scale.value();
    const bool gy = t.requires_grad(y.id()), gm = t.requires_grad(mean.id()), gs = t.requires_grad(scale.id());
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t n = 0; n < N; ++n) {
        Real dmean = 0, dscale = 0;
        for (std::size_t s = 0; s < T; ++s) {
          const Real gi = g.at(b, s, n);
          if (gy) t.grad_slot(y.id()).at(b, s, n) += gi * sv.at(b, n);
          dmean += gi;
          dscale += gi * yv.at(b, s, n);
        }
        if (gm) t.grad_slot(mean.id()).at(b, n) += dmean;
        if (gs) t.grad_slot(scale.id()).at(b, n) += dscale;
      }
    }
  });
}

template <class Real>
Var<Real> mean_abs(Var<Real> x) {
  const auto& xv = x.value();
  if (xv.empty()) throw DomainError("mean_abs of an empty tensor");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += std::abs(double(xv[i]));
  Tensor<Real> out({1}, Real(s / double(xv.size())));
  return x.tape().record(std::move(out), {x}, [x](Tape<Real>& t, std::size_t self) {
    const auto& xv = x.value().storage();
    const Real g = t.grad_slot(self)[0] / Real(xv.size());
    auto& dst = t.grad_slot(x.id()).storage();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] > Real(0)) dst[i] += g;
      else if (xv[i] < Real(0)) dst[i] -= g;
    }
  });
}

template <class Real>
Var<Real> mean_square(Var<Real> x) {
  const auto& xv = x.value();
  if (xv.empty()) throw DomainError("mean_square of an empty tensor");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += double(xv[i]) * double(xv[i]);
  Tensor<Real> out({1}, Real(s / double(xv.size())));
  return x.tape().record(std::move(out), {x}, [x](Tape<Real>& t, std::size_t self) {
    const auto& xv = x.value().storage();
    const Real g = Real(2) * t.grad_slot(self)[0] / Real(xv.size());
    auto& dst = t.grad_slot(x.id()).storage();
    for (std::size_t i = 0; i < xv.size(); ++i) dst[i] += g * xv[i];
  });
}

template <class Real>
Var<Real> spectral_mean_abs(Var<Real> x) {
  const auto& xv = x.value();
  const SeriesLayout lay = series_layout(xv.shape(), "spectral_mean_abs");
  const std::size_t T = lay.steps, N = lay.channels;
  const DftTable table(T);
  // Spectra kept for the backward pass: re/im per (batch, k, channel).
  std::vector<double> re(xv.size()), im(xv.size());
  double total = 0.0;
  for (std::size_t b = 0; b < lay.batches; ++b) {
    const std::size_t base = b * T * N;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < T; ++k) {
        double r = 0.0, i = 0.0;
        for (std::size_t j = 0; j < T; ++j) {
          const double v = xv[base + j * N + n];
          r += v * table.cos_at(j, k);
          i -= v * table.sin_at(j, k);
        }
        re[base + k * N + n] = r;
        im[base + k * N + n] = i;
        total += std::hypot(r, i);
      }
    }
  }
  Tensor<Real> out({1}, Real(total / double(xv.size())));
  return x.tape().record(std::move(out), {x}, [x, lay, re = std::move(re), im = std::move(im)](Tape<Real>& t, std::size_t self) {
    const std::size_t T = lay.steps, N = lay.channels;
    const DftTable table(T);
    const double g = double(t.grad_slot(self)[0]) / double(lay.batches * T * N);
    auto& dst = t.grad_slot(x.id()).storage();
    std::vector<double> ur(T), ui(T);
    for (std::size_t b = 0; b < lay.batches; ++b) {
      const std::size_t base = b * T * N;
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < T; ++k) {
          const double r = re[base + k * N + n], i = im[base + k * N + n];
          const double mag = std::hypot(r, i);
          ur[k] = mag > 0.0 ? r / mag : 0.0;
          ui[k] = mag > 0.0 ? i / mag : 0.0;
        }
        // d|X_k|/dx_j = (Re X_k cos(theta_jk) - Im X_k sin(theta_jk)) / |X_k|
        for (std::size_t j = 0; j < T; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < T; ++k) acc += ur[k] * table.cos_at(j, k) - ui[k] * table.sin_at(j, k);
          dst[base + j * N + n] += Real(g * acc);
        }
      }
    }
  });
}

#define PAMNET_INSTANTIATE_OPS(Real)                                                   \
  template Var<Real> matmul(Var<Real>, Var<Real>);                                      \
  template Var<Real> add(Var<Real>, Var<Real>);                                         \
  template Var<Real> sub(Var<Real>, Var<Real>);                                         \
  template Var<Real> hadamard(Var<Real>, Var<Real>);                                    \
  template Var<Real> weighted_sum(Var<Real>, double, Var<Real>, double);                \
  template Var<Real> add_row_bias(Var<Real>, Var<Real>);                                \
  template Var<Real> activate(Var<Real>, Activation);                                   \
  template Var<Real> dropout(Var<Real>, double, Rng&, bool);                            \
  template Var<Real> gather_rows(Var<Real>, const std::vector<std::size_t>&);           \
  template Var<Real> reshape(Var<Real>, Shape);                                         \
  template Var<Real> transpose(Var<Real>);                                              \
  template ChannelStats<Real> channel_stats(Var<Real>, double);                         \
  template Var<Real> normalize(Var<Real>, const ChannelStats<Real>&);                   \
  template Var<Real> denormalize(Var<Real>, const ChannelStats<Real>&);                 \
  template Var<Real> mean_abs(Var<Real>);                                               \
  template Var<Real> mean_square(Var<Real>);                                            \
  template Var<Real> spectral_mean_abs(Var<Real>);

PAMNET_INSTANTIATE_OPS(float)
PAMNET_INSTANTIATE_OPS(double)

#undef PAMNET_INSTANTIATE_OPS

}  // namespace pamnet
