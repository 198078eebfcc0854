#include "pamnet/model.hpp"

#include <cmath>
#include <numbers>

#include "pamnet/errors.hpp"

namespace pamnet {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string("model.") + name + " must be >= 1");
  };
  positive(lookback, "L");
  positive(horizon, "H");
  positive(channels, "N");
  positive(embed_dim, "d");
  positive(cycle_len, "c");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
  if (use_modulator && !use_phase && !use_amplitude) {
    throw ConfigError("use_modulator requires at least one of use_phase / use_amplitude");
  }
  if (!(norm_eps >= 0.0)) throw ConfigError("model.eps must be non-negative");
}

template <class Real>
std::vector<Parameter<Real>*> ModelParams<Real>::all() {
  return {&tokenizer_w,  &tokenizer_b,  &carriers.phase, &carriers.amplitude, &phase_mod.w1,
          &phase_mod.w2, &phase_mod.w3, &amp_mod.w1,     &amp_mod.w2,         &amp_mod.w3,
          &head_hidden_w, &head_hidden_b, &head_out_w,   &head_out_b};
}

template <class Real>
std::vector<const Parameter<Real>*> ModelParams<Real>::all() const {
  auto* self = const_cast<ModelParams*>(this);
  std::vector<const Parameter<Real>*> out;
  for (auto* p : self->all()) out.push_back(p);
  return out;
}

template <class Real>
Parameter<Real>* ModelParams<Real>::find(std::string_view name) {
  for (auto* p : all())
    if (p->name == name) return p;
  return nullptr;
}

template <class Real>
void ModelParams<Real>::zero_grad() {
  for (auto* p : all()) p->zero_grad();
}

template <class Real>
template <class Other>
ModelParams<Other> ModelParams<Real>::cast() const {
  ModelParams<Other> out;
  auto src = all();
  auto dst = out.all();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i]->name = src[i]->name;
    dst[i]->value = src[i]->value.template cast<Other>();
    dst[i]->grad = src[i]->grad.template cast<Other>();
    dst[i]->frozen = src[i]->frozen;
  }
  return out;
}

bool parameter_is_active(std::string_view name, const ModelConfig& config) {
  const bool phase = config.use_modulator && config.use_phase;
  const bool amp = config.use_modulator && config.use_amplitude;
  if (name == "carrier.phase") return phase;
  if (name == "carrier.amplitude") return amp;
  if (name.starts_with("phase_mod.")) return phase || (amp && config.share_modulator_weights);
  if (name.starts_with("amp_mod.")) return amp && !config.share_modulator_weights;
  return true;
}

template <class Real>
std::vector<Parameter<Real>*> active_parameters(ModelParams<Real>& params, const ModelConfig& config) {
  std::vector<Parameter<Real>*> out;
  for (auto* p : params.all())
    if (parameter_is_active(p->name, config)) out.push_back(p);
  return out;
}

std::vector<double> sinusoidal_row(std::size_t t, std::size_t cycle_len, std::size_t width) {
  std::vector<double> row(width);
  const double base = 2.0 * std::numbers::pi * double(t) / double(cycle_len);
  for (std::size_t j = 0; j < width; ++j) {
    const double angle = base * double(j / 2 + 1);
    row[j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }
  return row;
}

namespace {

template <class Real>
Parameter<Real> xavier(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
  const double stddev = std::sqrt(2.0 / double(rows + cols));
  Tensor<Real> value({rows, cols});
  for (auto& v : value.storage()) v = Real(rng.normal(0.0, stddev));
  return Parameter<Real>(std::move(name), std::move(value));
}

template <class Real>
Parameter<Real> zero_bias(std::string name, std::size_t n) {
  return Parameter<Real>(std::move(name), Tensor<Real>::zeros({n}));
}

template <class Real>
ModulatorParams<Real> make_modulator(const std::string& prefix, std::size_t d, Rng& rng) {
  ModulatorParams<Real> m;
  m.w1 = xavier<Real>(prefix + ".W1", d, d, rng);
  m.w2 = xavier<Real>(prefix + ".W2", d, d, rng);
  m.w3 = xavier<Real>(prefix + ".W3", d, d, rng);
  return m;
}

}  // namespace

template <class Real>
ModelParams<Real> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t L = config.lookback, H = config.horizon, N = config.channels, d = config.embed_dim,
                    c = config.cycle_len;
  Rng rng(seed);
  ModelParams<Real> p;
  p.tokenizer_w = xavier<Real>("tokenizer.W", L, d, rng);
  p.tokenizer_b = zero_bias<Real>("tokenizer.b", d);
  p.carriers.phase = xavier<Real>("carrier.phase", c, d, rng);
  p.carriers.amplitude = xavier<Real>("carrier.amplitude", c, N * d, rng);
  p.phase_mod = make_modulator<Real>("phase_mod", d, rng);
  p.amp_mod = make_modulator<Real>("amp_mod", d, rng);
  p.head_hidden_w = xavier<Real>("head.hidden.W", d, d, rng);
  p.head_hidden_b = zero_bias<Real>("head.hidden.b", d);
  p.head_out_w = xavier<Real>("head.out.W", d, H, rng);
  p.head_out_b = zero_bias<Real>("head.out.b", H);
  if (config.sinusoidal_carriers) {
    for (std::size_t t = 0; t < c; ++t) {
      const auto row = sinusoidal_row(t, c, d);
      for (std::size_t j = 0; j < d; ++j) p.carriers.phase.value.at(t, j) = Real(row[j]);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t j = 0; j < d; ++j) p.carriers.amplitude.value.at(t, n * d + j) = Real(row[j]);
    }
    p.carriers.phase.frozen = true;
    p.carriers.amplitude.frozen = true;
  }
  return p;
}

std::size_t cycle_index(std::size_t tau_end, std::size_t cycle_len) {
  if (cycle_len == 0) throw ConfigError("cycle length must be >= 1");
  return tau_end % cycle_len;
}

template <class Real>
NormalizedWindow<Real> instance_normalize(const Tensor<Real>& x, double eps) {
  if (x.rank() != 2) throw DimensionError("instance_normalize expects [L x N], got " + shape_to_string(x.shape()));
  Tape<Real> tape;
  auto in = tape.constant(x.reshaped({1, x.dim(0), x.dim(1)}));
  auto stats = channel_stats(in, eps);
  auto out = normalize(in, stats);
  NormalizedWindow<Real> w;
  w.values = out.value().reshaped(x.shape());
  w.mean = stats.mean.value().reshaped({x.dim(1)});
  w.sigma = Tensor<Real>({x.dim(1)});
  const auto& scale = stats.scale.value();
  for (std::size_t n = 0; n < x.dim(1); ++n) {
    const double s2 = double(scale[n]) * double(scale[n]) - eps;
    w.sigma[n] = Real(std::sqrt(std::max(0.0, s2)));
  }
  return w;
}

template <class Real>
Tensor<Real> instance_denormalize(const Tensor<Real>& y, const Tensor<Real>& mean, const Tensor<Real>& sigma,
                                  double eps) {
  if (y.rank() != 2 || mean.size() != y.dim(1) || sigma.size() != y.dim(1)) {
    throw DimensionError("instance_denormalize: " + shape_to_string(y.shape()) + " with statistics " +
                         shape_to_string(mean.shape()) + "/" + shape_to_string(sigma.shape()));
  }
  Tensor<Real> out(y.shape());
  for (std::size_t h = 0; h < y.dim(0); ++h) {
    for (std::size_t n = 0; n < y.dim(1); ++n) {
      const double scale = std::sqrt(double(sigma[n]) * double(sigma[n]) + eps);
      out.at(h, n) = Real(double(y.at(h, n)) * scale + double(mean[n]));
    }
  }
  return out;
}

namespace {

// x [B x L x N] -> [(B*N) x d]
template <class Real>
Var<Real> tokenize(Var<Real> x, Var<Real> w, Var<Real> b) {
  const auto& s = x.shape();
  if (s.size() != 3 || w.shape().size() != 2 || s[1] != w.shape()[0]) {
    throw DimensionError("variate_tokenize: input " + shape_to_string(s) + " with W " + shape_to_string(w.shape()));
  }
  auto tokens = reshape(transpose(x), {s[0] * s[2], s[1]});
  return add_row_bias(matmul(tokens, w), b);
}

template <class Real>
void check_stage(Var<Real> v, const char* stage) {
  v.value().check_finite(stage);
}

}  // namespace

template <class Real>
Tensor<Real> variate_tokenize(const Tensor<Real>& x, const Parameter<Real>& w, const Parameter<Real>& b) {
  if (x.rank() != 2) throw DimensionError("variate_tokenize expects [L x N], got " + shape_to_string(x.shape()));
  if (b.value.size() != w.value.dim(1)) {
    throw DimensionError("variate_tokenize: bias " + shape_to_string(b.value.shape()) + " does not match W " +
                         shape_to_string(w.value.shape()));
  }
  Tape<Real> tape;
  auto out = tokenize(tape.constant(x.reshaped({1, x.dim(0), x.dim(1)})), tape.constant(w.value),
                      tape.constant(b.value));
  return out.value();
}

template <class Real>
Tensor<Real> phase_carrier(const CarrierBank<Real>& bank, std::size_t t, std::size_t channels) {
  Tape<Real> tape;
  auto out = gather_rows(tape.constant(bank.phase.value), std::vector<std::size_t>(channels, t));
  return out.value();
}

template <class Real>
Tensor<Real> amplitude_carrier(const CarrierBank<Real>& bank, std::size_t t, std::size_t channels,
                               std::size_t embed_dim) {
  if (bank.amplitude.value.dim(1) != channels * embed_dim) {
    throw DimensionError("amplitude carrier row length " + std::to_string(bank.amplitude.value.dim(1)) +
                         " != N*d = " + std::to_string(channels * embed_dim));
  }
  Tape<Real> tape;
  auto row = gather_row(tape.constant(bank.amplitude.value), t);
  return row.value().reshaped({channels, embed_dim});
}

template <class Real>
Var<Real> modulate(Var<Real> ex, Var<Real> carrier, ModulatorParams<Real>& params, const ModelConfig& config,
                   Rng& rng, bool training) {
  require_same_shape(ex.shape(), carrier.shape(), "modulate");
  Tape<Real>& tape = ex.tape();
  auto gate = activate(matmul(ex, tape.parameter(params.w1)), config.activation);
  auto projected = matmul(carrier, tape.parameter(params.w2));
  Var<Real> mixed;
  if (config.dropout_before_product) {
    mixed = hadamard(dropout(gate, config.dropout_rate, rng, training), projected);
  } else {
    mixed = dropout(hadamard(gate, projected), config.dropout_rate, rng, training);
  }
  return matmul(mixed, tape.parameter(params.w3));
}

template <class Real>
Tensor<Real> modulate(const Tensor<Real>& ex, const Tensor<Real>& carrier, const ModulatorParams<Real>& params,
                      const ModelConfig& config, Rng& rng, bool training) {
  Tape<Real> tape;
  ModulatorParams<Real> frozen = params;
  for (auto* p : {&frozen.w1, &frozen.w2, &frozen.w3}) p->frozen = true;
  auto out = modulate(tape.constant(ex), tape.constant(carrier), frozen, config, rng, training);
  return out.value();
}

template <class Real>
ForwardGraph<Real> forward_graph(Tape<Real>& tape, ModelParams<Real>& params, const ModelConfig& config,
                                 Tensor<Real> x, const std::vector<std::size_t>& tau_end, Rng& rng,
                                 bool training) {
  const std::size_t L = config.lookback, N = config.channels, d = config.embed_dim, H = config.horizon;
  if (x.rank() != 3 || x.dim(1) != L || x.dim(2) != N) {
    throw DimensionError("forward: input " + shape_to_string(x.shape()) + " does not match L=" +
                         std::to_string(L) + ", N=" + std::to_string(N));
  }
  const std::size_t B = x.dim(0);
  if (tau_end.size() != B) throw DimensionError("forward: one tau_end per window required");

  ForwardGraph<Real> g;
  g.input = tape.constant(std::move(x));
  Var<Real> series = g.input;
  if (config.instance_norm) {
    g.stats = channel_stats(series, config.norm_eps);
    series = normalize(series, g.stats);
  }
  g.ex = tokenize(series, tape.parameter(params.tokenizer_w), tape.parameter(params.tokenizer_b));
  check_stage(g.ex, "variate tokenization");

  if (config.use_modulator) {
    std::vector<std::size_t> cycle(B);
    for (std::size_t b = 0; b < B; ++b) cycle[b] = cycle_index(tau_end[b], config.cycle_len);
    ModulatorParams<Real>& amp_params = config.share_modulator_weights ? params.phase_mod : params.amp_mod;
    if (config.use_phase) {
      std::vector<std::size_t> rows;
      rows.reserve(B * N);
      for (std::size_t b = 0; b < B; ++b) rows.insert(rows.end(), N, cycle[b]);
      g.ep = gather_rows(tape.parameter(params.carriers.phase), rows);
      g.mp = modulate(g.ex, g.ep, params.phase_mod, config, rng, training);
      check_stage(g.mp, "phase modulation");
    }
    if (config.use_amplitude) {
      if (params.carriers.amplitude.value.dim(1) != N * d) {
        throw DimensionError("amplitude carrier width does not equal N*d");
      }
      g.ea = reshape(gather_rows(tape.parameter(params.carriers.amplitude), cycle), {B * N, d});
      g.ma = modulate(g.ex, g.ea, amp_params, config, rng, training);
      check_stage(g.ma, "amplitude modulation");
    }
    if (config.use_phase && config.use_amplitude) g.mx = add(g.mp, g.ma);
    else g.mx = config.use_phase ? g.mp : g.ma;
  } else {
    g.mx = g.ex;
  }

  auto hidden = activate(add_row_bias(matmul(g.mx, tape.parameter(params.head_hidden_w)),
                                      tape.parameter(params.head_hidden_b)),
                         config.activation);
  auto head = add_row_bias(matmul(hidden, tape.parameter(params.head_out_w)), tape.parameter(params.head_out_b));
  auto y = transpose(reshape(head, {B, N, H}));
  if (config.instance_norm) y = denormalize(y, g.stats);
  check_stage(y, "forecast head");
  g.yhat = y;
  return g;
}

template <class Real>
Forecast<Real> forward(ModelParams<Real>& params, const ModelConfig& config, const Tensor<Real>& x,
                       std::size_t tau_end, Rng& rng, bool training) {
  if (x.rank() != 2) throw DimensionError("forward expects [L x N], got " + shape_to_string(x.shape()));
  Tape<Real> tape;
  auto g = forward_graph(tape, params, config, x.reshaped({1, x.dim(0), x.dim(1)}), {tau_end}, rng, training);
  Forecast<Real> f;
  f.yhat = g.yhat.value().reshaped({config.horizon, config.channels});
  auto copy = [](Var<Real> v) { return v.valid() ? v.value() : Tensor<Real>(); };
  f.acts.ex = copy(g.ex);
  f.acts.ep = copy(g.ep);
  f.acts.ea = copy(g.ea);
  f.acts.mp = copy(g.mp);
  f.acts.ma = copy(g.ma);
  f.acts.mx = copy(g.mx);
  if (config.instance_norm) {
    const auto& scale = g.stats.scale.value();
    f.acts.norm_mu = g.stats.mean.value().reshaped({config.channels});
    f.acts.norm_sigma = Tensor<Real>({config.channels});
    for (std::size_t n = 0; n < config.channels; ++n) {
      const double s2 = double(scale[n]) * double(scale[n]) - config.norm_eps;
      f.acts.norm_sigma[n] = Real(std::sqrt(std::max(0.0, s2)));
    }
  }
  return f;
}

template <class Real>
std::vector<Tensor<Real>> predict(ModelParams<Real>& params, const ModelConfig& config,
                                  const std::vector<Tensor<Real>>& windows, const std::vector<std::size_t>& tau_end,
                                  std::size_t batch_size) {
  if (windows.size() != tau_end.size()) throw DimensionError("predict: one tau_end per window required");
  const std::size_t L = config.lookback, N = config.channels, H = config.horizon;
  std::vector<Tensor<Real>> out;
  out.reserve(windows.size());
  Rng unused(0);
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const std::size_t B = std::min(batch_size, windows.size() - start);
    Tensor<Real> x({B, L, N});
    for (std::size_t b = 0; b < B; ++b) {
      const auto& w = windows[start + b];
      require_same_shape(w.shape(), Shape{L, N}, "predict window");
      std::copy(w.storage().begin(), w.storage().end(), x.storage().begin() + b * L * N);
    }
    std::vector<std::size_t> taus(tau_end.begin() + start, tau_end.begin() + start + B);
    Tape<Real> tape;
    auto g = forward_graph(tape, params, config, std::move(x), taus, unused, false);
    const auto& y = g.yhat.value();
    for (std::size_t b = 0; b < B; ++b) {
      std::vector<Real> slice(y.storage().begin() + b * H * N, y.storage().begin() + (b + 1) * H * N);
      out.emplace_back(Shape{H, N}, std::move(slice));
    }
  }
  return out;
}

#define PAMNET_INSTANTIATE_MODEL(Real)                                                                        \
  template struct ModelParams<Real>;                                                                         \
  template std::vector<Parameter<Real>*> active_parameters(ModelParams<Real>&, const ModelConfig&);          \
  template ModelParams<Real> init_params<Real>(const ModelConfig&, std::uint64_t);                           \
  template NormalizedWindow<Real> instance_normalize(const Tensor<Real>&, double);                           \
  template Tensor<Real> instance_denormalize(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&,   \
                                             double);                                                        \
  template Tensor<Real> variate_tokenize(const Tensor<Real>&, const Parameter<Real>&, const Parameter<Real>&); \
  template Tensor<Real> phase_carrier(const CarrierBank<Real>&, std::size_t, std::size_t);                   \
  template Tensor<Real> amplitude_carrier(const CarrierBank<Real>&, std::size_t, std::size_t, std::size_t);  \
  template Var<Real> modulate(Var<Real>, Var<Real>, ModulatorParams<Real>&, const ModelConfig&, Rng&, bool); \
  template Tensor<Real> modulate(const Tensor<Real>&, const Tensor<Real>&, const ModulatorParams<Real>&,     \
                                 const ModelConfig&, Rng&, bool);                                            \
  template ForwardGraph<Real> forward_graph(Tape<Real>&, ModelParams<Real>&, const ModelConfig&, Tensor<Real>, \
                                            const std::vector<std::size_t>&, Rng&, bool);                    \
  template Forecast<Real> forward(ModelParams<Real>&, const ModelConfig&, const Tensor<Real>&, std::size_t,  \
                                  Rng&, bool);                                                               \
  template std::vector<Tensor<Real>> predict(ModelParams<Real>&, const ModelConfig&,                          \
                                             const std::vector<Tensor<Real>>&, const std::vector<std::size_t>&, \
                                             std::size_t);

PAMNET_INSTANTIATE_MODEL(float)
PAMNET_INSTANTIATE_MODEL(double)

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;

#undef PAMNET_INSTANTIATE_MODEL

}  // namespace pamnet
