#include "pamnet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "pamnet/errors.hpp"

namespace pamnet {

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::hybrid: return "hybrid";
    case LossMode::mse: return "mse";
    case LossMode::mae: return "mae";
  }
  return "?";
}

LossMode parse_loss_mode(const std::string& name) {
  if (name == "hybrid") return LossMode::hybrid;
  if (name == "mse") return LossMode::mse;
  if (name == "mae") return LossMode::mae;
  throw ConfigError("unknown loss mode '" + name + "'");
}

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("loss.alpha must lie in [0, 1]");
}

void OptimConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("optim.lr must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optim.beta1 and optim.beta2 must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("optim.eps must be positive");
  if (patience < 1) throw ConfigError("optim.patience must be >= 1");
  if (batch_size < 1) throw ConfigError("optim.batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("optim.epochs must be >= 1");
}

template <class Real>
Var<Real> objective(Var<Real> yhat, Var<Real> y, const LossConfig& cfg) {
  require_same_shape(yhat.shape(), y.shape(), "loss");
  auto residual = sub(y, yhat);
  switch (cfg.mode) {
    case LossMode::mse: return mean_square(residual);
    case LossMode::mae: return mean_abs(residual);
    case LossMode::hybrid: break;
  }
  cfg.validate();
  return weighted_sum(mean_abs(residual), 1.0 - cfg.alpha, spectral_mean_abs(residual), cfg.alpha);
}

namespace {

template <class F>
double scalar_loss(const Tensor<double>& y, const Tensor<double>& yhat, F&& f) {
  require_same_shape(y.shape(), yhat.shape(), "loss");
  Tape<double> tape;
  return f(tape.constant(yhat), tape.constant(y)).value()[0];
}

}  // namespace

double time_mae(const Tensor<double>& y, const Tensor<double>& yhat) {
  return scalar_loss(y, yhat, [](Var<double> a, Var<double> b) { return mean_abs(sub(b, a)); });
}

double freq_mae(const Tensor<double>& y, const Tensor<double>& yhat) {
  return scalar_loss(y, yhat, [](Var<double> a, Var<double> b) { return spectral_mean_abs(sub(b, a)); });
}

double hybrid_loss(const Tensor<double>& y, const Tensor<double>& yhat, const LossConfig& cfg) {
  return scalar_loss(y, yhat, [&](Var<double> a, Var<double> b) { return objective(a, b, cfg); });
}

template <class Real>
void adam_step(const std::vector<Parameter<Real>*>& params, AdamState<Real>& state, const OptimConfig& cfg) {
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.push_back(Tensor<Real>::zeros(p->value.shape()));
      state.v.push_back(Tensor<Real>::zeros(p->value.shape()));
    }
  }
  if (state.m.size() != params.size()) throw Error("adam state does not match the parameter list");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  const Real b1 = Real(cfg.beta1), b2 = Real(cfg.beta2);
  const Real lr = Real(cfg.learning_rate), eps = Real(cfg.eps);
  const Real inv_c1 = Real(1.0 / c1), inv_c2 = Real(1.0 / c2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<Real>& p = *params[i];
    if (p.frozen) {
      p.zero_grad();
      continue;
    }
    auto& theta = p.value.storage();
    const auto& g = p.grad.storage();
    auto& m = state.m[i].storage();
    auto& v = state.v[i].storage();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = b1 * m[k] + (Real(1) - b1) * g[k];
      v[k] = b2 * v[k] + (Real(1) - b2) * g[k] * g[k];
      const Real mhat = m[k] * inv_c1;
      const Real vhat = v[k] * inv_c2;
      theta[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    if (!p.value.all_finite()) throw NumericError("non-finite value after Adam update of " + p.name);
    p.zero_grad();
  }
}

template <class Real>
StackedBatch<Real> stack_windows(const WindowBatch& batch, const std::vector<std::size_t>& order,
                                 std::size_t first, std::size_t count) {
  const auto& w0 = batch.windows.at(order.empty() ? first : order.at(first));
  const std::size_t L = w0.x.dim(0), H = w0.y.dim(0), N = w0.x.dim(1);
  StackedBatch<Real> s;
  s.x = Tensor<Real>({count, L, N});
  s.y = Tensor<Real>({count, H, N});
  s.tau_end.resize(count);
  for (std::size_t b = 0; b < count; ++b) {
    const Window& w = batch.windows.at(order.empty() ? first + b : order.at(first + b));
    std::copy(w.x.storage().begin(), w.x.storage().end(), s.x.storage().begin() + std::ptrdiff_t(b * L * N));
    std::copy(w.y.storage().begin(), w.y.storage().end(), s.y.storage().begin() + std::ptrdiff_t(b * H * N));
    s.tau_end[b] = w.tau_end;
  }
  return s;
}

template <class Real>
double evaluate_loss(ModelParams<Real>& params, const ModelConfig& config, const WindowBatch& batch,
                     const LossConfig& loss_cfg, std::size_t batch_size) {
  if (batch.empty()) throw ConfigError("cannot evaluate an empty window set");
  Rng unused(0);
  double total = 0.0;
  for (std::size_t first = 0; first < batch.size(); first += batch_size) {
    const std::size_t count = std::min(batch_size, batch.size() - first);
    auto s = stack_windows<Real>(batch, {}, first, count);
    Tape<Real> tape;
    auto g = forward_graph(tape, params, config, std::move(s.x), s.tau_end, unused, false);
    auto loss = objective(g.yhat, tape.constant(std::move(s.y)), loss_cfg);
    total += double(loss.value()[0]) * double(count);
  }
  return total / double(batch.size());
}

template <class Real>
TrainReport fit(ModelParams<Real>& params, const ModelConfig& config, const WindowBatch& train,
                const WindowBatch& val, const LossConfig& loss_cfg, const OptimConfig& optim_cfg,
                std::uint64_t seed) {
  if (train.empty()) throw ConfigError("fit: empty training split");
  if (val.empty()) throw ConfigError("fit: empty validation split");
  config.validate();
  loss_cfg.validate();
  optim_cfg.validate();
  const auto started = std::chrono::steady_clock::now();

  Rng shuffle_rng(seed);
  Rng dropout_rng(seed ^ 0xD50F0A7ULL);
  AdamState<Real> adam;
  auto trainable = params.all();
  params.zero_grad();

  TrainReport report;
  report.best_val_loss = std::numeric_limits<double>::infinity();
  ModelParams<Real> best = params;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= optim_cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < order.size(); first += optim_cfg.batch_size) {
      const std::size_t count = std::min(optim_cfg.batch_size, order.size() - first);
      auto s = stack_windows<Real>(train, order, first, count);
      Tape<Real> tape;
      auto g = forward_graph(tape, params, config, std::move(s.x), s.tau_end, dropout_rng, true);
      auto loss = objective(g.yhat, tape.constant(std::move(s.y)), loss_cfg);
      const double value = double(loss.value()[0]);
      if (!std::isfinite(value)) throw NumericError("non-finite training loss in epoch " + std::to_string(epoch));
      tape.backward(loss);
      adam_step(trainable, adam, optim_cfg);
      epoch_loss += value * double(count);
    }
    report.train_loss.push_back(epoch_loss / double(train.size()));
    const double val_loss = evaluate_loss(params, config, val, loss_cfg);
    report.val_loss.push_back(val_loss);
    if (val_loss < report.best_val_loss) {
      report.best_val_loss = val_loss;
      report.best_epoch = epoch;
      best = params;
      since_best = 0;
    } else if (++since_best >= optim_cfg.patience) {
      report.stopped_early = epoch < optim_cfg.max_epochs;
      break;
    }
  }
  params = std::move(best);
  params.zero_grad();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::string GradCheckReport::failures() const {
  std::string out;
  for (const auto& g : groups) {
    if (g.passed) continue;
    if (!out.empty()) out += ", ";
    out += g.name;
  }
  return out;
}

GradCheckReport grad_check(ModelConfig config, const LossConfig& loss_cfg, std::uint64_t seed, double tolerance,
                           const GradientHook& hook) {
  config.dropout_rate = 0.0;
  config.validate();
  constexpr double step = 1e-5;
  constexpr double floor = 1e-6;

  auto params = init_params<double>(config, seed);
  Rng data_rng(seed + 1);
  Tensor<double> x({config.lookback, config.channels});
  Tensor<double> y({config.horizon, config.channels});
  for (auto& v : x.storage()) v = data_rng.normal();
  for (auto& v : y.storage()) v = data_rng.normal();
  const std::size_t tau_end = std::size_t(data_rng.next() % 1000);

  auto loss_at = [&](ModelParams<double>& p, bool with_backward) {
    Tape<double> tape;
    Rng unused(0);
    auto g = forward_graph(tape, p, config, x.reshaped({1, config.lookback, config.channels}), {tau_end}, unused,
                           true);
    auto loss = objective(g.yhat, tape.constant(y.reshaped({1, config.horizon, config.channels})), loss_cfg);
    if (with_backward) tape.backward(loss);
    return loss.value()[0];
  };

  params.zero_grad();
  loss_at(params, true);
  if (hook) hook(params);

  GradCheckReport report;
  report.tolerance = tolerance;
  for (auto* p : active_parameters(params, config)) {
    if (p->frozen) continue;
    GradCheckGroup group;
    group.name = p->name;
    auto& theta = p->value.storage();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double saved = theta[k];
      theta[k] = saved + step;
      const double up = loss_at(params, false);
      theta[k] = saved - step;
      const double down = loss_at(params, false);
      theta[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p->grad[k];
      const double abs_err = std::abs(analytic - numeric);
      const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), floor});
      group.max_abs_error = std::max(group.max_abs_error, abs_err);
      if (rel > group.max_rel_error) {
        group.max_rel_error = rel;
        group.worst_index = k;
      }
    }
    group.passed = group.max_rel_error < tolerance;
    report.passed = report.passed && group.passed;
    report.groups.push_back(std::move(group));
  }
  return report;
}

#define PAMNET_INSTANTIATE_TRAINING(Real)                                                                        \
  template Var<Real> objective(Var<Real>, Var<Real>, const LossConfig&);                                        \
  template void adam_step(const std::vector<Parameter<Real>*>&, AdamState<Real>&, const OptimConfig&);          \
  template StackedBatch<Real> stack_windows<Real>(const WindowBatch&, const std::vector<std::size_t>&,           \
                                                  std::size_t, std::size_t);                                    \
  template double evaluate_loss(ModelParams<Real>&, const ModelConfig&, const WindowBatch&, const LossConfig&,  \
                                std::size_t);                                                                   \
  template TrainReport fit(ModelParams<Real>&, const ModelConfig&, const WindowBatch&, const WindowBatch&,      \
                           const LossConfig&, const OptimConfig&, std::uint64_t);

PAMNET_INSTANTIATE_TRAINING(float)
PAMNET_INSTANTIATE_TRAINING(double)

#undef PAMNET_INSTANTIATE_TRAINING

}  // namespace pamnet
