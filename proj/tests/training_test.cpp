#include <doctest.h>

#include <cmath>

#include "pamnet/errors.hpp"
#include "pamnet/training.hpp"
#include "support.hpp"

using namespace pamnet;
using pamnet::testing::random_tensor;
using T = Tensor<double>;

namespace {

ModelConfig small_model() {
  ModelConfig c;
  c.lookback = 12;
  c.horizon = 4;
  c.channels = 2;
  c.embed_dim = 8;
  c.cycle_len = 6;
  c.dropout_rate = 0.2;
  return c;
}

// Periodic two-channel windows; `sign` flips the targets.
WindowBatch periodic_windows(std::size_t count, std::size_t start, double sign, const ModelConfig& cfg) {
  WindowBatch batch;
  auto value = [](std::size_t t, std::size_t n) { return std::sin(0.7 * double(t) + double(n)); };
  for (std::size_t i = 0; i < count; ++i) {
    Window w;
    const std::size_t s = start + i;
    w.x = T({cfg.lookback, cfg.channels});
    w.y = T({cfg.horizon, cfg.channels});
    for (std::size_t t = 0; t < cfg.lookback; ++t)
      for (std::size_t n = 0; n < cfg.channels; ++n) w.x.at(t, n) = value(s + t, n);
    for (std::size_t h = 0; h < cfg.horizon; ++h)
      for (std::size_t n = 0; n < cfg.channels; ++n) w.y.at(h, n) = sign * value(s + cfg.lookback + h, n);
    w.tau_end = s + cfg.lookback - 1;
    batch.windows.push_back(std::move(w));
  }
  return batch;
}

T roll(const T& x, std::size_t k) {
  T out(x.shape());
  const std::size_t H = x.dim(0);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t n = 0; n < x.dim(1); ++n) out.at((h + k) % H, n) = x.at(h, n);
  return out;
}

}  // namespace

TEST_CASE("time_mae examples") {
  CHECK(time_mae(T::matrix({{1}, {2}}), T::matrix({{1}, {2}})) == 0.0);
  CHECK(time_mae(T::matrix({{1}, {0}}), T::matrix({{0}, {0}})) == 0.5);
  CHECK(time_mae(T::matrix({{1}, {3}}), T::matrix({{2}, {1}})) == 1.5);
  CHECK_THROWS_AS(time_mae(T::zeros({2, 1}), T::zeros({2, 2})), DimensionError);
}

TEST_CASE("freq_mae examples") {
  CHECK(freq_mae(T::matrix({{1}, {2}}), T::matrix({{1}, {2}})) == 0.0);
  CHECK(freq_mae(T::matrix({{1}, {0}}), T::matrix({{0}, {0}})) == doctest::Approx(1.0).epsilon(1e-14));
  Rng rng(6);
  const auto y = random_tensor({8, 3}, rng);
  const double base = freq_mae(y, T::zeros({8, 3}));
  for (double c : {0.5, 2.0, 13.0}) {
    T scaled = y;
    for (auto& v : scaled.storage()) v *= c;
    CHECK(freq_mae(scaled, T::zeros({8, 3})) == doctest::Approx(c * base).epsilon(1e-12));
  }
  CHECK_THROWS_AS(freq_mae(T::zeros({2, 1}), T::zeros({3, 1})), DimensionError);
}

TEST_CASE("hybrid loss composition and boundaries") {
  const T y = T::matrix({{1}, {0}});
  const T z = T::zeros({2, 1});
  CHECK(hybrid_loss(y, z, LossConfig{0.25, LossMode::hybrid}) == doctest::Approx(0.625).epsilon(1e-14));
  Rng rng(2);
  const auto a = random_tensor({6, 2}, rng), b = random_tensor({6, 2}, rng);
  CHECK(hybrid_loss(a, b, LossConfig{0.0, LossMode::hybrid}) == doctest::Approx(time_mae(a, b)).epsilon(1e-14));
  CHECK(hybrid_loss(a, b, LossConfig{1.0, LossMode::hybrid}) == doctest::Approx(freq_mae(a, b)).epsilon(1e-14));
  CHECK(hybrid_loss(a, b, LossConfig{0.9, LossMode::mae}) == time_mae(a, b));
  double sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  CHECK(hybrid_loss(a, b, LossConfig{0.9, LossMode::mse}) == doctest::Approx(sq / 12.0).epsilon(1e-14));
  CHECK_THROWS_AS((LossConfig{1.5, LossMode::hybrid}.validate()), ConfigError);
}

TEST_CASE("losses are nonnegative and vanish only on equality") {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t H = 1 + std::size_t(rng.uniform() * 10), N = 1 + std::size_t(rng.uniform() * 4);
    auto y = random_tensor({H, N}, rng);
    auto yhat = random_tensor({H, N}, rng);
    for (auto mode : {LossMode::hybrid, LossMode::mse, LossMode::mae}) {
      LossConfig cfg{rng.uniform(), mode};
      CHECK(hybrid_loss(y, yhat, cfg) > 0.0);
      CHECK(hybrid_loss(y, y, cfg) == 0.0);
    }
  }
}

TEST_CASE("freq_mae is not shift invariant except at zero residual") {
  Rng rng(3);
  const auto y = random_tensor({8, 2}, rng);
  const auto yhat = random_tensor({8, 2}, rng);
  CHECK(freq_mae(roll(y, 3), roll(y, 3)) == 0.0);
  // Rolling both sides only changes spectral phase; the modulus of the
  // difference is unchanged, so compare against a one-sided roll instead.
  CHECK(freq_mae(roll(y, 3), yhat) != doctest::Approx(freq_mae(y, yhat)));
}

TEST_CASE("graph objective agrees with value-level losses") {
  Rng rng(4);
  const auto y = random_tensor({5, 3}, rng), yhat = random_tensor({5, 3}, rng);
  for (auto mode : {LossMode::hybrid, LossMode::mse, LossMode::mae}) {
    LossConfig cfg{0.3, mode};
    Tape<double> tape;
    const double g = objective(tape.constant(yhat), tape.constant(y), cfg).value()[0];
    CHECK(g == doctest::Approx(hybrid_loss(y, yhat, cfg)).epsilon(1e-12));
  }
}

TEST_CASE("first Adam step moves by the learning rate") {
  Parameter<double> p("w", T::vector({0.5}));
  p.grad[0] = 2.0;
  AdamState<double> st;
  OptimConfig cfg;
  adam_step<double>({&p}, st, cfg);
  CHECK(p.value[0] - 0.5 == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(p.grad[0] == 0.0);
  CHECK(st.step == 1);

  Parameter<double> q("q", T::vector({1.0, -2.0}));
  AdamState<double> st2;
  adam_step<double>({&q}, st2, cfg);
  CHECK(q.value == T::vector({1.0, -2.0}));
}

TEST_CASE("Adam matches the textbook recurrence") {
  OptimConfig cfg;
  cfg.learning_rate = 3e-3;
  Rng rng(55);
  std::vector<Parameter<double>> params;
  params.emplace_back("a", random_tensor({3, 4}, rng));
  params.emplace_back("b", random_tensor({5}, rng));
  std::vector<Parameter<double>*> ptrs{&params[0], &params[1]};

  std::vector<std::vector<double>> theta, m, v;
  for (auto& p : params) {
    theta.emplace_back(p.value.storage());
    m.emplace_back(p.value.size(), 0.0);
    v.emplace_back(p.value.size(), 0.0);
  }
  AdamState<double> st;

  SUBCASE("two identical steps") {
    for (int step = 1; step <= 2; ++step) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t k = 0; k < params[i].value.size(); ++k) {
          const double g = 0.1 * double(k + 1) - 0.3;
          params[i].grad[k] = g;
          m[i][k] = 0.9 * m[i][k] + 0.1 * g;
          v[i][k] = 0.999 * v[i][k] + 0.001 * g * g;
          const double mh = m[i][k] / (1.0 - std::pow(0.9, step));
          const double vh = v[i][k] / (1.0 - std::pow(0.999, step));
          theta[i][k] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.eps);
        }
      }
      adam_step(ptrs, st, cfg);
    }
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t k = 0; k < theta[i].size(); ++k) CHECK(std::abs(params[i].value[k] - theta[i][k]) < 1e-12);
  }

  SUBCASE("100 random steps") {
    for (int step = 1; step <= 100; ++step) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t k = 0; k < params[i].value.size(); ++k) {
          const double g = rng.normal();
          params[i].grad[k] = g;
          m[i][k] = 0.9 * m[i][k] + 0.1 * g;
          v[i][k] = 0.999 * v[i][k] + 0.001 * g * g;
          const double mh = m[i][k] / (1.0 - std::pow(0.9, step));
          const double vh = v[i][k] / (1.0 - std::pow(0.999, step));
          theta[i][k] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.eps);
        }
      }
      adam_step(ptrs, st, cfg);
    }
    double worst = 0;
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t k = 0; k < theta[i].size(); ++k)
        worst = std::max(worst, std::abs(params[i].value[k] - theta[i][k]));
    CHECK(worst < 1e-12);
    CHECK(st.step == 100);
  }
}

TEST_CASE("Adam skips frozen parameters and rejects non-finite updates") {
  Parameter<double> p("w", T::vector({1.0}));
  p.frozen = true;
  p.grad[0] = 5.0;
  AdamState<double> st;
  adam_step<double>({&p}, st, OptimConfig{});
  CHECK(p.value[0] == 1.0);
  CHECK(p.grad[0] == 0.0);

  Parameter<double> q("q", T::vector({1.0}));
  q.grad[0] = std::nan("");
  AdamState<double> st2;
  CHECK_THROWS_AS(adam_step<double>({&q}, st2, OptimConfig{}), NumericError);
}

TEST_CASE("optimizer config validation") {
  OptimConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0.0;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = OptimConfig{};
  c.beta2 = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = OptimConfig{};
  c.patience = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("fit with zero learning rate leaves parameters untouched") {
  const auto cfg = small_model();
  auto params = init_params<float>(cfg, 3);
  const auto before = params;
  OptimConfig opt;
  opt.learning_rate = 0.0;
  opt.patience = 1;
  opt.batch_size = 8;
  auto report = fit(params, cfg, periodic_windows(40, 0, 1.0, cfg), periodic_windows(10, 60, 1.0, cfg), LossConfig{},
                    opt, 1);
  for (std::size_t i = 0; i < params.all().size(); ++i) CHECK(params.all()[i]->value == before.all()[i]->value);
  // A flat validation curve is not an improvement, so patience 1 stops after epoch 2.
  CHECK(report.val_loss.size() == 2);
  CHECK(report.stopped_early);
  CHECK(report.best_epoch == 1);
}

TEST_CASE("fit stops early when validation worsens") {
  const auto cfg = small_model();
  auto params = init_params<float>(cfg, 3);
  OptimConfig opt;
  opt.learning_rate = 1e-2;
  opt.patience = 1;
  opt.batch_size = 8;
  // Validation targets are negated, so learning the training task hurts them.
  auto report = fit(params, cfg, periodic_windows(64, 0, 1.0, cfg), periodic_windows(16, 80, -1.0, cfg),
                    LossConfig{}, opt, 2);
  REQUIRE(report.val_loss.size() >= 2);
  CHECK(report.val_loss[1] >= report.val_loss[0]);
  CHECK(report.val_loss.size() == 2);
  CHECK(report.stopped_early);
}

TEST_CASE("fit restores the best validation snapshot and is deterministic") {
  const auto cfg = small_model();
  auto train = periodic_windows(64, 0, 1.0, cfg);
  auto val = periodic_windows(16, 80, 1.0, cfg);
  OptimConfig opt;
  opt.max_epochs = 6;
  opt.batch_size = 16;
  auto p1 = init_params<float>(cfg, 9);
  auto p2 = init_params<float>(cfg, 9);
  auto r1 = fit(p1, cfg, train, val, LossConfig{}, opt, 4);
  auto r2 = fit(p2, cfg, train, val, LossConfig{}, opt, 4);
  CHECK(r1.train_loss == r2.train_loss);
  CHECK(r1.val_loss == r2.val_loss);
  for (std::size_t i = 0; i < p1.all().size(); ++i) CHECK(p1.all()[i]->value == p2.all()[i]->value);

  const double best = *std::min_element(r1.val_loss.begin(), r1.val_loss.end());
  CHECK(r1.best_val_loss == best);
  CHECK(r1.val_loss[r1.best_epoch - 1] == best);
  CHECK(evaluate_loss(p1, cfg, val, LossConfig{}) == best);
  CHECK(r1.train_loss.back() < r1.train_loss.front());
}

TEST_CASE("fit rejects empty splits") {
  const auto cfg = small_model();
  auto params = init_params<float>(cfg, 1);
  CHECK_THROWS_AS(fit(params, cfg, WindowBatch{}, periodic_windows(4, 0, 1.0, cfg), LossConfig{}, OptimConfig{}, 1),
                  ConfigError);
  CHECK_THROWS_AS(fit(params, cfg, periodic_windows(4, 0, 1.0, cfg), WindowBatch{}, LossConfig{}, OptimConfig{}, 1),
                  ConfigError);
}

TEST_CASE("loss mode does not change the forward graph") {
  const auto cfg = small_model();
  auto params = init_params<float>(cfg, 5);
  auto batch = stack_windows<float>(periodic_windows(3, 0, 1.0, cfg), {}, 0, 3);
  Tensor<float> first;
  for (auto mode : {LossMode::hybrid, LossMode::mse, LossMode::mae}) {
    Tape<float> tape;
    Rng rng(17);
    auto g = forward_graph(tape, params, cfg, batch.x, batch.tau_end, rng, true);
    auto loss = objective(g.yhat, tape.constant(batch.y), LossConfig{0.25, mode});
    tape.backward(loss);
    if (first.empty()) first = g.yhat.value();
    CHECK(g.yhat.value() == first);
  }
}

TEST_CASE("grad_check passes per loss mode and catches a corrupted gradient") {
  ModelConfig cfg;
  cfg.lookback = 8;
  cfg.horizon = 4;
  cfg.channels = 3;
  cfg.embed_dim = 6;
  cfg.cycle_len = 12;
  for (auto mode : {LossMode::mse, LossMode::hybrid}) {
    auto r = grad_check(cfg, LossConfig{0.25, mode}, 1, 1e-4);
    CHECK(r.passed);
  }
  auto bad = grad_check(cfg, LossConfig{}, 1, 1e-4, [](ModelParams<double>& p) { p.amp_mod.w2.grad[3] += 1.0; });
  CHECK_FALSE(bad.passed);
  CHECK(bad.failures() == "amp_mod.W2");
}
