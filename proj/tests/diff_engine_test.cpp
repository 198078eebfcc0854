#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "pamnet/dft.hpp"
#include "pamnet/errors.hpp"
#include "pamnet/ops.hpp"
#include "support.hpp"

using namespace pamnet;
using pamnet::testing::fd_max_rel_error;
using pamnet::testing::random_tensor;
using T = Tensor<double>;
using V = std::vector<Var<double>>;

namespace {

// Direct summation in long double, angles computed from scratch.
std::vector<std::complex<long double>> reference_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<long double>> out(n);
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<long double> acc = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const long double angle = -two_pi * (long double)(j) * (long double)(k) / (long double)(n);
      acc += (long double)(x[j]) * std::complex<long double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

T one_hot(std::size_t index, std::size_t rows) {
  T h({1, rows});
  h[index] = 1.0;
  return h;
}

}  // namespace

TEST_CASE("matmul examples") {
  Tape<double> tape;
  auto a = tape.constant(T::matrix({{1, 2}}));
  auto b = tape.constant(T::matrix({{3}, {4}}));
  CHECK(matmul(a, b).value() == T::matrix({{11}}));

  auto x = tape.constant(T::matrix({{5, 6}, {7, 8}}));
  auto eye = tape.constant(T::identity(2));
  CHECK(matmul(eye, x).value() == x.value());
  CHECK(matmul(x, eye).value() == x.value());

  auto z = tape.constant(T::matrix({{0, 0}}));
  CHECK(matmul(z, b).value() == T::matrix({{0}}));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape<double> tape;
  auto a = tape.constant(T({2, 3}));
  auto b = tape.constant(T({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg == "matmul: incompatible shapes " + shape_to_string({2, 3}) + " and " + shape_to_string({2, 3}));
  }
}

TEST_CASE("silu values") {
  Tape<double> tape;
  auto y = silu(tape.constant(T::vector({0.0, 1.0, -1.0})));
  const double s1 = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(y.value()[0] == 0.0);
  CHECK(y.value()[1] == doctest::Approx(s1).epsilon(1e-12));
  CHECK(y.value()[1] == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(y.value()[2] == doctest::Approx(-0.268941).epsilon(1e-6));
  // Closed-form derivative sigma(x)(1 + x(1 - sigma(x))).
  CHECK(activation_derivative(Activation::silu, 1.0) == doctest::Approx(s1 * (1.0 + (1.0 - s1))));
}

TEST_CASE("hadamard examples") {
  Tape<double> tape;
  auto a = tape.constant(T::vector({1, 2}));
  CHECK(hadamard(a, tape.constant(T::vector({3, 4}))).value() == T::vector({3, 8}));
  Rng rng(3);
  auto x = tape.constant(random_tensor({3, 4}, rng));
  CHECK(hadamard(x, tape.constant(T::ones({3, 4}))).value() == x.value());
  CHECK(hadamard(x, tape.constant(T::zeros({3, 4}))).value() == T::zeros({3, 4}));
  CHECK_THROWS_AS(hadamard(a, tape.constant(T::vector({1, 2, 3}))), DimensionError);
}

TEST_CASE("gather_row reads rows and rejects bad indices") {
  Tape<double> tape;
  auto table = tape.constant(T::matrix({{1, 2}, {3, 4}, {5, 6}}));
  CHECK(gather_row(table, 1).value() == T::matrix({{3, 4}}));
  CHECK(gather_row(table, 0).value() == T::matrix({{1, 2}}));
  try {
    gather_row(table, 3);
    FAIL("expected BoundsError");
  } catch (const BoundsError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('3') != std::string::npos);
  }
}

TEST_CASE("gather_row equals one-hot matmul in value and gradient") {
  Rng rng(11);
  const auto table = random_tensor({5, 4}, rng);
  const auto upstream = random_tensor({1, 4}, rng);
  for (std::size_t i = 0; i < 5; ++i) {
    Tape<double> t1;
    auto tab1 = t1.variable(table);
    auto g = gather_row(tab1, i);
    t1.backward(reshape(matmul(g, t1.constant(upstream.reshaped({4, 1}))), {1}));

    Tape<double> t2;
    auto tab2 = t2.variable(table);
    auto m = matmul(t2.constant(one_hot(i, 5)), tab2);
    t2.backward(reshape(matmul(m, t2.constant(upstream.reshaped({4, 1}))), {1}));

    CHECK(g.value() == m.value());
    CHECK(t1.grad(tab1) == t2.grad(tab2));
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t c = 0; c < 4; ++c)
        if (r != i) CHECK(t1.grad(tab1).at(r, c) == 0.0);
  }
}

TEST_CASE("dropout identities and errors") {
  Rng rng(5);
  Tape<double> tape;
  auto x = tape.constant(random_tensor({4, 6}, rng));
  CHECK(dropout(x, 0.0, rng, true).value() == x.value());
  CHECK(dropout(x, 0.9, rng, false).value() == x.value());
  CHECK_THROWS_AS(dropout(x, 1.0, rng, true), ConfigError);
  CHECK_THROWS_AS(dropout(x, -0.1, rng, true), ConfigError);
}

TEST_CASE("dropout is unbiased over many masks") {
  const T x = T::vector({1.0, -2.0, 0.5, 3.0});
  const std::size_t draws = 100000;
  std::vector<double> sum(x.size(), 0.0);
  Rng rng(2024);
  Tape<double> tape;
  auto xv = tape.constant(x);
  for (std::size_t i = 0; i < draws; ++i) {
    auto y = dropout(xv, 0.5, rng, true);
    for (std::size_t k = 0; k < x.size(); ++k) sum[k] += y.value()[k];
    tape.clear();
    xv = tape.constant(x);
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    // Each draw is 0 or 2x with equal odds, so the per-draw std is |x|.
    const double stderr_ = std::abs(x[k]) / std::sqrt(double(draws));
    CHECK(std::abs(sum[k] / double(draws) - x[k]) <= 3.0 * stderr_);
  }
}

TEST_CASE("dropout masks repeat under the same seed") {
  Rng data(9);
  const auto x = random_tensor({8, 8}, data);
  Tape<double> tape;
  Rng a(77), b(77);
  auto ya = dropout(tape.constant(x), 0.3, a, true);
  auto yb = dropout(tape.constant(x), 0.3, b, true);
  CHECK(ya.value() == yb.value());
}

TEST_CASE("dft examples") {
  const std::vector<double> impulse{1, 0, 0, 0};
  for (const auto& c : dft(impulse)) {
    CHECK(c.real() == doctest::Approx(1.0));
    CHECK(std::abs(c.imag()) < 1e-15);
  }
  const std::vector<double> constant(6, 2.5);
  const auto spec = dft(constant);
  CHECK(spec[0].real() == doctest::Approx(15.0));
  for (std::size_t k = 1; k < spec.size(); ++k) CHECK(std::abs(spec[k]) < 1e-12);
}

TEST_CASE("dft matches direct summation for lengths 1 to 64") {
  Rng rng(17);
  for (std::size_t n = 1; n <= 64; ++n) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform() * 4.0 - 2.0;
    const auto got = dft(x);
    const auto want = reference_dft(x);
    long double scale = 0, err = 0;
    for (std::size_t k = 0; k < n; ++k) {
      scale = std::max(scale, std::abs(want[k]));
      const std::complex<long double> g(got[k].real(), got[k].imag());
      err = std::max(err, std::abs(g - want[k]));
    }
    CHECK(double(err / std::max(scale, 1.0L)) < 1e-9);
  }
}

TEST_CASE("dft satisfies Parseval") {
  Rng rng(4);
  for (std::size_t n : {1u, 7u, 24u, 96u}) {
    std::vector<double> x(n);
    double energy = 0;
    for (auto& v : x) {
      v = rng.normal();
      energy += v * v;
    }
    double spectral = 0;
    for (const auto& c : dft(x)) spectral += std::norm(c);
    CHECK(std::abs(energy - spectral / double(n)) < 1e-6);
  }
}

TEST_CASE("mean_abs examples") {
  Tape<double> tape;
  CHECK(mean_abs(tape.constant(T::vector({1, -1}))).value()[0] == 1.0);
  CHECK(mean_abs(tape.constant(T::zeros({3, 2}))).value()[0] == 0.0);
  CHECK(mean_abs(tape.constant(T::vector({3}))).value()[0] == 3.0);

  auto x = tape.variable(T::vector({2, 0, -1, 0}));
  tape.backward(mean_abs(x));
  CHECK(tape.grad(x) == T::vector({0.25, 0, -0.25, 0}));
}

TEST_CASE("gradients accumulate across uses") {
  Tape<double> tape;
  auto x = tape.variable(T::vector({1.5, -0.5}));
  auto y = add(x, x);
  tape.backward(reshape(matmul(reshape(y, {1, 2}), tape.constant(T::matrix({{1}, {1}}))), {1}));
  CHECK(tape.grad(x) == T::vector({2, 2}));
}

TEST_CASE("parameter leaves accumulate into the parameter gradient") {
  Parameter<double> p("w", T::vector({1, 2}));
  Parameter<double> frozen("f", T::vector({3, 4}));
  frozen.frozen = true;
  for (int pass = 0; pass < 2; ++pass) {
    Tape<double> tape;
    auto s = mean_abs(add(tape.parameter(p), tape.parameter(frozen)));
    tape.backward(s);
  }
  CHECK(p.grad == T::vector({1.0, 1.0}));
  CHECK(frozen.grad == T::zeros({2}));
}

TEST_CASE("backward replays in reverse order") {
  Tape<double> tape;
  auto x = tape.variable(T::vector({1, 2}));
  auto y = silu(x);
  auto z = mean_square(y);
  tape.backward(z);
  const auto& order = tape.replay_order();
  REQUIRE(order.size() >= 2);
  for (std::size_t i = 1; i < order.size(); ++i) CHECK(order[i] < order[i - 1]);
  CHECK(order.front() == z.id());
}

TEST_CASE("finite-difference gradient check of every op") {
  Rng rng(31);
  auto rt = [&](Shape s) { return random_tensor(std::move(s), rng); };
  const double tol = 1e-4;

  SUBCASE("matmul") {
    CHECK(fd_max_rel_error({rt({3, 4}), rt({4, 5})}, [](Tape<double>&, const V& v) { return matmul(v[0], v[1]); }) < tol);
  }
  SUBCASE("add sub hadamard weighted_sum") {
    const std::vector<T> in{rt({3, 4}), rt({3, 4})};
    CHECK(fd_max_rel_error(in, [](Tape<double>&, const V& v) { return add(v[0], v[1]); }) < tol);
    CHECK(fd_max_rel_error(in, [](Tape<double>&, const V& v) { return sub(v[0], v[1]); }) < tol);
    CHECK(fd_max_rel_error(in, [](Tape<double>&, const V& v) { return hadamard(v[0], v[1]); }) < tol);
    CHECK(fd_max_rel_error(in, [](Tape<double>&, const V& v) { return weighted_sum(v[0], 0.3, v[1], -1.7); }) < tol);
  }
  SUBCASE("add_row_bias") {
    CHECK(fd_max_rel_error({rt({3, 4}), rt({4})}, [](Tape<double>&, const V& v) { return add_row_bias(v[0], v[1]); }) <
          tol);
  }
  SUBCASE("activations") {
    for (auto act : {Activation::silu, Activation::tanh, Activation::sigmoid, Activation::gelu}) {
      CAPTURE(to_string(act));
      CHECK(fd_max_rel_error({rt({3, 5})}, [act](Tape<double>&, const V& v) { return activate(v[0], act); }) < tol);
    }
    // Keep relu inputs away from the kink.
    T x = rt({3, 5});
    for (auto& e : x.storage())
      if (std::abs(e) < 0.05) e = 0.5;
    CHECK(fd_max_rel_error({x}, [](Tape<double>&, const V& v) { return activate(v[0], Activation::relu); }) < tol);
  }
  SUBCASE("dropout") {
    CHECK(fd_max_rel_error({rt({4, 6})},
                           [](Tape<double>&, const V& v) {
                             Rng r(123);
                             return dropout(v[0], 0.4, r, true);
                           }) < tol);
  }
  SUBCASE("gather reshape transpose") {
    CHECK(fd_max_rel_error({rt({5, 3})},
                           [](Tape<double>&, const V& v) { return gather_rows(v[0], {4, 1, 1, 0}); }) < tol);
    CHECK(fd_max_rel_error({rt({2, 6})}, [](Tape<double>&, const V& v) { return reshape(v[0], {3, 4}); }) < tol);
    CHECK(fd_max_rel_error({rt({2, 3, 4})}, [](Tape<double>&, const V& v) { return transpose(v[0]); }) < tol);
    CHECK(fd_max_rel_error({rt({3, 4})}, [](Tape<double>&, const V& v) { return transpose(v[0]); }) < tol);
  }
  SUBCASE("normalize and denormalize") {
    CHECK(fd_max_rel_error({rt({2, 6, 3})},
                           [](Tape<double>&, const V& v) { return normalize(v[0], channel_stats(v[0], 1e-5)); }) < tol);
    CHECK(fd_max_rel_error({rt({2, 6, 3}), rt({2, 4, 3})},
                           [](Tape<double>&, const V& v) {
                             return denormalize(v[1], channel_stats(v[0], 1e-5));
                           }) < tol);
  }
  SUBCASE("reductions") {
    CHECK(fd_max_rel_error({rt({3, 4})}, [](Tape<double>&, const V& v) { return mean_abs(v[0]); }) < tol);
    CHECK(fd_max_rel_error({rt({3, 4})}, [](Tape<double>&, const V& v) { return mean_square(v[0]); }) < tol);
    CHECK(fd_max_rel_error({rt({6, 3})}, [](Tape<double>&, const V& v) { return spectral_mean_abs(v[0]); }) < tol);
    CHECK(fd_max_rel_error({rt({2, 5, 3})}, [](Tape<double>&, const V& v) { return spectral_mean_abs(v[0]); }) < tol);
  }
}

TEST_CASE("spectral_mean_abs matches the mean DFT modulus") {
  Rng rng(8);
  const auto x = random_tensor({5, 2}, rng);
  Tape<double> tape;
  const double got = spectral_mean_abs(tape.constant(x)).value()[0];
  double want = 0;
  for (std::size_t n = 0; n < 2; ++n) {
    std::vector<double> series(5);
    for (std::size_t t = 0; t < 5; ++t) series[t] = x.at(t, n);
    for (const auto& c : reference_dft(series)) want += double(std::abs(c));
  }
  CHECK(got == doctest::Approx(want / 10.0).epsilon(1e-12));
}

TEST_CASE("tensor construction validates shapes") {
  CHECK_THROWS_AS(T(Shape{}), DimensionError);
  CHECK_THROWS_AS(T({2, 0}), DimensionError);
  CHECK_THROWS_AS(T({1, 1, 1, 1}), DimensionError);
  CHECK_THROWS_AS(T({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(T({2, 3}).reshaped({4, 2}), DimensionError);
  T bad = T::vector({1, std::nan("")});
  CHECK_FALSE(bad.all_finite());
  CHECK_THROWS_AS(bad.check_finite("probe"), NumericError);
}
