#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "pamnet/ops.hpp"
#include "pamnet/rng.hpp"
#include "pamnet/tape.hpp"
#include "pamnet/tensor.hpp"

namespace pamnet::testing {

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.storage()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

// Collapses any output to a scalar through fixed random weights so a single
// backward pass checks the full vector-Jacobian product.
inline Var<double> weighted_scalar(Var<double> y, const std::vector<double>& weights) {
  const std::size_t n = y.value().size();
  Tensor<double> w({n, 1}, std::vector<double>(weights.begin(), weights.begin() + n));
  auto row = reshape(y, {1, n});
  return reshape(matmul(row, y.tape().constant(std::move(w))), {1});
}

using GraphBuilder = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

// Max relative error between tape gradients and central differences over
// every entry of every input.
inline double fd_max_rel_error(const std::vector<Tensor<double>>& inputs, const GraphBuilder& build,
                               std::uint64_t seed = 7, double step = 1e-5) {
  Rng wrng(seed);
  std::vector<double> weights(4096);
  for (auto& w : weights) w = wrng.uniform() * 2.0 - 1.0;

  auto eval = [&](const std::vector<Tensor<double>>& xs) {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const auto& x : xs) vars.push_back(tape.constant(x));
    return weighted_scalar(build(tape, vars), weights).value()[0];
  };

  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (const auto& x : inputs) vars.push_back(tape.variable(x));
  tape.backward(weighted_scalar(build(tape, vars), weights));

  double worst = 0.0;
  auto probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto analytic = tape.grad(vars[i]);
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double orig = probe[i][k];
      probe[i][k] = orig + step;
      const double up = eval(probe);
      probe[i][k] = orig - step;
      const double down = eval(probe);
      probe[i][k] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pamnet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace pamnet::testing
