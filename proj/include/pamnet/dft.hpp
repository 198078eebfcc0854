#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace pamnet {

/// Twiddle factors for length-`n` transforms, reduced modulo n so that
/// e^{-2 pi i jk/n} is read from one table without large-angle error.
class DftTable {
 public:
  explicit DftTable(std::size_t n);

  std::size_t length() const noexcept { return n_; }
  double cos_at(std::size_t j, std::size_t k) const { return cos_[(j * k) % n_]; }
  double sin_at(std::size_t j, std::size_t k) const { return sin_[(j * k) % n_]; }

 private:
  std::size_t n_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// X[k] = sum_j x[j] e^{-2 pi i jk/n}, by direct summation.
std::vector<std::complex<double>> dft(std::span<const double> x);

}  // namespace pamnet
