#include "pamnet/dft.hpp"

#include <cmath>
#include <numbers>

#include "pamnet/errors.hpp"

namespace pamnet {

DftTable::DftTable(std::size_t n) : n_(n), cos_(n), sin_(n) {
  if (n == 0) throw DomainError("dft length must be at least 1");
  for (std::size_t m = 0; m < n; ++m) {
    const double angle = 2.0 * std::numbers::pi * double(m) / double(n);
    cos_[m] = std::cos(angle);
    sin_[m] = std::sin(angle);
  }
}

std::vector<std::complex<double>> dft(std::span<const double> x) {
  const DftTable table(x.size());
  std::vector<std::complex<double>> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      re += x[j] * table.cos_at(j, k);
      im -= x[j] * table.sin_at(j, k);
    }
    out[k] = {re, im};
  }
  return out;
}

}  // namespace pamnet
