#pragma once

#include <cmath>
#include <random>

#include "ntm/tensor.hpp"

namespace ntm::testing {

inline Tensor triple_loop_matmul(const Tensor& a, const Tensor& b) {
  Tensor c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& gen, double lo = -2.0,
                            double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(rows, cols);
  for (double& x : t.values()) x = dist(gen);
  return t;
}

}  // namespace ntm::testing
