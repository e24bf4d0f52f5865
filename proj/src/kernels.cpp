#include "ntm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "ntm/error.hpp"

namespace ntm::kernels {
namespace {

constexpr std::size_t kParallelWorkThreshold = 1u << 15;

void check_matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ for " + a.shape_string() +
                         " and " + b.shape_string());
  }
}

// out.row(i) = a.row(i) * b, accumulated over k in increasing order. Zero
// entries of a are skipped; bag-of-words inputs are mostly zeros.
inline void matmul_row(const Tensor& a, const Tensor& b, Tensor& out, std::size_t i) {
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  double* out_row = out.data() + i * n;
  const double* a_row = a.data() + i * inner;
  for (std::size_t k = 0; k < inner; ++k) {
    const double aik = a_row[k];
    if (aik == 0.0) continue;
    const double* b_row = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
  }
}

inline void softmax_row(const Tensor& logits, Tensor& out, std::size_t i) {
  const auto in = logits.row(i);
  auto dst = out.row(i);
  const double peak = *std::max_element(in.begin(), in.end());
  double total = 0.0;
  for (std::size_t j = 0; j < in.size(); ++j) {
    dst[j] = std::exp(in[j] - peak);
    total += dst[j];
  }
  const double inv = 1.0 / total;
  for (double& v : dst) v *= inv;
}

}  // namespace

namespace serial {

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_matmul(a, b);
  Tensor out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, out, i);
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out(logits.rows(), logits.cols());
  if (logits.cols() == 0) return out;
  for (std::size_t i = 0; i < logits.rows(); ++i) softmax_row(logits, out, i);
  return out;
}

}  // namespace serial

namespace parallel {

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_matmul(a, b);
  Tensor out(a.rows(), b.cols());
  const auto rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) matmul_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out(logits.rows(), logits.cols());
  if (logits.cols() == 0) return out;
  const auto rows = static_cast<std::int64_t>(logits.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) softmax_row(logits, out, static_cast<std::size_t>(i));
  return out;
}

}  // namespace parallel

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (max_threads() > 1 && a.rows() > 1 && a.size() * b.cols() >= kParallelWorkThreshold) {
    return parallel::matmul(a, b);
  }
  return serial::matmul(a, b);
}

Tensor softmax_rows(const Tensor& logits) {
  if (max_threads() > 1 && logits.size() >= kParallelWorkThreshold) {
    return parallel::softmax_rows(logits);
  }
  return serial::softmax_rows(logits);
}

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ntm::kernels
