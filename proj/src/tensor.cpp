#include "ntm/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ntm/error.hpp"

namespace ntm {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimensionError("tensor of shape [" + std::to_string(rows) + "x" +
                         std::to_string(cols) + "] given " +
                         std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(n_rows * n_cols);
  for (const auto& r : rows) {
    if (r.size() != n_cols) throw DimensionError("ragged initializer for tensor");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor(n_rows, n_cols, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::string Tensor::shape_string() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) {
    throw DimensionError("item() requires a [1x1] tensor, got " + shape_string());
  }
  return values_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor Tensor::transposed() const {
  Tensor out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

double max_abs_difference(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("cannot compare " + a.shape_string() + " with " + b.shape_string());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace ntm
