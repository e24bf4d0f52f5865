#pragma once

#include "ntm/tensor.hpp"

// Dense compute kernels. Each kernel has a serial reference and an OpenMP
// version. The parallel versions split work by output rows only, so every
// output element is computed by the same instruction sequence in both and
// results are bit-identical regardless of thread count.
namespace ntm::kernels {

namespace serial {
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& logits);
}  // namespace serial

namespace parallel {
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& logits);
}  // namespace parallel

// Library entry points; dispatch to the parallel kernels for large inputs.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& logits);

int max_threads();

}  // namespace ntm::kernels
