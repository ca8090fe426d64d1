#pragma once

#include "lmf/tensor.hpp"

// Naive serial kernels. These are the ground-truth oracles for the parallel
// implementations in lmf/kernels.hpp and the baseline for the benchmark
// target. No caching, no blocking, no OpenMP.

namespace lmf::ref {

Tensor depthwise_forward(const Tensor& x, const Tensor& w, int kernel, int dilation,
                         int stride, int pad);
Tensor pointwise_forward(const Tensor& x, const Tensor& w, const Tensor* bias);
Tensor maxpool2_forward(const Tensor& x);
Tensor upsample2_forward(const Tensor& x);

}  // namespace lmf::ref
