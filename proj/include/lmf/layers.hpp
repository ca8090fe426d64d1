#pragma once

#include <vector>

#include "lmf/kernels.hpp"
#include "lmf/rng.hpp"
#include "lmf/tensor.hpp"

// Thin parameter-holding modules over the kernel set. Forward passes write
// into caller-owned caches so one module can be applied several times per
// step (the LMF layer applies each branch kernel to all of its input maps).

namespace lmf {

struct DwCache {
    Tensor input;
};

struct DepthwiseConv {
    ParamTensor weight;  // (c, 1, k, k)
    ConvGeometry geom;

    DepthwiseConv() = default;
    DepthwiseConv(int channels, int kernel, int dilation, Rng& rng);

    Tensor forward(const Tensor& x, DwCache& cache) const;
    Tensor backward(const Tensor& gy, const DwCache& cache, ParamTensor& grad_sink) const;
    Tensor backward(const Tensor& gy, const DwCache& cache);
};

struct PwCache {
    Tensor input;
};

struct PointwiseConv {
    ParamTensor weight;  // (c_out, c_in, 1, 1)
    ParamTensor bias;    // (1, c_out, 1, 1); empty when disabled
    bool has_bias = false;

    PointwiseConv() = default;
    PointwiseConv(int c_in, int c_out, bool with_bias, Rng& rng);

    Tensor forward(const Tensor& x, PwCache& cache) const;
    Tensor backward(const Tensor& gy, const PwCache& cache);
};

struct BatchNorm {
    ParamTensor gamma, beta;
    BnState state;

    BatchNorm() = default;
    explicit BatchNorm(int channels);

    Tensor forward(const Tensor& x, bool train, BnCache& cache);
    Tensor backward(const Tensor& gy, const BnCache& cache, bool train);
};

struct FcLayer {
    ParamTensor weight;  // (out, in, 1, 1)
    ParamTensor bias;    // (1, out, 1, 1)

    FcLayer() = default;
    FcLayer(int in, int out, Rng& rng);

    Tensor forward(const Tensor& x, Tensor& cache_input) const;
    Tensor backward(const Tensor& gy, const Tensor& cached_input);
};

}  // namespace lmf
