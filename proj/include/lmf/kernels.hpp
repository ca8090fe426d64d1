#pragma once

#include <utility>
#include <vector>

#include "lmf/tensor.hpp"

// Differentiable kernel set. Forward and backward passes are hand written;
// the OpenMP loops parallelize over independent output elements only, so
// results do not depend on the worker count. Serial counterparts used as
// test oracles live in lmf/reference.hpp.

namespace lmf {

void set_max_threads(int count);  // 0 = library default
int max_threads();

// Depthwise dilated cross-correlation with zero padding.
// x: (n, c, h, w); w: (c, 1, k, k).
Tensor depthwise_forward(const Tensor& x, const ParamTensor& w, const ConvGeometry& g);
Tensor depthwise_backward_input(const Tensor& gy, const ParamTensor& w, const ConvGeometry& g,
                                int in_h, int in_w);
void depthwise_backward_weight(const Tensor& x, const Tensor& gy, const ConvGeometry& g,
                               ParamTensor& w);

// 1x1 convolution. w: (c_out, c_in, 1, 1); bias: (1, c_out, 1, 1) or null.
Tensor pointwise_forward(const Tensor& x, const ParamTensor& w, const ParamTensor* bias = nullptr);
Tensor pointwise_backward_input(const Tensor& gy, const ParamTensor& w);
void pointwise_backward_weight(const Tensor& x, const Tensor& gy, ParamTensor& w,
                               ParamTensor* bias = nullptr);

// 2x2 max pooling, stride 2; first-encountered index wins ties.
struct PoolCache {
    std::vector<std::uint32_t> argmax;  // flat input index per output element
};
Tensor maxpool2_forward(const Tensor& x, PoolCache& cache);
Tensor maxpool2_backward(const Tensor& gy, const PoolCache& cache, int in_h, int in_w);

// 2x bilinear upsampling, align-corners=false.
Tensor upsample2_forward(const Tensor& x);
Tensor upsample2_backward(const Tensor& gy, int in_h, int in_w);

// Batch normalization over (n, h, w) per channel.
struct BnState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;
};
struct BnCache {
    std::vector<double> mean, inv_std;
    Tensor xhat;
};
Tensor batchnorm_forward(const Tensor& x, const ParamTensor& gamma, const ParamTensor& beta,
                         BnState& state, bool train, BnCache& cache);
Tensor batchnorm_backward(const Tensor& gy, const ParamTensor& gamma, const BnCache& cache,
                          ParamTensor& ggamma, ParamTensor& gbeta, bool train,
                          const BnState& state);

enum class Activation { Relu, Sigmoid };
Tensor activation_forward(const Tensor& x, Activation kind);
// Takes the forward *output* (both derivatives are expressible through it).
Tensor activation_backward(const Tensor& gy, const Tensor& y, Activation kind);

// Channel concatenation and its inverse split.
Tensor concat_channels(const std::vector<const Tensor*>& xs);
Tensor concat_channels(const std::vector<Tensor>& xs);
std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int>& channel_counts);

// Fully connected layer over flattened (c*h*w) features.
// w: (out, in, 1, 1); bias: (1, out, 1, 1). Output shape (n, out, 1, 1).
Tensor fc_forward(const Tensor& x, const ParamTensor& w, const ParamTensor& bias);
Tensor fc_backward(const Tensor& gy, const Tensor& x, const ParamTensor& w,
                   ParamTensor& gw, ParamTensor& gbias);

// Global average pool over (h, w).
Tensor gap_forward(const Tensor& x);
Tensor gap_backward(const Tensor& gy, int in_h, int in_w);

bool all_finite(const Tensor& x);

}  // namespace lmf
