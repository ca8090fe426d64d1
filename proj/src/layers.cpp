#include "lmf/layers.hpp"

namespace lmf {

DepthwiseConv::DepthwiseConv(int channels, int kernel, int dilation, Rng& rng) {
    geom = ConvGeometry::same(kernel, dilation);
    Tensor w(channels, 1, kernel, kernel);
    init_uniform_fan_in(w, kernel * kernel, rng);
    weight = ParamTensor(std::move(w), ParamRole::DepthwiseWeight);
}

Tensor DepthwiseConv::forward(const Tensor& x, DwCache& cache) const {
    cache.input = x;
    return depthwise_forward(x, weight, geom);
}

Tensor DepthwiseConv::backward(const Tensor& gy, const DwCache& cache,
                               ParamTensor& grad_sink) const {
    depthwise_backward_weight(cache.input, gy, geom, grad_sink);
    return depthwise_backward_input(gy, weight, geom, cache.input.h, cache.input.w);
}

Tensor DepthwiseConv::backward(const Tensor& gy, const DwCache& cache) {
    return backward(gy, cache, weight);
}

PointwiseConv::PointwiseConv(int c_in, int c_out, bool with_bias, Rng& rng) {
    Tensor w(c_out, c_in, 1, 1);
    init_uniform_fan_in(w, c_in, rng);
    weight = ParamTensor(std::move(w), ParamRole::PointwiseWeight);
    has_bias = with_bias;
    if (with_bias) {
        Tensor b(1, c_out, 1, 1);
        bias = ParamTensor(std::move(b), ParamRole::FcBias);
    }
}

Tensor PointwiseConv::forward(const Tensor& x, PwCache& cache) const {
    cache.input = x;
    return pointwise_forward(x, weight, has_bias ? &bias : nullptr);
}

Tensor PointwiseConv::backward(const Tensor& gy, const PwCache& cache) {
    pointwise_backward_weight(cache.input, gy, weight, has_bias ? &bias : nullptr);
    return pointwise_backward_input(gy, weight);
}

BatchNorm::BatchNorm(int channels) {
    gamma = ParamTensor(Tensor(1, channels, 1, 1, 1.0), ParamRole::BnGamma);
    beta = ParamTensor(Tensor(1, channels, 1, 1, 0.0), ParamRole::BnBeta);
    state.running_mean.assign(channels, 0.0);
    state.running_var.assign(channels, 1.0);
}

Tensor BatchNorm::forward(const Tensor& x, bool train, BnCache& cache) {
    return batchnorm_forward(x, gamma, beta, state, train, cache);
}

Tensor BatchNorm::backward(const Tensor& gy, const BnCache& cache, bool train) {
    return batchnorm_backward(gy, gamma, cache, gamma, beta, train, state);
}

FcLayer::FcLayer(int in, int out, Rng& rng) {
    Tensor w(out, in, 1, 1);
    init_uniform_fan_in(w, in, rng);
    weight = ParamTensor(std::move(w), ParamRole::FcWeight);
    bias = ParamTensor(Tensor(1, out, 1, 1), ParamRole::FcBias);
}

Tensor FcLayer::forward(const Tensor& x, Tensor& cache_input) const {
    cache_input = x;
    return fc_forward(x, weight, bias);
}

Tensor FcLayer::backward(const Tensor& gy, const Tensor& cached_input) {
    return fc_backward(gy, cached_input, weight, weight, bias);
}

}  // namespace lmf
