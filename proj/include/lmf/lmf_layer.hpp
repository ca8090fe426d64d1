#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmf/layers.hpp"

namespace lmf {

enum class Resample : std::uint8_t { None, Pool, Upsample };

// One multi-scale feature layer: n depthwise dilated branches, each applied
// to all m input maps, channel-concatenated and fused per branch by a 1x1
// convolution. Optional pooling or upsampling runs after fusion.
struct LMFConfig {
    std::vector<int> dilations;  // one entry per branch
    int input_maps = 1;          // m
    int c_in = 1;                // channels per input map
    int c_out = 1;               // channels per output map
    int kernel = 3;
    Resample resample = Resample::None;

    int branches() const { return static_cast<int>(dilations.size()); }
};

// Selects the first n entries of the base dilation vector.
std::vector<int> truncate_dilation_vector(const std::vector<int>& base, int n);

// Hard config errors throw; soft issues (e.g. no rate-1 branch) come back as
// warnings so ablation configs can still run.
std::vector<std::string> validate_lmf_config(const LMFConfig& cfg, bool first_encoder_layer);

// Trainable parameter count; BN contributes 2*c_in per branch after the
// depthwise stage and 2*c_out per branch after fusion.
long long lmf_param_count(const LMFConfig& cfg, bool include_bn = true);

struct LmfBranchCache {
    std::vector<DwCache> dw;  // one per input map
    BnCache bn_dw;
    std::vector<Tensor> relu_dw;  // post-activation, stacked layout
    PwCache pw;
    BnCache bn_pw;
    Tensor relu_pw;
    PoolCache pool;
    int pre_resample_h = 0, pre_resample_w = 0;
};

struct LmfCache {
    std::vector<LmfBranchCache> branch;
};

class LMFLayer {
  public:
    LMFLayer() = default;
    LMFLayer(const LMFConfig& cfg, Rng& rng);

    const LMFConfig& config() const { return cfg_; }

    // inputs: exactly m tensors of identical shape (n, c_in, h, w).
    std::vector<Tensor> forward(const std::vector<Tensor>& inputs, bool train, LmfCache& cache);
    // grad_outputs: one per branch; returns one input gradient per map.
    std::vector<Tensor> backward(const std::vector<Tensor>& grad_outputs, const LmfCache& cache,
                                 bool train);

    std::vector<ParamTensor*> params();
    std::vector<BatchNorm*> norms();
    long long param_count() const { return lmf_param_count(cfg_); }

    std::vector<DepthwiseConv> branch_conv;
    std::vector<BatchNorm> branch_norm;
    std::vector<PointwiseConv> fusion_conv;
    std::vector<BatchNorm> fusion_norm;

  private:
    LMFConfig cfg_;
};

}  // namespace lmf
