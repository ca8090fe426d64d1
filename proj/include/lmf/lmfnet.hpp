#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lmf/lmf_layer.hpp"

namespace lmf {

enum class HeadKind : std::uint8_t { Saliency, Classifier };

struct NetworkConfig {
    int input_h = 256, input_w = 256;
    HeadKind head = HeadKind::Saliency;
    int num_classes = 10;
    int hidden_width = 128;

    std::vector<LMFConfig> encoder;   // 5 stages; stage 1 resample=none, 2-5 pool
    LMFConfig fusion_i_pool, fusion_i_up;  // mid-level path (from F_3)
    LMFConfig fusion_l_pool, fusion_l_up;  // low-level path (from F_2)
    std::vector<LMFConfig> decoder;   // 4 stages, all upsample
};

// Resolution bookkeeping for every stage plus concat-compatibility flags.
struct SpatialSchedule {
    std::vector<std::pair<int, int>> encoder;      // output resolution per stage
    std::pair<int, int> fusion_i{0, 0}, fusion_l{0, 0};
    std::vector<std::pair<int, int>> decoder;
    std::vector<std::string> flags;                // empty means compatible
    bool ok() const { return flags.empty(); }
};

SpatialSchedule spatial_schedule(const NetworkConfig& cfg);

// Fills the m / c_in chain implied by the wiring and validates branch counts.
// Returns soft warnings (missing rate-1 branches etc).
std::vector<std::string> finalize_config(NetworkConfig& cfg);

NetworkConfig default_sod_config();
NetworkConfig default_sod_config_scaled(double width_scale);  // ablation width variants
NetworkConfig tiny_sod_config(int resolution = 64);            // desk-scale fixture
NetworkConfig default_classifier_config(int num_classes = 10);
NetworkConfig wide_classifier_config(int num_classes = 10);
NetworkConfig tiny_classifier_config(int num_classes = 10);

struct NetCache {
    std::vector<LmfCache> encoder;
    std::vector<std::vector<Tensor>> enc_out;  // F_1..F_5 (per-branch maps)
    LmfCache fi_pool, fi_up, fl_pool, fl_up;
    std::vector<Tensor> fi_out, fl_out;
    std::vector<LmfCache> decoder;
    std::vector<std::vector<Tensor>> dec_out;
    PwCache head_pw;
    Tensor head_sigmoid;  // saliency output, cached for backward
    // classifier path
    std::vector<Tensor> gap_in;  // per-map F_5 (for GAP backward shapes)
    Tensor fc1_in, fc1_relu, fc2_in;
};

class LmfNet {
  public:
    LmfNet() = default;
    LmfNet(const NetworkConfig& cfg, std::uint64_t seed);

    const NetworkConfig& config() const { return cfg_; }

    Tensor forward(const Tensor& images, bool train, NetCache& cache);
    // grad: dLoss/dOutput (saliency map or logits). Accumulates parameter
    // gradients; returns nothing (image gradients are discarded).
    void backward(const Tensor& grad_output, NetCache& cache, bool train);

    Tensor forward_eval(const Tensor& images);

    std::vector<std::pair<std::string, ParamTensor*>> named_params();
    std::vector<ParamTensor*> params();
    std::vector<std::pair<std::string, BatchNorm*>> named_norms();
    long long param_count();  // enumerated storage

    void zero_grad();

    std::vector<LMFLayer> encoder;
    LMFLayer fi_pool, fi_up, fl_pool, fl_up;
    std::vector<LMFLayer> decoder;
    PointwiseConv head_conv;
    FcLayer fc_hidden, fc_out;

  private:
    NetworkConfig cfg_;
    Tensor forward_sod(const Tensor& images, bool train, NetCache& cache);
    Tensor forward_cls(const Tensor& images, bool train, NetCache& cache);
    void backward_sod(const Tensor& grad, NetCache& cache, bool train);
    void backward_cls(const Tensor& grad, NetCache& cache, bool train);
};

// Throws ConfigError on schedule problems, naming the first bad junction.
LmfNet build_network(const NetworkConfig& cfg, std::uint64_t seed = 0);

}  // namespace lmf
