#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmf/lmfnet.hpp"

// Static analyzers: receptive field, gridding rule, parameter count, FLOPs.
// Pure functions over configs; nothing here touches tensor data.

namespace lmf {

enum class LayerKind : std::uint8_t { Conv, Pool };

struct LayerRecord {
    LayerKind kind = LayerKind::Conv;
    int kernel = 3;
    int dilation = 1;
    int stride = 1;

    static LayerRecord conv(int k, int d, int s = 1) { return {LayerKind::Conv, k, d, s}; }
    static LayerRecord pool() { return {LayerKind::Pool, 2, 1, 2}; }
};

using LayerStackSpec = std::vector<LayerRecord>;

struct RfReport {
    // variant_a: the recurrence RF_i = k_i + (RF_{i-1} - 1) * d_i.
    // variant_b: RF_i = RF_{i-1} + (k_i - 1) * d_i * prod(previous strides);
    // matches the gradient-support probe and is the default for validation.
    std::vector<long long> variant_a;
    std::vector<long long> variant_b;
};
RfReport receptive_field(const LayerStackSpec& stack);

struct GriddingPair {
    int first_layer = 0;   // index into the conv-only sequence
    int kernel_first = 0;
    int dilation_first = 0;
    int dilation_second = 0;
    double ratio = 0.0;
    bool pass = false;
    std::vector<int> gaps;  // uncovered positions of the two-layer composed support
};

struct GriddingReport {
    std::vector<GriddingPair> pairs;
    std::vector<int> stack_gaps;  // uncovered positions of the full composed support
    bool all_pass = true;
};
GriddingReport gridding_check(const LayerStackSpec& stack);

// 1-D composed sampling support: every input offset reachable from one output
// tap. Ground truth for the gridding verdicts.
std::vector<std::uint8_t> coverage_map(const std::vector<std::pair<int, int>>& kernel_dilation);

// Parameter-count formulas.
long long standard_conv_params(int kernel, int c_in, int c_out);
long long separable_conv_params(int kernel, int c_in, int c_out);
long long fc_params(int in, int out);

// Analytic count over a network config; must equal enumerated storage.
long long analytic_param_count(const NetworkConfig& cfg);

struct FlopReport {
    long long macs = 0;        // convolution + fully connected multiply-accumulates
    long long elementwise = 0; // BN / activation / pooling / interpolation ops
    long long flops() const { return 2 * macs + elementwise; }
};
// Per-output-element costs: BN 2, ReLU 1, sigmoid 4, maxpool 3, bilinear 4,
// global average pool 1 per input element.
FlopReport flops_count(const NetworkConfig& cfg, int batch = 1);

// Conv stacks of the deepest dilation path through a network config,
// with pool records interleaved; feeds the RF and gridding analyzers.
LayerStackSpec deepest_path_stack(const NetworkConfig& cfg);

struct AnalysisReport {
    RfReport rf;
    GriddingReport gridding;
    long long params = 0;
    FlopReport flops;
    std::vector<std::string> schedule_flags;
};
AnalysisReport analyze_network(const NetworkConfig& cfg);

}  // namespace lmf
