#include "lmf/analysis.hpp"

#include <algorithm>

namespace lmf {

RfReport receptive_field(const LayerStackSpec& stack) {
    if (stack.empty()) throw ConfigError("receptive_field: empty stack");
    RfReport r;
    long long rf_a = 1, rf_b = 1, jump = 1;
    for (const LayerRecord& l : stack) {
        const int k = l.kind == LayerKind::Pool ? 2 : l.kernel;
        const int d = l.kind == LayerKind::Pool ? 1 : l.dilation;
        rf_a = k + (rf_a - 1) * d;
        rf_b = rf_b + static_cast<long long>(k - 1) * d * jump;
        jump *= l.stride;
        r.variant_a.push_back(rf_a);
        r.variant_b.push_back(rf_b);
    }
    return r;
}

std::vector<std::uint8_t> coverage_map(const std::vector<std::pair<int, int>>& kernel_dilation) {
    // Offsets reachable by composing the 1-D kernels: sums of i_l * d_l.
    std::vector<long long> offsets = {0};
    for (auto [k, d] : kernel_dilation) {
        std::vector<long long> next;
        next.reserve(offsets.size() * k);
        for (long long base : offsets)
            for (int i = 0; i < k; ++i) next.push_back(base + static_cast<long long>(i) * d);
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        offsets = std::move(next);
    }
    const long long extent = offsets.back() + 1;
    std::vector<std::uint8_t> cov(static_cast<std::size_t>(extent), 0);
    for (long long o : offsets) cov[static_cast<std::size_t>(o)] = 1;
    return cov;
}

static std::vector<int> gaps_of(const std::vector<std::uint8_t>& cov) {
    std::vector<int> gaps;
    for (std::size_t i = 0; i < cov.size(); ++i)
        if (!cov[i]) gaps.push_back(static_cast<int>(i));
    return gaps;
}

GriddingReport gridding_check(const LayerStackSpec& stack) {
    GriddingReport rep;
    std::vector<std::pair<int, int>> convs;
    for (const LayerRecord& l : stack)
        if (l.kind == LayerKind::Conv) convs.emplace_back(l.kernel, l.dilation);
    for (std::size_t i = 0; i + 1 < convs.size(); ++i) {
        GriddingPair p;
        p.first_layer = static_cast<int>(i);
        p.kernel_first = convs[i].first;
        p.dilation_first = convs[i].second;
        p.dilation_second = convs[i + 1].second;
        p.ratio = static_cast<double>(p.dilation_second) / p.dilation_first;
        p.pass = p.ratio < static_cast<double>(p.kernel_first);
        p.gaps = gaps_of(coverage_map({convs[i], convs[i + 1]}));
        rep.all_pass = rep.all_pass && p.pass;
        rep.pairs.push_back(std::move(p));
    }
    if (!convs.empty()) rep.stack_gaps = gaps_of(coverage_map(convs));
    return rep;
}

long long standard_conv_params(int kernel, int c_in, int c_out) {
    return static_cast<long long>(kernel) * kernel * c_in * c_out;
}

long long separable_conv_params(int kernel, int c_in, int c_out) {
    return static_cast<long long>(kernel) * kernel * c_in +
           static_cast<long long>(c_in) * c_out;
}

long long fc_params(int in, int out) {
    return static_cast<long long>(in) * out + out;
}

long long analytic_param_count(const NetworkConfig& cfg) {
    long long total = 0;
    for (const LMFConfig& c : cfg.encoder) total += lmf_param_count(c);
    if (cfg.head == HeadKind::Saliency) {
        total += lmf_param_count(cfg.fusion_i_pool) + lmf_param_count(cfg.fusion_i_up);
        total += lmf_param_count(cfg.fusion_l_pool) + lmf_param_count(cfg.fusion_l_up);
        for (const LMFConfig& c : cfg.decoder) total += lmf_param_count(c);
        const int head_in = cfg.decoder.back().branches() * cfg.decoder.back().c_out;
        total += fc_params(head_in, 1);  // 1x1 conv with bias
    } else {
        const int feat = cfg.encoder.back().branches() * cfg.encoder.back().c_out;
        total += fc_params(feat, cfg.hidden_width);
        total += fc_params(cfg.hidden_width, cfg.num_classes);
    }
    return total;
}

namespace {

struct FlopAccum {
    FlopReport rep;
    long long batch = 1;

    void lmf_layer(const LMFConfig& c, long long h, long long w) {
        const long long n = c.branches(), m = c.input_maps;
        const long long hw = h * w;
        rep.macs += batch * n * m * hw * c.c_in * c.kernel * c.kernel;       // depthwise
        rep.macs += batch * n * hw * c.c_out * (m * c.c_in);                 // fusion 1x1
        rep.elementwise += batch * n * m * c.c_in * hw * 3;                  // BN(2)+ReLU(1)
        rep.elementwise += batch * n * c.c_out * hw * 3;
        if (c.resample == Resample::Pool)
            rep.elementwise += batch * n * c.c_out * (hw / 4) * 3;
        else if (c.resample == Resample::Upsample)
            rep.elementwise += batch * n * c.c_out * hw * 4 * 4;
    }
};

}  // namespace

FlopReport flops_count(const NetworkConfig& cfg, int batch) {
    FlopAccum acc;
    acc.batch = batch;
    long long h = cfg.input_h, w = cfg.input_w;
    std::vector<std::pair<long long, long long>> enc_res;
    for (const LMFConfig& c : cfg.encoder) {
        acc.lmf_layer(c, h, w);
        if (c.resample == Resample::Pool) {
            h /= 2;
            w /= 2;
        }
        enc_res.emplace_back(h, w);
    }
    if (cfg.head == HeadKind::Saliency) {
        acc.lmf_layer(cfg.fusion_i_pool, enc_res[2].first, enc_res[2].second);
        acc.lmf_layer(cfg.fusion_i_up, enc_res[2].first / 2, enc_res[2].second / 2);
        acc.lmf_layer(cfg.fusion_l_pool, enc_res[1].first, enc_res[1].second);
        acc.lmf_layer(cfg.fusion_l_up, enc_res[1].first / 2, enc_res[1].second / 2);
        h = enc_res[4].first;
        w = enc_res[4].second;
        for (const LMFConfig& c : cfg.decoder) {
            acc.lmf_layer(c, h, w);
            h *= 2;
            w *= 2;
        }
        const long long head_in = cfg.decoder.back().branches() * cfg.decoder.back().c_out;
        acc.rep.macs += batch * h * w * head_in;
        acc.rep.elementwise += batch * h * w * 4;  // sigmoid
    } else {
        const long long feat =
            static_cast<long long>(cfg.encoder.back().branches()) * cfg.encoder.back().c_out;
        acc.rep.elementwise += batch * feat * h * w;  // global average pool
        acc.rep.macs += batch * (feat * cfg.hidden_width +
                                 static_cast<long long>(cfg.hidden_width) * cfg.num_classes);
        acc.rep.elementwise += batch * cfg.hidden_width;  // hidden ReLU
    }
    return acc.rep;
}

LayerStackSpec deepest_path_stack(const NetworkConfig& cfg) {
    // Stage i contributes its i-th dilation entry (clamped to the branch
    // count), so the default encoder yields the full [1, 4, 12, 36, 108]
    // ladder with the pools interleaved.
    LayerStackSpec stack;
    int stage = 0;
    for (const LMFConfig& c : cfg.encoder) {
        const int pick = std::min(stage, c.branches() - 1);
        stack.push_back(LayerRecord::conv(c.kernel, c.dilations[pick]));
        if (c.resample == Resample::Pool) stack.push_back(LayerRecord::pool());
        ++stage;
    }
    return stack;
}

namespace {

// Network-level gridding gate: every layer's dilation ladder is checked
// against the entry-stage kernel. The first layer performs the coarsest
// sampling of the dense input, so its kernel bounds the admissible rate
// growth anywhere downstream: [1, 4, 12, 36, 108] passes under the 5x5
// entry kernel, while replacing the 4 with a 6 fails.
void merge_ladder(GriddingReport& rep, const LMFConfig& layer, int entry_kernel) {
    if (layer.branches() < 2) return;
    LayerStackSpec ladder;
    for (int d : layer.dilations) ladder.push_back(LayerRecord::conv(entry_kernel, d));
    GriddingReport part = gridding_check(ladder);
    const int offset = rep.pairs.empty() ? 0 : rep.pairs.back().first_layer + 1;
    for (GriddingPair& p : part.pairs) {
        p.first_layer += offset;
        rep.all_pass = rep.all_pass && p.pass;
        rep.pairs.push_back(std::move(p));
    }
}

}  // namespace

AnalysisReport analyze_network(const NetworkConfig& cfg) {
    AnalysisReport rep;
    const LayerStackSpec stack = deepest_path_stack(cfg);
    rep.rf = receptive_field(stack);
    rep.gridding.stack_gaps = gridding_check(stack).stack_gaps;
    const int entry_kernel = cfg.encoder.at(0).kernel;
    for (const LMFConfig& c : cfg.encoder) merge_ladder(rep.gridding, c, entry_kernel);
    if (cfg.head == HeadKind::Saliency) {
        merge_ladder(rep.gridding, cfg.fusion_i_pool, entry_kernel);
        merge_ladder(rep.gridding, cfg.fusion_i_up, entry_kernel);
        merge_ladder(rep.gridding, cfg.fusion_l_pool, entry_kernel);
        merge_ladder(rep.gridding, cfg.fusion_l_up, entry_kernel);
        for (const LMFConfig& c : cfg.decoder) merge_ladder(rep.gridding, c, entry_kernel);
    }
    rep.params = analytic_param_count(cfg);
    rep.flops = flops_count(cfg);
    rep.schedule_flags = spatial_schedule(cfg).flags;
    return rep;
}

}  // namespace lmf
