#include "lmf/lmf_layer.hpp"

#include <algorithm>

namespace lmf {

std::vector<int> truncate_dilation_vector(const std::vector<int>& base, int n) {
    if (n < 1 || n > static_cast<int>(base.size()))
        throw ConfigError("truncate_dilation_vector: n=" + std::to_string(n) +
                          " out of range for base of length " + std::to_string(base.size()));
    return std::vector<int>(base.begin(), base.begin() + n);
}

std::vector<std::string> validate_lmf_config(const LMFConfig& cfg, bool first_encoder_layer) {
    if (cfg.dilations.empty())
        throw ConfigError("LMFConfig: dilation vector must be non-empty");
    for (int d : cfg.dilations)
        if (d < 1) throw ConfigError("LMFConfig: dilation must be >= 1, got " + std::to_string(d));
    if (cfg.input_maps < 1)
        throw ConfigError("LMFConfig: input_maps must be >= 1");
    if (cfg.c_in < 1 || cfg.c_out < 1)
        throw ConfigError("LMFConfig: channel counts must be >= 1");
    if (cfg.kernel < 1 || cfg.kernel % 2 == 0)
        throw ConfigError("LMFConfig: kernel must be odd positive, got " +
                          std::to_string(cfg.kernel));
    std::vector<std::string> warnings;
    if (!first_encoder_layer &&
        std::find(cfg.dilations.begin(), cfg.dilations.end(), 1) == cfg.dilations.end())
        warnings.push_back("LMFConfig: no rate-1 branch in dilation vector; "
                           "expect degraded sampling continuity");
    return warnings;
}

long long lmf_param_count(const LMFConfig& cfg, bool include_bn) {
    const long long n = cfg.branches();
    const long long k2 = static_cast<long long>(cfg.kernel) * cfg.kernel;
    long long total = n * k2 * cfg.c_in;
    total += n * static_cast<long long>(cfg.input_maps) * cfg.c_in * cfg.c_out;
    if (include_bn) total += n * (2LL * cfg.c_in + 2LL * cfg.c_out);
    return total;
}

LMFLayer::LMFLayer(const LMFConfig& cfg, Rng& rng) : cfg_(cfg) {
    validate_lmf_config(cfg, true);  // hard checks only; warnings surfaced by the builder
    const int n = cfg.branches();
    branch_conv.reserve(n);
    for (int i = 0; i < n; ++i) {
        branch_conv.emplace_back(cfg.c_in, cfg.kernel, cfg.dilations[i], rng);
        branch_norm.emplace_back(cfg.c_in);
        fusion_conv.emplace_back(cfg.input_maps * cfg.c_in, cfg.c_out, false, rng);
        fusion_norm.emplace_back(cfg.c_out);
    }
}

// Stacks m same-shaped maps along the batch dimension so the shared branch
// BN normalizes over all applications at once.
static Tensor batch_stack(const std::vector<Tensor>& xs) {
    Tensor out(static_cast<int>(xs.size()) * xs[0].n, xs[0].c, xs[0].h, xs[0].w);
    std::size_t off = 0;
    for (const Tensor& t : xs) {
        std::copy(t.data.begin(), t.data.end(), out.data.begin() + off);
        off += t.size();
    }
    return out;
}

static std::vector<Tensor> batch_split(const Tensor& x, int parts) {
    std::vector<Tensor> out;
    const int nb = x.n / parts;
    std::size_t off = 0;
    for (int p = 0; p < parts; ++p) {
        Tensor t(nb, x.c, x.h, x.w);
        std::copy_n(x.data.begin() + off, t.size(), t.data.begin());
        off += t.size();
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<Tensor> LMFLayer::forward(const std::vector<Tensor>& inputs, bool train,
                                      LmfCache& cache) {
    if (static_cast<int>(inputs.size()) != cfg_.input_maps)
        throw ShapeError("LMFLayer: expected " + std::to_string(cfg_.input_maps) +
                         " input maps, got " + std::to_string(inputs.size()));
    for (const Tensor& t : inputs) {
        if (!t.same_shape(inputs[0]))
            throw ShapeError("LMFLayer: input map shape mismatch: " + t.shape_str() + " vs " +
                             inputs[0].shape_str());
        if (t.c != cfg_.c_in)
            throw ShapeError("LMFLayer: input map " + t.shape_str() + " has " +
                             std::to_string(t.c) + " channels, config expects " +
                             std::to_string(cfg_.c_in));
    }
    const int n = cfg_.branches();
    const int m = cfg_.input_maps;
    cache.branch.assign(n, LmfBranchCache{});
    std::vector<Tensor> outputs;
    outputs.reserve(n);
    for (int i = 0; i < n; ++i) {
        LmfBranchCache& bc = cache.branch[i];
        bc.dw.resize(m);
        std::vector<Tensor> dw_out;
        dw_out.reserve(m);
        for (int j = 0; j < m; ++j)
            dw_out.push_back(branch_conv[i].forward(inputs[j], bc.dw[j]));
        Tensor stacked = batch_stack(dw_out);
        Tensor normed = branch_norm[i].forward(stacked, train, bc.bn_dw);
        Tensor act = activation_forward(normed, Activation::Relu);
        bc.relu_dw = {act};
        std::vector<Tensor> per_map = batch_split(act, m);
        Tensor fused_in = concat_channels(per_map);
        Tensor fused = fusion_conv[i].forward(fused_in, bc.pw);
        Tensor fn = fusion_norm[i].forward(fused, train, bc.bn_pw);
        Tensor out = activation_forward(fn, Activation::Relu);
        bc.relu_pw = out;
        bc.pre_resample_h = out.h;
        bc.pre_resample_w = out.w;
        if (cfg_.resample == Resample::Pool)
            out = maxpool2_forward(out, bc.pool);
        else if (cfg_.resample == Resample::Upsample)
            out = upsample2_forward(out);
        outputs.push_back(std::move(out));
    }
    return outputs;
}

std::vector<Tensor> LMFLayer::backward(const std::vector<Tensor>& grad_outputs,
                                       const LmfCache& cache, bool train) {
    const int n = cfg_.branches();
    const int m = cfg_.input_maps;
    if (static_cast<int>(grad_outputs.size()) != n)
        throw ShapeError("LMFLayer: expected " + std::to_string(n) + " output grads, got " +
                         std::to_string(grad_outputs.size()));
    std::vector<Tensor> grad_inputs;
    for (int i = 0; i < n; ++i) {
        const LmfBranchCache& bc = cache.branch[i];
        Tensor g = grad_outputs[i];
        if (cfg_.resample == Resample::Pool)
            g = maxpool2_backward(g, bc.pool, bc.pre_resample_h, bc.pre_resample_w);
        else if (cfg_.resample == Resample::Upsample)
            g = upsample2_backward(g, bc.pre_resample_h, bc.pre_resample_w);
        g = activation_backward(g, bc.relu_pw, Activation::Relu);
        g = fusion_norm[i].backward(g, bc.bn_pw, train);
        g = fusion_conv[i].backward(g, bc.pw);
        std::vector<int> splits(m, cfg_.c_in);
        std::vector<Tensor> per_map = split_channels(g, splits);
        Tensor stacked = batch_stack(per_map);
        stacked = activation_backward(stacked, bc.relu_dw[0], Activation::Relu);
        stacked = branch_norm[i].backward(stacked, bc.bn_dw, train);
        std::vector<Tensor> per_map_g = batch_split(stacked, m);
        for (int j = 0; j < m; ++j) {
            Tensor gi = branch_conv[i].backward(per_map_g[j], bc.dw[j]);
            if (static_cast<int>(grad_inputs.size()) <= j) {
                grad_inputs.push_back(std::move(gi));
            } else {
                for (std::size_t t = 0; t < gi.size(); ++t)
                    grad_inputs[j].data[t] += gi.data[t];
            }
        }
    }
    return grad_inputs;
}

std::vector<ParamTensor*> LMFLayer::params() {
    std::vector<ParamTensor*> out;
    for (int i = 0; i < cfg_.branches(); ++i) {
        out.push_back(&branch_conv[i].weight);
        out.push_back(&branch_norm[i].gamma);
        out.push_back(&branch_norm[i].beta);
        out.push_back(&fusion_conv[i].weight);
        out.push_back(&fusion_norm[i].gamma);
        out.push_back(&fusion_norm[i].beta);
    }
    return out;
}

std::vector<BatchNorm*> LMFLayer::norms() {
    std::vector<BatchNorm*> out;
    for (int i = 0; i < cfg_.branches(); ++i) {
        out.push_back(&branch_norm[i]);
        out.push_back(&fusion_norm[i]);
    }
    return out;
}

}  // namespace lmf
