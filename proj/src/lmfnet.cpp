#include "lmf/lmfnet.hpp"

#include <algorithm>

namespace lmf {

static const std::vector<int> kBaseDilations = {1, 4, 12, 36, 108};

static std::pair<int, int> apply_resample(std::pair<int, int> r, Resample re,
                                          const std::string& where,
                                          std::vector<std::string>& flags) {
    if (re == Resample::Pool) {
        if (r.first % 2 != 0 || r.second % 2 != 0)
            flags.push_back(where + ": odd resolution " + std::to_string(r.first) + "x" +
                            std::to_string(r.second) + " at pool point");
        r = {r.first / 2, r.second / 2};
    } else if (re == Resample::Upsample) {
        r = {r.first * 2, r.second * 2};
    }
    if (r.first < 1 || r.second < 1)
        flags.push_back(where + ": resolution collapsed below 1x1");
    else if (r.first == 1 && r.second == 1)
        flags.push_back(where + ": degenerate 1x1 resolution");
    return r;
}

SpatialSchedule spatial_schedule(const NetworkConfig& cfg) {
    SpatialSchedule s;
    std::pair<int, int> r{cfg.input_h, cfg.input_w};
    for (std::size_t i = 0; i < cfg.encoder.size(); ++i) {
        r = apply_resample(r, cfg.encoder[i].resample, "encoder stage " + std::to_string(i + 1),
                           s.flags);
        s.encoder.push_back(r);
    }
    if (cfg.head == HeadKind::Classifier) return s;

    if (s.encoder.size() < 5) {
        s.flags.push_back("encoder: expected 5 stages, got " +
                          std::to_string(s.encoder.size()));
        return s;
    }
    std::pair<int, int> fi = s.encoder[2];
    fi = apply_resample(fi, cfg.fusion_i_pool.resample, "fusion_i pool", s.flags);
    fi = apply_resample(fi, cfg.fusion_i_up.resample, "fusion_i upsample", s.flags);
    s.fusion_i = fi;
    std::pair<int, int> fl = s.encoder[1];
    fl = apply_resample(fl, cfg.fusion_l_pool.resample, "fusion_l pool", s.flags);
    fl = apply_resample(fl, cfg.fusion_l_up.resample, "fusion_l upsample", s.flags);
    s.fusion_l = fl;

    r = s.encoder[4];
    for (std::size_t i = 0; i < cfg.decoder.size(); ++i) {
        if (i == 2 && r != s.fusion_i)
            s.flags.push_back("F_8 junction: decoder stream " + std::to_string(r.first) + "x" +
                              std::to_string(r.second) + " vs fusion_i " +
                              std::to_string(s.fusion_i.first) + "x" +
                              std::to_string(s.fusion_i.second));
        if (i == 3 && r != s.fusion_l)
            s.flags.push_back("F_9 junction: decoder stream " + std::to_string(r.first) + "x" +
                              std::to_string(r.second) + " vs fusion_l " +
                              std::to_string(s.fusion_l.first) + "x" +
                              std::to_string(s.fusion_l.second));
        r = apply_resample(r, cfg.decoder[i].resample, "decoder stage " + std::to_string(i + 6),
                           s.flags);
        s.decoder.push_back(r);
    }
    if (!s.decoder.empty() && s.decoder.back() != std::pair<int, int>{cfg.input_h, cfg.input_w})
        s.flags.push_back("output resolution " + std::to_string(s.decoder.back().first) + "x" +
                          std::to_string(s.decoder.back().second) + " differs from input");
    return s;
}

std::vector<std::string> finalize_config(NetworkConfig& cfg) {
    std::vector<std::string> warnings;
    if (cfg.encoder.empty()) throw ConfigError("NetworkConfig: encoder must be non-empty");
    auto link = [&](LMFConfig& c, int m, int c_in, bool first) {
        c.input_maps = m;
        c.c_in = c_in;
        auto w = validate_lmf_config(c, first);
        warnings.insert(warnings.end(), w.begin(), w.end());
    };
    link(cfg.encoder[0], 1, 3, true);
    if (cfg.encoder[0].resample != Resample::None)
        throw ConfigError("NetworkConfig: encoder stage 1 must not resample");
    for (std::size_t i = 1; i < cfg.encoder.size(); ++i) {
        link(cfg.encoder[i], cfg.encoder[i - 1].branches(), cfg.encoder[i - 1].c_out, false);
        if (cfg.encoder[i].resample != Resample::Pool)
            throw ConfigError("NetworkConfig: encoder stage " + std::to_string(i + 1) +
                              " must pool");
    }
    if (cfg.head == HeadKind::Classifier) {
        if (cfg.num_classes < 2)
            throw ConfigError("NetworkConfig: classifier needs num_classes >= 2, got " +
                              std::to_string(cfg.num_classes));
        return warnings;
    }
    if (cfg.encoder.size() != 5)
        throw ConfigError("NetworkConfig: saliency network needs exactly 5 encoder stages");
    if (cfg.decoder.size() != 4)
        throw ConfigError("NetworkConfig: saliency network needs exactly 4 decoder stages");
    link(cfg.fusion_i_pool, cfg.encoder[2].branches(), cfg.encoder[2].c_out, false);
    link(cfg.fusion_i_up, cfg.fusion_i_pool.branches(), cfg.fusion_i_pool.c_out, false);
    link(cfg.fusion_l_pool, cfg.encoder[1].branches(), cfg.encoder[1].c_out, false);
    link(cfg.fusion_l_up, cfg.fusion_l_pool.branches(), cfg.fusion_l_pool.c_out, false);
    if (cfg.fusion_i_pool.resample != Resample::Pool ||
        cfg.fusion_l_pool.resample != Resample::Pool ||
        cfg.fusion_i_up.resample != Resample::Upsample ||
        cfg.fusion_l_up.resample != Resample::Upsample)
        throw ConfigError("NetworkConfig: fusion layers must be pool+upsample pairs");
    link(cfg.decoder[0], cfg.encoder[4].branches(), cfg.encoder[4].c_out, false);
    link(cfg.decoder[1], cfg.decoder[0].branches(), cfg.decoder[0].c_out, false);
    // Concat stages receive one map whose channels are the flattened branch
    // outputs of both streams.
    link(cfg.decoder[2], 1,
         cfg.fusion_i_up.branches() * cfg.fusion_i_up.c_out +
             cfg.decoder[1].branches() * cfg.decoder[1].c_out,
         false);
    link(cfg.decoder[3], 1,
         cfg.fusion_l_up.branches() * cfg.fusion_l_up.c_out +
             cfg.decoder[2].branches() * cfg.decoder[2].c_out,
         false);
    for (const LMFConfig& d : cfg.decoder)
        if (d.resample != Resample::Upsample)
            throw ConfigError("NetworkConfig: decoder stages must upsample");
    return warnings;
}

LmfNet::LmfNet(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    finalize_config(cfg_);
    Rng rng(seed ^ 0x6c6d666e65740101ULL);
    for (const LMFConfig& c : cfg_.encoder) encoder.emplace_back(c, rng);
    if (cfg_.head == HeadKind::Saliency) {
        fi_pool = LMFLayer(cfg_.fusion_i_pool, rng);
        fi_up = LMFLayer(cfg_.fusion_i_up, rng);
        fl_pool = LMFLayer(cfg_.fusion_l_pool, rng);
        fl_up = LMFLayer(cfg_.fusion_l_up, rng);
        for (const LMFConfig& c : cfg_.decoder) decoder.emplace_back(c, rng);
        const int head_in = cfg_.decoder[3].branches() * cfg_.decoder[3].c_out;
        head_conv = PointwiseConv(head_in, 1, true, rng);
    } else {
        const int feat = cfg_.encoder.back().branches() * cfg_.encoder.back().c_out;
        fc_hidden = FcLayer(feat, cfg_.hidden_width, rng);
        fc_out = FcLayer(cfg_.hidden_width, cfg_.num_classes, rng);
    }
}

LmfNet build_network(const NetworkConfig& cfg, std::uint64_t seed) {
    NetworkConfig c = cfg;
    finalize_config(c);
    if (cfg.head == HeadKind::Saliency) {
        SpatialSchedule s = spatial_schedule(c);
        if (!s.ok()) throw ConfigError("build_network: invalid schedule: " + s.flags.front());
    }
    return LmfNet(c, seed);
}

Tensor LmfNet::forward(const Tensor& images, bool train, NetCache& cache) {
    if (images.h != cfg_.input_h || images.w != cfg_.input_w)
        throw ShapeError("LmfNet: input " + images.shape_str() + " does not match config " +
                         std::to_string(cfg_.input_h) + "x" + std::to_string(cfg_.input_w));
    if (images.c != 3)
        throw ShapeError("LmfNet: expected 3-channel input, got " + images.shape_str());
    return cfg_.head == HeadKind::Saliency ? forward_sod(images, train, cache)
                                           : forward_cls(images, train, cache);
}

Tensor LmfNet::forward_eval(const Tensor& images) {
    NetCache cache;
    return forward(images, false, cache);
}

Tensor LmfNet::forward_sod(const Tensor& images, bool train, NetCache& cache) {
    cache.encoder.assign(encoder.size(), LmfCache{});
    cache.enc_out.clear();
    std::vector<Tensor> maps = {images};
    for (std::size_t i = 0; i < encoder.size(); ++i) {
        maps = encoder[i].forward(maps, train, cache.encoder[i]);
        cache.enc_out.push_back(maps);
    }
    cache.fi_out = fi_up.forward(fi_pool.forward(cache.enc_out[2], train, cache.fi_pool), train,
                                 cache.fi_up);
    cache.fl_out = fl_up.forward(fl_pool.forward(cache.enc_out[1], train, cache.fl_pool), train,
                                 cache.fl_up);

    cache.decoder.assign(decoder.size(), LmfCache{});
    cache.dec_out.clear();
    std::vector<Tensor> d = decoder[0].forward(cache.enc_out[4], train, cache.decoder[0]);
    cache.dec_out.push_back(d);
    d = decoder[1].forward(d, train, cache.decoder[1]);
    cache.dec_out.push_back(d);
    Tensor j8 = concat_channels({concat_channels(cache.fi_out), concat_channels(d)});
    d = decoder[2].forward({j8}, train, cache.decoder[2]);
    cache.dec_out.push_back(d);
    Tensor j9 = concat_channels({concat_channels(cache.fl_out), concat_channels(d)});
    d = decoder[3].forward({j9}, train, cache.decoder[3]);
    cache.dec_out.push_back(d);

    Tensor logits = head_conv.forward(concat_channels(d), cache.head_pw);
    cache.head_sigmoid = activation_forward(logits, Activation::Sigmoid);
    return cache.head_sigmoid;
}

Tensor LmfNet::forward_cls(const Tensor& images, bool train, NetCache& cache) {
    cache.encoder.assign(encoder.size(), LmfCache{});
    cache.enc_out.clear();
    std::vector<Tensor> maps = {images};
    for (std::size_t i = 0; i < encoder.size(); ++i) {
        maps = encoder[i].forward(maps, train, cache.encoder[i]);
        cache.enc_out.push_back(maps);
    }
    cache.gap_in = maps;
    std::vector<Tensor> pooled;
    pooled.reserve(maps.size());
    for (const Tensor& t : maps) pooled.push_back(gap_forward(t));
    Tensor flat = concat_channels(pooled);
    Tensor h = fc_hidden.forward(flat, cache.fc1_in);
    cache.fc1_relu = activation_forward(h, Activation::Relu);
    return fc_out.forward(cache.fc1_relu, cache.fc2_in);
}

static void add_into(std::vector<Tensor>& acc, const std::vector<Tensor>& add) {
    if (acc.empty()) {
        acc = add;
        return;
    }
    for (std::size_t i = 0; i < acc.size(); ++i)
        for (std::size_t t = 0; t < acc[i].size(); ++t) acc[i].data[t] += add[i].data[t];
}

void LmfNet::backward(const Tensor& grad_output, NetCache& cache, bool train) {
    if (cfg_.head == HeadKind::Saliency)
        backward_sod(grad_output, cache, train);
    else
        backward_cls(grad_output, cache, train);
}

void LmfNet::backward_sod(const Tensor& grad, NetCache& cache, bool train) {
    Tensor gz = activation_backward(grad, cache.head_sigmoid, Activation::Sigmoid);
    Tensor g9_flat = head_conv.backward(gz, cache.head_pw);
    const int n9 = cfg_.decoder[3].branches();
    std::vector<Tensor> g9 = split_channels(g9_flat, std::vector<int>(n9, cfg_.decoder[3].c_out));
    std::vector<Tensor> gj9 = decoder[3].backward(g9, cache.decoder[3], train);

    const int fl_flat = cfg_.fusion_l_up.branches() * cfg_.fusion_l_up.c_out;
    const int d8_flat = cfg_.decoder[2].branches() * cfg_.decoder[2].c_out;
    std::vector<Tensor> parts = split_channels(gj9[0], {fl_flat, d8_flat});
    std::vector<Tensor> g_fl = split_channels(
        parts[0], std::vector<int>(cfg_.fusion_l_up.branches(), cfg_.fusion_l_up.c_out));
    std::vector<Tensor> g8 = split_channels(
        parts[1], std::vector<int>(cfg_.decoder[2].branches(), cfg_.decoder[2].c_out));

    std::vector<Tensor> g_f2_from_fl =
        fl_pool.backward(fl_up.backward(g_fl, cache.fl_up, train), cache.fl_pool, train);

    std::vector<Tensor> gj8 = decoder[2].backward(g8, cache.decoder[2], train);
    const int fi_flat = cfg_.fusion_i_up.branches() * cfg_.fusion_i_up.c_out;
    const int d7_flat = cfg_.decoder[1].branches() * cfg_.decoder[1].c_out;
    parts = split_channels(gj8[0], {fi_flat, d7_flat});
    std::vector<Tensor> g_fi = split_channels(
        parts[0], std::vector<int>(cfg_.fusion_i_up.branches(), cfg_.fusion_i_up.c_out));
    std::vector<Tensor> g7 = split_channels(
        parts[1], std::vector<int>(cfg_.decoder[1].branches(), cfg_.decoder[1].c_out));

    std::vector<Tensor> g_f3_from_fi =
        fi_pool.backward(fi_up.backward(g_fi, cache.fi_up, train), cache.fi_pool, train);

    std::vector<Tensor> g6 = decoder[1].backward(g7, cache.decoder[1], train);
    std::vector<Tensor> g5 = decoder[0].backward(g6, cache.decoder[0], train);

    std::vector<Tensor> g4 = encoder[4].backward(g5, cache.encoder[4], train);
    std::vector<Tensor> g3 = encoder[3].backward(g4, cache.encoder[3], train);
    add_into(g3, g_f3_from_fi);
    std::vector<Tensor> g2 = encoder[2].backward(g3, cache.encoder[2], train);
    add_into(g2, g_f2_from_fl);
    std::vector<Tensor> g1 = encoder[1].backward(g2, cache.encoder[1], train);
    encoder[0].backward(g1, cache.encoder[0], train);  // image gradient discarded
}

void LmfNet::backward_cls(const Tensor& grad, NetCache& cache, bool train) {
    Tensor gh = fc_out.backward(grad, cache.fc2_in);
    gh = activation_backward(gh, cache.fc1_relu, Activation::Relu);
    Tensor gflat = fc_hidden.backward(gh, cache.fc1_in);
    const int n5 = cfg_.encoder.back().branches();
    std::vector<Tensor> per_map =
        split_channels(gflat, std::vector<int>(n5, cfg_.encoder.back().c_out));
    std::vector<Tensor> g;
    g.reserve(per_map.size());
    for (std::size_t i = 0; i < per_map.size(); ++i)
        g.push_back(gap_backward(per_map[i], cache.gap_in[i].h, cache.gap_in[i].w));
    for (int i = static_cast<int>(encoder.size()) - 1; i >= 0; --i)
        g = encoder[i].backward(g, cache.encoder[i], train);
}

std::vector<std::pair<std::string, ParamTensor*>> LmfNet::named_params() {
    std::vector<std::pair<std::string, ParamTensor*>> out;
    auto add_layer = [&](const std::string& prefix, LMFLayer& layer) {
        auto ps = layer.params();
        static const char* roles[] = {"dw", "bn_dw.gamma", "bn_dw.beta",
                                      "pw", "bn_pw.gamma", "bn_pw.beta"};
        for (std::size_t i = 0; i < ps.size(); ++i)
            out.emplace_back(prefix + ".b" + std::to_string(i / 6) + "." + roles[i % 6], ps[i]);
    };
    for (std::size_t i = 0; i < encoder.size(); ++i)
        add_layer("enc" + std::to_string(i + 1), encoder[i]);
    if (cfg_.head == HeadKind::Saliency) {
        add_layer("fi_pool", fi_pool);
        add_layer("fi_up", fi_up);
        add_layer("fl_pool", fl_pool);
        add_layer("fl_up", fl_up);
        for (std::size_t i = 0; i < decoder.size(); ++i)
            add_layer("dec" + std::to_string(i + 6), decoder[i]);
        out.emplace_back("head.w", &head_conv.weight);
        out.emplace_back("head.b", &head_conv.bias);
    } else {
        out.emplace_back("fc1.w", &fc_hidden.weight);
        out.emplace_back("fc1.b", &fc_hidden.bias);
        out.emplace_back("fc2.w", &fc_out.weight);
        out.emplace_back("fc2.b", &fc_out.bias);
    }
    return out;
}

std::vector<ParamTensor*> LmfNet::params() {
    std::vector<ParamTensor*> out;
    for (auto& [name, p] : named_params()) out.push_back(p);
    return out;
}

std::vector<std::pair<std::string, BatchNorm*>> LmfNet::named_norms() {
    std::vector<std::pair<std::string, BatchNorm*>> out;
    auto add_layer = [&](const std::string& prefix, LMFLayer& layer) {
        auto ns = layer.norms();
        for (std::size_t i = 0; i < ns.size(); ++i)
            out.emplace_back(prefix + ".b" + std::to_string(i / 2) +
                                 (i % 2 == 0 ? ".bn_dw" : ".bn_pw"),
                             ns[i]);
    };
    for (std::size_t i = 0; i < encoder.size(); ++i)
        add_layer("enc" + std::to_string(i + 1), encoder[i]);
    if (cfg_.head == HeadKind::Saliency) {
        add_layer("fi_pool", fi_pool);
        add_layer("fi_up", fi_up);
        add_layer("fl_pool", fl_pool);
        add_layer("fl_up", fl_up);
        for (std::size_t i = 0; i < decoder.size(); ++i)
            add_layer("dec" + std::to_string(i + 6), decoder[i]);
    }
    return out;
}

long long LmfNet::param_count() {
    long long total = 0;
    for (ParamTensor* p : params()) total += static_cast<long long>(p->size());
    return total;
}

void LmfNet::zero_grad() {
    for (ParamTensor* p : params()) p->zero_grad();
}

// ---- stock configurations -------------------------------------------------

static LMFConfig enc_stage(int n, int k, int c_out, Resample re) {
    LMFConfig c;
    c.dilations = truncate_dilation_vector(kBaseDilations, n);
    c.kernel = k;
    c.c_out = c_out;
    c.resample = re;
    return c;
}

static NetworkConfig make_sod(const std::vector<int>& enc_widths,
                              const std::vector<int>& enc_branches,
                              const std::vector<int>& dec_widths,
                              const std::vector<int>& dec_branches, int fusion_branches,
                              int resolution) {
    NetworkConfig cfg;
    cfg.input_h = cfg.input_w = resolution;
    cfg.head = HeadKind::Saliency;
    for (int i = 0; i < 5; ++i) {
        LMFConfig c = enc_stage(enc_branches[i], i == 0 ? 5 : 3, enc_widths[i],
                                i == 0 ? Resample::None : Resample::Pool);
        if (i == 0) c.dilations = {1, 4, 1};
        cfg.encoder.push_back(c);
    }
    cfg.fusion_i_pool = enc_stage(fusion_branches, 3, enc_widths[2], Resample::Pool);
    cfg.fusion_i_up = enc_stage(fusion_branches, 3, enc_widths[2], Resample::Upsample);
    cfg.fusion_l_pool = enc_stage(fusion_branches, 3, enc_widths[1], Resample::Pool);
    cfg.fusion_l_up = enc_stage(fusion_branches, 3, enc_widths[1], Resample::Upsample);
    for (int i = 0; i < 4; ++i)
        cfg.decoder.push_back(enc_stage(dec_branches[i], 3, dec_widths[i], Resample::Upsample));
    finalize_config(cfg);
    return cfg;
}

NetworkConfig default_sod_config() {
    return make_sod({12, 20, 36, 96, 176}, {3, 5, 5, 5, 5}, {64, 48, 32, 16}, {3, 3, 2, 2}, 3,
                    256);
}

NetworkConfig default_sod_config_scaled(double width_scale) {
    auto sc = [&](int w) { return std::max(4, static_cast<int>(w * width_scale + 0.5)); };
    return make_sod({sc(12), sc(20), sc(36), sc(96), sc(176)}, {3, 5, 5, 5, 5},
                    {sc(64), sc(48), sc(32), sc(16)}, {3, 3, 2, 2}, 3, 256);
}

NetworkConfig tiny_sod_config(int resolution) {
    return make_sod({4, 6, 8, 10, 12}, {3, 3, 3, 3, 3}, {10, 8, 6, 4}, {2, 2, 2, 2}, 2,
                    resolution);
}

static NetworkConfig make_cls(const std::vector<int>& widths,
                              const std::vector<int>& branches, int hidden, int num_classes) {
    NetworkConfig cfg;
    cfg.input_h = cfg.input_w = 32;
    cfg.head = HeadKind::Classifier;
    cfg.num_classes = num_classes;
    cfg.hidden_width = hidden;
    for (int i = 0; i < 5; ++i) {
        LMFConfig c = enc_stage(branches[i], i == 0 ? 5 : 3, widths[i],
                                i == 0 ? Resample::None : Resample::Pool);
        if (i == 0) c.dilations = {1, 4, 1};
        cfg.encoder.push_back(c);
    }
    finalize_config(cfg);
    return cfg;
}

NetworkConfig default_classifier_config(int num_classes) {
    return make_cls({12, 20, 36, 96, 176}, {3, 5, 5, 5, 5}, 128, num_classes);
}

NetworkConfig wide_classifier_config(int num_classes) {
    return make_cls({16, 28, 48, 128, 256}, {3, 5, 5, 5, 5}, 160, num_classes);
}

NetworkConfig tiny_classifier_config(int num_classes) {
    return make_cls({4, 6, 8, 12, 16}, {2, 3, 3, 3, 3}, 32, num_classes);
}

}  // namespace lmf
