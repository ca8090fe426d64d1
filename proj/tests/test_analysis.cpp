#include <doctest.h>

#include <numeric>

#include "lmf/analysis.hpp"
#include "lmf/kernels.hpp"
#include "helpers.hpp"

using namespace lmf;

namespace {

// Gradient-support probe: push a unit gradient through the transposed conv
// stack and measure the extent of the non-zero region. For a linear stack
// this is the exact receptive field of one output tap.
long long probe_rf_extent(const std::vector<std::pair<int, int>>& kd) {
    LayerStackSpec stack;
    for (auto [k, d] : kd) stack.push_back(LayerRecord::conv(k, d));
    const long long rf = receptive_field(stack).variant_b.back();
    int S = static_cast<int>(rf) + 9;
    if (S % 2 == 0) ++S;
    Tensor g(1, 1, S, S);
    g.at(0, 0, S / 2, S / 2) = 1.0;
    for (auto it = kd.rbegin(); it != kd.rend(); ++it) {
        ParamTensor w(Tensor(1, 1, it->first, it->first, 1.0), ParamRole::DepthwiseWeight);
        g = depthwise_backward_input(g, w, ConvGeometry::same(it->first, it->second), S, S);
    }
    int lo = S, hi = -1;
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x)
            if (g.at(0, 0, y, x) != 0.0) {
                lo = std::min(lo, y);
                hi = std::max(hi, y);
            }
    return hi - lo + 1;
}

LayerStackSpec conv_stack(int k, const std::vector<int>& ds) {
    LayerStackSpec s;
    for (int d : ds) s.push_back(LayerRecord::conv(k, d));
    return s;
}

}  // namespace

TEST_CASE("receptive field recurrences on undilated and dilated stacks") {
    const RfReport plain = receptive_field(conv_stack(3, {1, 1, 1}));
    CHECK(plain.variant_a == std::vector<long long>{3, 5, 7});
    CHECK(plain.variant_b == std::vector<long long>{3, 5, 7});

    // The two recurrences diverge on dilated stacks; the support probe sides
    // with variant B.
    const RfReport dil = receptive_field(conv_stack(3, {1, 2, 3}));
    CHECK(dil.variant_a == std::vector<long long>{3, 7, 21});
    CHECK(dil.variant_b == std::vector<long long>{3, 7, 13});
    CHECK(probe_rf_extent({{3, 1}, {3, 2}, {3, 3}}) == 13);

    CHECK_THROWS_AS(receptive_field({}), ConfigError);
}

TEST_CASE("variant-B receptive field equals the gradient-support probe on a sampled grid") {
    Rng rng(41);
    const int kernels[] = {1, 3, 5};
    int probes = 0;
    for (int depth = 1; depth <= 4 && probes < 64; ++depth) {
        for (int rep = 0; rep < 16 && probes < 64; ++rep) {
            std::vector<std::pair<int, int>> kd;
            for (int l = 0; l < depth; ++l)
                kd.emplace_back(kernels[rng.below(3)], 1 + static_cast<int>(rng.below(4)));
            LayerStackSpec stack;
            for (auto [k, d] : kd) stack.push_back(LayerRecord::conv(k, d));
            CHECK(receptive_field(stack).variant_b.back() == probe_rf_extent(kd));
            ++probes;
        }
    }
    CHECK(probes == 64);
}

TEST_CASE("pooling doubles the jump of later layers in variant B") {
    LayerStackSpec s{LayerRecord::conv(3, 1), LayerRecord::pool(), LayerRecord::conv(3, 1)};
    const RfReport r = receptive_field(s);
    CHECK(r.variant_b == std::vector<long long>{3, 4, 8});
}

TEST_CASE("coverage map reproduces brute-force composed support") {
    // (k=3,d=1)+(k=3,d=4): offsets i + 4j, i,j in {0,1,2}.
    const auto cov = coverage_map({{3, 1}, {3, 4}});
    std::vector<std::uint8_t> expect(11, 0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) expect[i + 4 * j] = 1;
    CHECK(cov == expect);
    // A dilated first layer leaves intra-stride holes even at low ratios.
    const auto cov2 = coverage_map({{3, 2}, {3, 4}});
    for (std::size_t i = 0; i < cov2.size(); ++i) CHECK(cov2[i] == (i % 2 == 0 ? 1 : 0));
}

TEST_CASE("gridding rule: ratio strictly below the preceding kernel passes") {
    const GriddingReport ok = gridding_check(conv_stack(5, {1, 4, 12, 36, 108}));
    CHECK(ok.all_pass);
    REQUIRE(ok.pairs.size() == 4);
    CHECK(ok.pairs[0].ratio == doctest::Approx(4.0));
    CHECK(ok.pairs[1].ratio == doctest::Approx(3.0));
    CHECK(ok.stack_gaps.empty());

    const GriddingReport bad = gridding_check(conv_stack(3, {1, 4}));
    CHECK_FALSE(bad.all_pass);
    REQUIRE(bad.pairs.size() == 1);
    CHECK_FALSE(bad.pairs[0].pass);
    CHECK_FALSE(bad.pairs[0].gaps.empty());
    CHECK(bad.pairs[0].gaps.front() == 3);

    // Boundary: ratio equal to the kernel is rejected.
    const GriddingReport edge = gridding_check(conv_stack(3, {1, 3}));
    CHECK_FALSE(edge.all_pass);
    CHECK(edge.pairs[0].gaps.empty());  // conservative rule: fails before holes appear
}

TEST_CASE("parameter formulas reproduce the reference counts") {
    CHECK(standard_conv_params(3, 256, 256) == 589824);
    CHECK(separable_conv_params(3, 256, 256) == 67840);
    CHECK(standard_conv_params(1, 8, 16) == 128);
    CHECK(separable_conv_params(5, 4, 8) == 132);
    CHECK(fc_params(512, 10) == 5130);
}

TEST_CASE("flops on a hand-counted single-stage classifier") {
    NetworkConfig cfg;
    cfg.input_h = cfg.input_w = 4;
    cfg.head = HeadKind::Classifier;
    cfg.num_classes = 2;
    cfg.hidden_width = 1;
    LMFConfig stage;
    stage.dilations = {1};
    stage.kernel = 3;
    stage.c_out = 1;
    cfg.encoder.push_back(stage);
    finalize_config(cfg);
    const FlopReport f = flops_count(cfg);
    // depthwise 1*1*16*3*9=432, fusion 16*1*3=48, fc 1*1+1*2=3.
    CHECK(f.macs == 483);
    // BN+ReLU 144+48, GAP 16, hidden ReLU 1.
    CHECK(f.elementwise == 209);
    CHECK(f.flops() == 2 * 483 + 209);
    // Batch scales MACs linearly.
    CHECK(flops_count(cfg, 4).macs == 4 * 483);
}

TEST_CASE("default saliency network: deepest path, windows, analysis verdicts") {
    const NetworkConfig cfg = default_sod_config();
    const LayerStackSpec stack = deepest_path_stack(cfg);
    std::vector<int> dilations;
    int pools = 0;
    for (const LayerRecord& l : stack)
        if (l.kind == LayerKind::Conv)
            dilations.push_back(l.dilation);
        else
            ++pools;
    CHECK(dilations == std::vector<int>{1, 4, 12, 36, 108});
    CHECK(pools == 4);

    const AnalysisReport rep = analyze_network(cfg);
    CHECK(rep.rf.variant_b.back() > 256);  // covers the full input extent
    CHECK(rep.gridding.all_pass);
    CHECK(rep.gridding.stack_gaps.empty());
    CHECK(rep.schedule_flags.empty());
    CHECK(rep.params >= 730000);
    CHECK(rep.params <= 890000);
    CHECK(rep.flops.flops() >= 3000000000LL);
    CHECK(rep.flops.flops() <= 4600000000LL);
}

TEST_CASE("a too-steep dilation ladder fails the network-level gate") {
    NetworkConfig cfg = default_sod_config();
    cfg.encoder[1].dilations = {1, 6};
    const AnalysisReport rep = analyze_network(cfg);
    CHECK_FALSE(rep.gridding.all_pass);
    bool found = false;
    for (const GriddingPair& p : rep.gridding.pairs)
        if (!p.pass && p.dilation_second == 6) found = true;
    CHECK(found);
}

TEST_CASE("width variants land on their parameter targets") {
    CHECK(std::llabs(analytic_param_count(default_sod_config_scaled(0.78)) - 500000) <= 50000);
    CHECK(std::llabs(analytic_param_count(default_sod_config_scaled(1.26)) - 1310000) <= 131000);
}
