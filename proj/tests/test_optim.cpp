#include <doctest.h>

#include <cmath>

#include "lmf/augment.hpp"
#include "lmf/optim.hpp"
#include "helpers.hpp"

using namespace lmf;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

ParamTensor scalar_param(double value, double grad, ParamRole role) {
    ParamTensor p(Tensor(1, 1, 1, 1, value), role);
    p.grad.data[0] = grad;
    return p;
}

}  // namespace

TEST_CASE("adam reproduces the scalar reference recurrence") {
    ParamTensor p = scalar_param(1.0, 1.0, ParamRole::DepthwiseWeight);
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::Adam;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.0;
    Optimizer opt(cfg, {&p});
    opt.step({&p});
    // First step: mhat = g, vhat = g^2, update = lr * g / (|g| + eps).
    const double expect1 = 1.0 - 1e-3 * 1.0 / (1.0 + 1e-8);
    CHECK(p.value.data[0] == doctest::Approx(expect1).epsilon(1e-12));

    // Second step with the same gradient, tracked against the textbook state.
    p.grad.data[0] = 1.0;
    opt.step({&p});
    double m = 0.0, v = 0.0, x = 1.0;
    for (int t = 1; t <= 2; ++t) {
        m = 0.9 * m + 0.1 * 1.0;
        v = 0.999 * v + 0.001 * 1.0;
        const double mh = m / (1 - std::pow(0.9, t));
        const double vh = v / (1 - std::pow(0.999, t));
        x -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(p.value.data[0] == doctest::Approx(x).epsilon(1e-12));
}

TEST_CASE("sgd with momentum reproduces the velocity recurrence") {
    ParamTensor p = scalar_param(2.0, 0.5, ParamRole::FcWeight);
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::SgdMomentum;
    cfg.lr = 0.1;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0;
    Optimizer opt(cfg, {&p});
    opt.step({&p});
    // v1 = g, x -= lr * v1.
    CHECK(p.value.data[0] == doctest::Approx(2.0 - 0.1 * 0.5).epsilon(1e-12));
    p.grad.data[0] = 0.5;
    opt.step({&p});
    // v2 = 0.9 * v1 + g.
    const double v2 = 0.9 * 0.5 + 0.5;
    CHECK(p.value.data[0] == doctest::Approx(2.0 - 0.1 * 0.5 - 0.1 * v2).epsilon(1e-12));
}

TEST_CASE("weight decay applies to conv/fc weights but not norms or biases") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::SgdMomentum;
    cfg.lr = 1.0;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.1;

    for (ParamRole decayed :
         {ParamRole::DepthwiseWeight, ParamRole::PointwiseWeight, ParamRole::FcWeight}) {
        ParamTensor p = scalar_param(1.0, 0.0, decayed);
        Optimizer opt(cfg, {&p});
        opt.step({&p});
        CHECK(p.value.data[0] == doctest::Approx(0.9).epsilon(1e-12));
    }
    for (ParamRole exempt : {ParamRole::BnGamma, ParamRole::BnBeta, ParamRole::FcBias}) {
        ParamTensor p = scalar_param(1.0, 0.0, exempt);
        Optimizer opt(cfg, {&p});
        opt.step({&p});
        CHECK(p.value.data[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("learning rate schedules") {
    ScheduleSpec constant;
    CHECK(constant.scale_at(0) == 1.0);
    CHECK(constant.scale_at(100) == 1.0);

    ScheduleSpec expo;
    expo.kind = ScheduleKind::Exponential;
    expo.gamma = 0.98;
    CHECK(expo.scale_at(0) == doctest::Approx(1.0));
    CHECK(expo.scale_at(10) == doctest::Approx(std::pow(0.98, 10)).epsilon(1e-12));

    ScheduleSpec multi;
    multi.kind = ScheduleKind::Multistep;
    multi.factor = 0.2;
    multi.milestones = {60, 120};
    CHECK(multi.scale_at(59) == doctest::Approx(1.0));
    CHECK(multi.scale_at(60) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(multi.scale_at(120) == doctest::Approx(0.04).epsilon(1e-12));

    OptimizerConfig cfg;
    cfg.lr = 0.5;
    cfg.schedule = multi;
    Optimizer opt(cfg, {});
    opt.set_epoch(61);
    CHECK(opt.current_lr() == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("string round-trips for optimizer and schedule kinds") {
    CHECK(optimizer_kind_from_string("adam") == OptimizerKind::Adam);
    CHECK(optimizer_kind_from_string("sgd") == OptimizerKind::SgdMomentum);
    CHECK(to_string(OptimizerKind::Adam) == "adam");
    CHECK(schedule_kind_from_string("exponential") == ScheduleKind::Exponential);
    CHECK(to_string(ScheduleKind::Multistep) == "multistep");
    CHECK_THROWS_AS(optimizer_kind_from_string("adamw"), ConfigError);
    CHECK_THROWS_AS(schedule_kind_from_string("cosine"), ConfigError);
}

TEST_CASE("saliency augmentation: shapes preserved, mask binary, geometry shared") {
    Rng rng(81);
    const Tensor image = random_tensor(1, 3, 40, 40, rng, 0.0, 1.0);
    Tensor mask(1, 1, 40, 40);
    for (int y = 10; y < 30; ++y)
        for (int x = 12; x < 28; ++x) mask.at(0, 0, y, x) = 1.0;

    AugmentConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
        const AugmentedPair out = augment_sod(image, mask, cfg, rng);
        CHECK(out.image.same_shape(image));
        CHECK(out.mask.same_shape(mask));
        for (double v : out.mask.data) CHECK((v == 0.0 || v == 1.0));
        for (double v : out.image.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        // The object survives every geometric transform.
        double area = 0.0;
        for (double v : out.mask.data) area += v;
        CHECK(area > 0.0);
    }
}

TEST_CASE("augmentation is deterministic given the rng state and inert when disabled") {
    Rng a(82), b(82);
    Rng imgRng(83);
    const Tensor image = random_tensor(1, 3, 32, 32, imgRng, 0.0, 1.0);
    Tensor mask(1, 1, 32, 32);
    for (int i = 200; i < 400; ++i) mask.data[i] = 1.0;
    AugmentConfig cfg;
    const AugmentedPair o1 = augment_sod(image, mask, cfg, a);
    const AugmentedPair o2 = augment_sod(image, mask, cfg, b);
    CHECK(max_abs_diff(o1.image, o2.image) == 0.0);
    CHECK(max_abs_diff(o1.mask, o2.mask) == 0.0);

    cfg.enabled = false;
    const AugmentedPair id = augment_sod(image, mask, cfg, a);
    CHECK(max_abs_diff(id.image, image) == 0.0);
    CHECK(max_abs_diff(id.mask, mask) == 0.0);
    const Tensor idc = augment_image(image, cfg, a);
    CHECK(max_abs_diff(idc, image) == 0.0);
}

TEST_CASE("classifier augmentation keeps shape and range") {
    Rng rng(84);
    const Tensor image = random_tensor(1, 3, 32, 32, rng, 0.0, 1.0);
    AugmentConfig cfg;
    for (int trial = 0; trial < 5; ++trial) {
        const Tensor out = augment_image(image, cfg, rng);
        CHECK(out.same_shape(image));
        for (double v : out.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}
