#include <chrono>
#include <cmath>
#include <cstdio>

#include "lmf/kernels.hpp"
#include "lmf/reference.hpp"
#include "lmf/rng.hpp"

// Compares the OpenMP kernels against the serial reference implementations:
// wall time and elementwise agreement. Any mismatch beyond 1e-12 fails the
// run with a nonzero exit code.

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

lmf::Tensor random_tensor(int n, int c, int h, int w, lmf::Rng& rng) {
    lmf::Tensor t(n, c, h, w);
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

bool matches(const lmf::Tensor& a, const lmf::Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::fabs(a.data[i] - b.data[i]) > 1e-12) return false;
    return true;
}

struct Case {
    const char* name;
    double parallel_s = 0.0;
    double serial_s = 0.0;
    bool match = false;
};

void report(const Case& c) {
    std::printf("%-22s parallel %8.4fs  serial %8.4fs  speedup %5.2fx  %s\n", c.name,
                c.parallel_s, c.serial_s, c.serial_s / c.parallel_s,
                c.match ? "match" : "MISMATCH");
}

}  // namespace

int main() {
    lmf::Rng rng(42);
    const int reps = 3;
    bool all_match = true;

    {
        Case c{"depthwise 3x3 d=4"};
        const lmf::Tensor x = random_tensor(2, 32, 128, 128, rng);
        lmf::ParamTensor w(random_tensor(32, 1, 3, 3, rng), lmf::ParamRole::DepthwiseWeight);
        const lmf::ConvGeometry g = lmf::ConvGeometry::same(3, 4);
        lmf::Tensor y_par, y_ser;
        auto t0 = Clock::now();
        for (int r = 0; r < reps; ++r) y_par = lmf::depthwise_forward(x, w, g);
        c.parallel_s = seconds_since(t0) / reps;
        t0 = Clock::now();
        for (int r = 0; r < reps; ++r)
            y_ser = lmf::ref::depthwise_forward(x, w.value, g.kernel, g.dilation, g.stride, g.pad);
        c.serial_s = seconds_since(t0) / reps;
        c.match = matches(y_par, y_ser);
        all_match &= c.match;
        report(c);
    }

    {
        Case c{"pointwise 64->64"};
        const lmf::Tensor x = random_tensor(2, 64, 128, 128, rng);
        lmf::ParamTensor w(random_tensor(64, 64, 1, 1, rng), lmf::ParamRole::PointwiseWeight);
        lmf::Tensor y_par, y_ser;
        auto t0 = Clock::now();
        for (int r = 0; r < reps; ++r) y_par = lmf::pointwise_forward(x, w);
        c.parallel_s = seconds_since(t0) / reps;
        t0 = Clock::now();
        for (int r = 0; r < reps; ++r) y_ser = lmf::ref::pointwise_forward(x, w.value, nullptr);
        c.serial_s = seconds_since(t0) / reps;
        c.match = matches(y_par, y_ser);
        all_match &= c.match;
        report(c);
    }

    {
        Case c{"maxpool2"};
        const lmf::Tensor x = random_tensor(4, 64, 256, 256, rng);
        lmf::Tensor y_par, y_ser;
        auto t0 = Clock::now();
        for (int r = 0; r < reps; ++r) {
            lmf::PoolCache cache;
            y_par = lmf::maxpool2_forward(x, cache);
        }
        c.parallel_s = seconds_since(t0) / reps;
        t0 = Clock::now();
        for (int r = 0; r < reps; ++r) y_ser = lmf::ref::maxpool2_forward(x);
        c.serial_s = seconds_since(t0) / reps;
        c.match = matches(y_par, y_ser);
        all_match &= c.match;
        report(c);
    }

    {
        Case c{"upsample2"};
        const lmf::Tensor x = random_tensor(4, 64, 128, 128, rng);
        lmf::Tensor y_par, y_ser;
        auto t0 = Clock::now();
        for (int r = 0; r < reps; ++r) y_par = lmf::upsample2_forward(x);
        c.parallel_s = seconds_since(t0) / reps;
        t0 = Clock::now();
        for (int r = 0; r < reps; ++r) y_ser = lmf::ref::upsample2_forward(x);
        c.serial_s = seconds_since(t0) / reps;
        c.match = matches(y_par, y_ser);
        all_match &= c.match;
        report(c);
    }

    std::printf("threads: %d\n", lmf::max_threads());
    if (!all_match) {
        std::fprintf(stderr, "kernel outputs diverged from the serial reference\n");
        return 1;
    }
    return 0;
}
