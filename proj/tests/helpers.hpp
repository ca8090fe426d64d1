#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "lmf/data_io.hpp"
#include "lmf/rng.hpp"
#include "lmf/tensor.hpp"

namespace testutil {

inline lmf::Tensor random_tensor(int n, int c, int h, int w, lmf::Rng& rng, double lo = -1.0,
                                 double hi = 1.0) {
    lmf::Tensor t(n, c, h, w);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

inline double max_abs_diff(const lmf::Tensor& a, const lmf::Tensor& b) {
    if (!a.same_shape(b)) return 1e30;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

// Scratch directory unique to the calling test binary.
inline std::filesystem::path scratch_dir(const std::string& label) {
    auto dir = std::filesystem::temp_directory_path() / ("lmf_test_" + label);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// 8-image synthetic saliency fixture: bright ellipse on a dark noisy
// background, mask = ellipse support.
struct SodFixture {
    std::vector<lmf::Tensor> images;  // (1,3,hw,hw)
    std::vector<lmf::Tensor> masks;   // (1,1,hw,hw) binary
};

inline SodFixture make_sod_fixture(int count, int hw, std::uint64_t seed) {
    SodFixture fx;
    lmf::Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        lmf::Tensor img(1, 3, hw, hw), mask(1, 1, hw, hw);
        for (double& v : img.data) v = 0.15 + 0.1 * rng.uniform();
        const int cy = hw / 5 + static_cast<int>(rng.below(3 * hw / 5));
        const int cx = hw / 5 + static_cast<int>(rng.below(3 * hw / 5));
        const int ry = hw / 10 + static_cast<int>(rng.below(hw / 6));
        const int rx = hw / 10 + static_cast<int>(rng.below(hw / 6));
        for (int y = 0; y < hw; ++y)
            for (int x = 0; x < hw; ++x) {
                const double dy = (y - cy) / static_cast<double>(ry);
                const double dx = (x - cx) / static_cast<double>(rx);
                if (dy * dy + dx * dx <= 1.0) {
                    mask.at(0, 0, y, x) = 1.0;
                    for (int c = 0; c < 3; ++c)
                        img.at(0, c, y, x) = 0.7 + 0.2 * rng.uniform() * (c == i % 3);
                }
            }
        fx.images.push_back(std::move(img));
        fx.masks.push_back(std::move(mask));
    }
    return fx;
}

inline void write_sod_fixture(const SodFixture& fx, const std::filesystem::path& root) {
    std::filesystem::create_directories(root / "images");
    std::filesystem::create_directories(root / "masks");
    for (std::size_t i = 0; i < fx.images.size(); ++i) {
        const std::string stem = "s" + std::to_string(i);
        lmf::save_image(fx.images[i], (root / "images" / (stem + ".ppm")).string());
        lmf::save_image(fx.masks[i], (root / "masks" / (stem + ".pgm")).string());
    }
}

// Synthetic 10-class image set in the CIFAR binary layout: each class is an
// oriented color grating plus noise.
inline lmf::CifarRecord make_grating_record(int label, lmf::Rng& rng) {
    lmf::CifarRecord r;
    r.label = label;
    r.image = lmf::Tensor(1, 3, 32, 32);
    const double th = label * 0.31415926535;
    const double freq = 0.25 + 0.06 * label;
    const double phase = rng.uniform(0.0, 6.28);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const double u = std::cos(th) * x + std::sin(th) * y;
            const double base = 0.5 + 0.35 * std::sin(freq * u + phase);
            for (int c = 0; c < 3; ++c) {
                double v = base * (0.5 + 0.5 * ((label + c) % 3) / 2.0) + 0.25 * rng.uniform();
                r.image.at(0, c, y, x) = v < 0 ? 0 : (v > 1 ? 1 : v);
            }
        }
    return r;
}

inline std::vector<lmf::CifarRecord> make_grating_set(int count, std::uint64_t seed) {
    lmf::Rng rng(seed);
    std::vector<lmf::CifarRecord> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(make_grating_record(i % 10, rng));
    return out;
}

}  // namespace testutil
