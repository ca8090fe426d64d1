#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmf {

// Errors carrying shape information; the CLI maps these to exit codes.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values detected during a numeric pass (loss, gradients, params).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense NCHW tensor, row-major, double storage. The optional grad buffer
// shares the shape of data.
class Tensor {
  public:
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;
    std::vector<double> grad;  // empty or same size as data

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, double fill = 0.0)
        : n(n_), c(c_), h(h_), w(w_) {
        if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0)
            throw ShapeError("Tensor: negative dimension in shape " + shape_str(n_, c_, h_, w_));
        data.assign(size(), fill);
    }

    std::size_t size() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }

    double& at(int bi, int ci, int yi, int xi) {
        return data[idx(bi, ci, yi, xi)];
    }
    double at(int bi, int ci, int yi, int xi) const {
        return data[idx(bi, ci, yi, xi)];
    }
    double& gat(int bi, int ci, int yi, int xi) {
        return grad[idx(bi, ci, yi, xi)];
    }

    std::size_t idx(int bi, int ci, int yi, int xi) const {
        return ((static_cast<std::size_t>(bi) * c + ci) * h + yi) * w + xi;
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    }

    std::string shape_str() const { return shape_str(n, c, h, w); }

    static std::string shape_str(int n, int c, int h, int w) {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

enum class ParamRole : std::uint8_t {
    DepthwiseWeight,
    PointwiseWeight,
    BnGamma,
    BnBeta,
    FcWeight,
    FcBias,
};

// Trainable parameter: value plus an always-present gradient buffer.
struct ParamTensor {
    Tensor value;
    Tensor grad;
    ParamRole role = ParamRole::DepthwiseWeight;

    ParamTensor() = default;
    ParamTensor(Tensor v, ParamRole r)
        : value(std::move(v)), role(r) {
        grad = Tensor(value.n, value.c, value.h, value.w);
    }

    std::size_t size() const { return value.size(); }
    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

// Geometry of one 2-D convolution. "Same" padding for stride 1 is
// p = d*(k-1)/2, which keeps output resolution equal to input resolution.
struct ConvGeometry {
    int kernel = 3;
    int dilation = 1;
    int stride = 1;
    int pad = 0;

    static ConvGeometry same(int kernel, int dilation) {
        if (kernel <= 0 || kernel % 2 == 0)
            throw ShapeError("ConvGeometry: kernel size must be odd positive, got " +
                             std::to_string(kernel));
        if (dilation <= 0)
            throw ShapeError("ConvGeometry: dilation must be positive, got " +
                             std::to_string(dilation));
        return ConvGeometry{kernel, dilation, 1, dilation * (kernel - 1) / 2};
    }

    int out_extent(int in) const {
        return (in + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1;
    }
};

class Rng;
void init_uniform_fan_in(Tensor& t, int fan_in, Rng& rng);

}  // namespace lmf
