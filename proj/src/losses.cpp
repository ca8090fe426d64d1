#include "lmf/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lmf {

static void check_pair(const Tensor& S, const Tensor& G, const char* who) {
    if (!S.same_shape(G))
        throw ShapeError(std::string(who) + ": shape mismatch " + S.shape_str() + " vs " +
                         G.shape_str());
}

static void check_binary(const Tensor& G, const char* who) {
    for (double v : G.data)
        if (v != 0.0 && v != 1.0)
            throw ShapeError(std::string(who) + ": ground truth must be binary, found value " +
                             std::to_string(v));
}

LossResult bce_loss(const Tensor& S, const Tensor& G) {
    check_pair(S, G, "bce_loss");
    check_binary(G, "bce_loss");
    constexpr double kClamp = 1e-7;
    const std::size_t count = S.size();
    LossResult r;
    r.grad = Tensor(S.n, S.c, S.h, S.w);
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double s = std::clamp(S.data[i], kClamp, 1.0 - kClamp);
        const double g = G.data[i];
        total += -(g * std::log(s) + (1.0 - g) * std::log(1.0 - s));
        // Clamp derivative is zero outside the interior.
        if (S.data[i] > kClamp && S.data[i] < 1.0 - kClamp)
            r.grad.data[i] = (s - g) / (s * (1.0 - s)) / static_cast<double>(count);
    }
    r.value = total / static_cast<double>(count);
    return r;
}

LossResult iou_loss(const Tensor& S, const Tensor& G) {
    check_pair(S, G, "iou_loss");
    check_binary(G, "iou_loss");
    LossResult r;
    r.grad = Tensor(S.n, S.c, S.h, S.w);
    const std::size_t per_img = S.size() / std::max(1, S.n);
    double total = 0.0;
    for (int b = 0; b < S.n; ++b) {
        const std::size_t off = static_cast<std::size_t>(b) * per_img;
        double inter = 0.0, uni = 0.0;
        for (std::size_t i = 0; i < per_img; ++i) {
            const double s = S.data[off + i], g = G.data[off + i];
            inter += s * g;
            uni += s + g - s * g;
        }
        if (uni == 0.0) continue;  // empty prediction on empty mask: loss 0
        total += 1.0 - inter / uni;
        const double inv_u2 = 1.0 / (uni * uni);
        for (std::size_t i = 0; i < per_img; ++i) {
            const double g = G.data[off + i];
            r.grad.data[off + i] = -(g * uni - inter * (1.0 - g)) * inv_u2 / S.n;
        }
    }
    r.value = total / std::max(1, S.n);
    return r;
}

namespace {

constexpr int kWin = 11;
constexpr int kHalf = kWin / 2;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& gauss_kernel() {
    static const std::vector<double> k = [] {
        std::vector<double> v(kWin);
        const double sigma = 1.5;
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            const double x = i - kHalf;
            v[i] = std::exp(-x * x / (2.0 * sigma * sigma));
            sum += v[i];
        }
        for (double& x : v) x /= sum;
        return v;
    }();
    return k;
}

}  // namespace

LossResult ssim_loss(const Tensor& S, const Tensor& G) {
    check_pair(S, G, "ssim_loss");
    if (S.c != 1) throw ShapeError("ssim_loss: expects single-channel maps, got " + S.shape_str());
    const auto& gk = gauss_kernel();
    LossResult r;
    r.grad = Tensor(S.n, S.c, S.h, S.w);
    const std::size_t per_img = static_cast<std::size_t>(S.h) * S.w;
    double total = 0.0;
    for (int b = 0; b < S.n; ++b) {
        const double* sp = &S.data[static_cast<std::size_t>(b) * per_img];
        const double* gp = &G.data[static_cast<std::size_t>(b) * per_img];
        double* dgp = &r.grad.data[static_cast<std::size_t>(b) * per_img];
        double ssim_sum = 0.0;
        const double scale = 1.0 / (static_cast<double>(S.n) * per_img);
        for (int cy = 0; cy < S.h; ++cy) {
            const int y0 = std::max(0, cy - kHalf), y1 = std::min(S.h - 1, cy + kHalf);
            for (int cx = 0; cx < S.w; ++cx) {
                const int x0 = std::max(0, cx - kHalf), x1 = std::min(S.w - 1, cx + kHalf);
                double wsum = 0.0, mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
                for (int y = y0; y <= y1; ++y)
                    for (int x = x0; x <= x1; ++x) {
                        const double w = gk[y - cy + kHalf] * gk[x - cx + kHalf];
                        const double xv = sp[y * S.w + x], yv = gp[y * S.w + x];
                        wsum += w;
                        mx += w * xv;
                        my += w * yv;
                        sxx += w * xv * xv;
                        syy += w * yv * yv;
                        sxy += w * xv * yv;
                    }
                mx /= wsum;
                my /= wsum;
                sxx = sxx / wsum - mx * mx;
                syy = syy / wsum - my * my;
                sxy = sxy / wsum - mx * my;
                const double a1 = 2 * mx * my + kC1, a2 = 2 * sxy + kC2;
                const double b1 = mx * mx + my * my + kC1, b2 = sxx + syy + kC2;
                const double den = b1 * b2;
                ssim_sum += (a1 * a2) / den;
                // Analytic gradient through the windowed statistics.
                const double f = a1 * a2;
                const double inv_den = 1.0 / den;
                for (int y = y0; y <= y1; ++y)
                    for (int x = x0; x <= x1; ++x) {
                        const double w = gk[y - cy + kHalf] * gk[x - cx + kHalf] / wsum;
                        const double xv = sp[y * S.w + x], yv = gp[y * S.w + x];
                        const double dA1 = 2 * my * w;
                        const double dA2 = 2 * w * (yv - my);
                        const double dB1 = 2 * mx * w;
                        const double dB2 = 2 * w * (xv - mx);
                        const double dF = a2 * dA1 + a1 * dA2;
                        const double dD = b2 * dB1 + b1 * dB2;
                        const double dS = (dF * den - f * dD) * inv_den * inv_den;
                        dgp[y * S.w + x] -= dS * scale;  // loss = 1 - mean SSIM
                    }
            }
        }
        total += 1.0 - ssim_sum / static_cast<double>(per_img);
    }
    r.value = total / std::max(1, S.n);
    return r;
}

HybridResult hybrid_loss(const Tensor& S, const Tensor& G, LossSelection sel) {
    HybridResult h;
    h.grad = Tensor(S.n, S.c, S.h, S.w);
    auto add = [&](const LossResult& r) {
        for (std::size_t i = 0; i < h.grad.size(); ++i) h.grad.data[i] += r.grad.data[i];
        h.total += r.value;
    };
    if (sel.bce) {
        LossResult r = bce_loss(S, G);
        h.bce = r.value;
        add(r);
    }
    if (sel.ssim) {
        LossResult r = ssim_loss(S, G);
        h.ssim = r.value;
        add(r);
    }
    if (sel.iou) {
        LossResult r = iou_loss(S, G);
        h.iou = r.value;
        add(r);
    }
    return h;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != logits.n)
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(logits.n));
    const int classes = logits.c;
    LossResult r;
    r.grad = Tensor(logits.n, classes, 1, 1);
    double total = 0.0;
    for (int b = 0; b < logits.n; ++b) {
        if (labels[b] < 0 || labels[b] >= classes)
            throw ConfigError("softmax_cross_entropy: label " + std::to_string(labels[b]) +
                              " out of range for " + std::to_string(classes) + " classes");
        const double* lp = &logits.data[static_cast<std::size_t>(b) * classes];
        const double mx = *std::max_element(lp, lp + classes);
        double denom = 0.0;
        for (int c = 0; c < classes; ++c) denom += std::exp(lp[c] - mx);
        total += -(lp[labels[b]] - mx - std::log(denom));
        for (int c = 0; c < classes; ++c) {
            const double p = std::exp(lp[c] - mx) / denom;
            r.grad.data[static_cast<std::size_t>(b) * classes + c] =
                (p - (c == labels[b] ? 1.0 : 0.0)) / logits.n;
        }
    }
    r.value = total / std::max(1, logits.n);
    return r;
}

}  // namespace lmf
