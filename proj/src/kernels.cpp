#include "lmf/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lmf {

namespace {
int g_max_threads = 0;
}

void set_max_threads(int count) {
    g_max_threads = count;
#ifdef _OPENMP
    if (count > 0) omp_set_num_threads(count);
#endif
}

int max_threads() { return g_max_threads; }

static void check_depthwise(const Tensor& x, const ParamTensor& w, const ConvGeometry& g) {
    if (w.value.c != 1 || w.value.h != g.kernel || w.value.w != g.kernel)
        throw ShapeError("depthwise: weight shape " + w.value.shape_str() +
                         " does not match geometry k=" + std::to_string(g.kernel));
    if (w.value.n != x.c)
        throw ShapeError("depthwise: input " + x.shape_str() + " has " + std::to_string(x.c) +
                         " channels but weight " + w.value.shape_str() + " has " +
                         std::to_string(w.value.n) + " filters");
    if (g.kernel % 2 == 0 || g.kernel <= 0)
        throw ShapeError("depthwise: kernel size must be odd positive, got " +
                         std::to_string(g.kernel));
    if (g.dilation <= 0)
        throw ShapeError("depthwise: dilation must be positive, got " +
                         std::to_string(g.dilation));
}

Tensor depthwise_forward(const Tensor& x, const ParamTensor& w, const ConvGeometry& g) {
    check_depthwise(x, w, g);
    const int oh = g.out_extent(x.h), ow = g.out_extent(x.w);
    if (oh <= 0 || ow <= 0)
        throw ShapeError("depthwise: input " + x.shape_str() + " too small for geometry");
    Tensor y(x.n, x.c, oh, ow);
    const int k = g.kernel, d = g.dilation, s = g.stride, p = g.pad;
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < x.n; ++b) {
        for (int ch = 0; ch < x.c; ++ch) {
            const double* wp = &w.value.data[static_cast<std::size_t>(ch) * k * k];
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * s - p + ky * d;
                        if (iy < 0 || iy >= x.h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * s - p + kx * d;
                            if (ix < 0 || ix >= x.w) continue;
                            acc += wp[ky * k + kx] * x.at(b, ch, iy, ix);
                        }
                    }
                    y.at(b, ch, oy, ox) = acc;
                }
            }
        }
    }
    return y;
}

Tensor depthwise_backward_input(const Tensor& gy, const ParamTensor& w, const ConvGeometry& g,
                                int in_h, int in_w) {
    Tensor gx(gy.n, gy.c, in_h, in_w);
    const int k = g.kernel, d = g.dilation, s = g.stride, p = g.pad;
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < gy.n; ++b) {
        for (int ch = 0; ch < gy.c; ++ch) {
            const double* wp = &w.value.data[static_cast<std::size_t>(ch) * k * k];
            for (int oy = 0; oy < gy.h; ++oy) {
                for (int ox = 0; ox < gy.w; ++ox) {
                    const double go = gy.at(b, ch, oy, ox);
                    if (go == 0.0) continue;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * s - p + ky * d;
                        if (iy < 0 || iy >= in_h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * s - p + kx * d;
                            if (ix < 0 || ix >= in_w) continue;
                            gx.at(b, ch, iy, ix) += wp[ky * k + kx] * go;
                        }
                    }
                }
            }
        }
    }
    return gx;
}

void depthwise_backward_weight(const Tensor& x, const Tensor& gy, const ConvGeometry& g,
                               ParamTensor& w) {
    const int k = g.kernel, d = g.dilation, s = g.stride, p = g.pad;
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < x.c; ++ch) {
        double* gwp = &w.grad.data[static_cast<std::size_t>(ch) * k * k];
        for (int b = 0; b < x.n; ++b) {
            for (int oy = 0; oy < gy.h; ++oy) {
                for (int ox = 0; ox < gy.w; ++ox) {
                    const double go = gy.at(b, ch, oy, ox);
                    if (go == 0.0) continue;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * s - p + ky * d;
                        if (iy < 0 || iy >= x.h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * s - p + kx * d;
                            if (ix < 0 || ix >= x.w) continue;
                            gwp[ky * k + kx] += x.at(b, ch, iy, ix) * go;
                        }
                    }
                }
            }
        }
    }
}

Tensor pointwise_forward(const Tensor& x, const ParamTensor& w, const ParamTensor* bias) {
    if (w.value.c != x.c)
        throw ShapeError("pointwise: input " + x.shape_str() + " has " + std::to_string(x.c) +
                         " channels but weight " + w.value.shape_str() + " expects " +
                         std::to_string(w.value.c));
    const int co = w.value.n;
    Tensor y(x.n, co, x.h, x.w);
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < x.n; ++b) {
        for (int o = 0; o < co; ++o) {
            double* yp = &y.data[(static_cast<std::size_t>(b) * co + o) * plane];
            const double b0 = bias ? bias->value.data[o] : 0.0;
            std::fill(yp, yp + plane, b0);
            for (int ci = 0; ci < x.c; ++ci) {
                const double wv = w.value.data[static_cast<std::size_t>(o) * x.c + ci];
                const double* xp = &x.data[(static_cast<std::size_t>(b) * x.c + ci) * plane];
                for (std::size_t i = 0; i < plane; ++i) yp[i] += wv * xp[i];
            }
        }
    }
    return y;
}

Tensor pointwise_backward_input(const Tensor& gy, const ParamTensor& w) {
    const int ci_n = w.value.c, co = w.value.n;
    Tensor gx(gy.n, ci_n, gy.h, gy.w);
    const std::size_t plane = static_cast<std::size_t>(gy.h) * gy.w;
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < gy.n; ++b) {
        for (int ci = 0; ci < ci_n; ++ci) {
            double* gp = &gx.data[(static_cast<std::size_t>(b) * ci_n + ci) * plane];
            for (int o = 0; o < co; ++o) {
                const double wv = w.value.data[static_cast<std::size_t>(o) * ci_n + ci];
                const double* gyp = &gy.data[(static_cast<std::size_t>(b) * co + o) * plane];
                for (std::size_t i = 0; i < plane; ++i) gp[i] += wv * gyp[i];
            }
        }
    }
    return gx;
}

void pointwise_backward_weight(const Tensor& x, const Tensor& gy, ParamTensor& w,
                               ParamTensor* bias) {
    const int co = w.value.n, ci_n = w.value.c;
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
#pragma omp parallel for collapse(2) schedule(static)
    for (int o = 0; o < co; ++o) {
        for (int ci = 0; ci < ci_n; ++ci) {
            double acc = 0.0;
            for (int b = 0; b < x.n; ++b) {
                const double* gyp = &gy.data[(static_cast<std::size_t>(b) * co + o) * plane];
                const double* xp = &x.data[(static_cast<std::size_t>(b) * ci_n + ci) * plane];
                for (std::size_t i = 0; i < plane; ++i) acc += gyp[i] * xp[i];
            }
            w.grad.data[static_cast<std::size_t>(o) * ci_n + ci] += acc;
        }
    }
    if (bias) {
        for (int o = 0; o < co; ++o) {
            double acc = 0.0;
            for (int b = 0; b < x.n; ++b) {
                const double* gyp = &gy.data[(static_cast<std::size_t>(b) * co + o) * plane];
                for (std::size_t i = 0; i < plane; ++i) acc += gyp[i];
            }
            bias->grad.data[o] += acc;
        }
    }
}

Tensor maxpool2_forward(const Tensor& x, PoolCache& cache) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw ShapeError("maxpool2: spatial dims must be even, got " + x.shape_str());
    Tensor y(x.n, x.c, x.h / 2, x.w / 2);
    cache.argmax.assign(y.size(), 0);
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < x.n; ++b) {
        for (int ch = 0; ch < x.c; ++ch) {
            for (int oy = 0; oy < y.h; ++oy) {
                for (int ox = 0; ox < y.w; ++ox) {
                    double best = x.at(b, ch, 2 * oy, 2 * ox);
                    std::size_t best_idx = x.idx(b, ch, 2 * oy, 2 * ox);
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const double v = x.at(b, ch, 2 * oy + dy, 2 * ox + dx);
                            if (v > best) {
                                best = v;
                                best_idx = x.idx(b, ch, 2 * oy + dy, 2 * ox + dx);
                            }
                        }
                    }
                    y.at(b, ch, oy, ox) = best;
                    cache.argmax[y.idx(b, ch, oy, ox)] = static_cast<std::uint32_t>(best_idx);
                }
            }
        }
    }
    return y;
}

Tensor maxpool2_backward(const Tensor& gy, const PoolCache& cache, int in_h, int in_w) {
    Tensor gx(gy.n, gy.c, in_h, in_w);
    for (std::size_t i = 0; i < gy.size(); ++i) gx.data[cache.argmax[i]] += gy.data[i];
    return gx;
}

// Source coordinate convention: sy = (oy + 0.5) / 2 - 0.5, clamped.
struct BilinearTap {
    int lo, hi;
    double w_hi;
};
static inline BilinearTap bilinear_tap(int o, int in_extent) {
    double s = (o + 0.5) * 0.5 - 0.5;
    if (s < 0) s = 0;
    const double limit = in_extent - 1;
    if (s > limit) s = limit;
    BilinearTap t;
    t.lo = static_cast<int>(s);
    t.hi = std::min(t.lo + 1, in_extent - 1);
    t.w_hi = s - t.lo;
    return t;
}

Tensor upsample2_forward(const Tensor& x) {
    if (x.h < 1 || x.w < 1)
        throw ShapeError("upsample2: empty spatial dims " + x.shape_str());
    Tensor y(x.n, x.c, 2 * x.h, 2 * x.w);
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < x.n; ++b) {
        for (int ch = 0; ch < x.c; ++ch) {
            for (int oy = 0; oy < y.h; ++oy) {
                const BilinearTap ty = bilinear_tap(oy, x.h);
                for (int ox = 0; ox < y.w; ++ox) {
                    const BilinearTap tx = bilinear_tap(ox, x.w);
                    const double v00 = x.at(b, ch, ty.lo, tx.lo);
                    const double v01 = x.at(b, ch, ty.lo, tx.hi);
                    const double v10 = x.at(b, ch, ty.hi, tx.lo);
                    const double v11 = x.at(b, ch, ty.hi, tx.hi);
                    y.at(b, ch, oy, ox) = (1 - ty.w_hi) * ((1 - tx.w_hi) * v00 + tx.w_hi * v01) +
                                          ty.w_hi * ((1 - tx.w_hi) * v10 + tx.w_hi * v11);
                }
            }
        }
    }
    return y;
}

Tensor upsample2_backward(const Tensor& gy, int in_h, int in_w) {
    Tensor gx(gy.n, gy.c, in_h, in_w);
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < gy.n; ++b) {
        for (int ch = 0; ch < gy.c; ++ch) {
            for (int oy = 0; oy < gy.h; ++oy) {
                const BilinearTap ty = bilinear_tap(oy, in_h);
                for (int ox = 0; ox < gy.w; ++ox) {
                    const BilinearTap tx = bilinear_tap(ox, in_w);
                    const double go = gy.at(b, ch, oy, ox);
                    gx.at(b, ch, ty.lo, tx.lo) += (1 - ty.w_hi) * (1 - tx.w_hi) * go;
                    gx.at(b, ch, ty.lo, tx.hi) += (1 - ty.w_hi) * tx.w_hi * go;
                    gx.at(b, ch, ty.hi, tx.lo) += ty.w_hi * (1 - tx.w_hi) * go;
                    gx.at(b, ch, ty.hi, tx.hi) += ty.w_hi * tx.w_hi * go;
                }
            }
        }
    }
    return gx;
}

Tensor batchnorm_forward(const Tensor& x, const ParamTensor& gamma, const ParamTensor& beta,
                         BnState& state, bool train, BnCache& cache) {
    if (gamma.value.size() != static_cast<std::size_t>(x.c) ||
        beta.value.size() != static_cast<std::size_t>(x.c))
        throw ShapeError("batchnorm: gamma/beta length must equal channel count " +
                         std::to_string(x.c));
    if (state.running_mean.empty()) {
        state.running_mean.assign(x.c, 0.0);
        state.running_var.assign(x.c, 1.0);
    }
    const std::size_t per_ch = static_cast<std::size_t>(x.n) * x.h * x.w;
    if (train && per_ch <= 1)
        throw ShapeError("batchnorm: train mode needs n*h*w > 1, got input " + x.shape_str());
    Tensor y(x.n, x.c, x.h, x.w);
    cache.mean.assign(x.c, 0.0);
    cache.inv_std.assign(x.c, 0.0);
    if (train) cache.xhat = Tensor(x.n, x.c, x.h, x.w);
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < x.c; ++ch) {
        double mean, var;
        if (train) {
            double sum = 0.0, sq = 0.0;
            for (int b = 0; b < x.n; ++b) {
                const double* xp = &x.data[(static_cast<std::size_t>(b) * x.c + ch) * plane];
                for (std::size_t i = 0; i < plane; ++i) {
                    sum += xp[i];
                    sq += xp[i] * xp[i];
                }
            }
            mean = sum / per_ch;
            var = sq / per_ch - mean * mean;
            if (var < 0) var = 0;
            state.running_mean[ch] =
                (1 - state.momentum) * state.running_mean[ch] + state.momentum * mean;
            state.running_var[ch] =
                (1 - state.momentum) * state.running_var[ch] + state.momentum * var;
        } else {
            mean = state.running_mean[ch];
            var = state.running_var[ch];
        }
        const double inv_std = 1.0 / std::sqrt(var + state.epsilon);
        cache.mean[ch] = mean;
        cache.inv_std[ch] = inv_std;
        const double gm = gamma.value.data[ch], bt = beta.value.data[ch];
        for (int b = 0; b < x.n; ++b) {
            const std::size_t off = (static_cast<std::size_t>(b) * x.c + ch) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const double xh = (x.data[off + i] - mean) * inv_std;
                if (train) cache.xhat.data[off + i] = xh;
                y.data[off + i] = gm * xh + bt;
            }
        }
    }
    return y;
}

Tensor batchnorm_backward(const Tensor& gy, const ParamTensor& gamma, const BnCache& cache,
                          ParamTensor& ggamma, ParamTensor& gbeta, bool train,
                          const BnState& state) {
    (void)state;
    Tensor gx(gy.n, gy.c, gy.h, gy.w);
    const std::size_t plane = static_cast<std::size_t>(gy.h) * gy.w;
    const std::size_t per_ch = static_cast<std::size_t>(gy.n) * plane;
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < gy.c; ++ch) {
        const double gm = gamma.value.data[ch];
        const double inv_std = cache.inv_std[ch];
        if (train) {
            double sum_gy = 0.0, sum_gy_xh = 0.0;
            for (int b = 0; b < gy.n; ++b) {
                const std::size_t off = (static_cast<std::size_t>(b) * gy.c + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    sum_gy += gy.data[off + i];
                    sum_gy_xh += gy.data[off + i] * cache.xhat.data[off + i];
                }
            }
            ggamma.grad.data[ch] += sum_gy_xh;
            gbeta.grad.data[ch] += sum_gy;
            const double m = static_cast<double>(per_ch);
            for (int b = 0; b < gy.n; ++b) {
                const std::size_t off = (static_cast<std::size_t>(b) * gy.c + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double xh = cache.xhat.data[off + i];
                    gx.data[off + i] =
                        gm * inv_std / m * (m * gy.data[off + i] - sum_gy - xh * sum_gy_xh);
                }
            }
        } else {
            // Eval mode: running stats are constants.
            for (int b = 0; b < gy.n; ++b) {
                const std::size_t off = (static_cast<std::size_t>(b) * gy.c + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    gx.data[off + i] = gm * inv_std * gy.data[off + i];
            }
        }
    }
    return gx;
}

Tensor activation_forward(const Tensor& x, Activation kind) {
    Tensor y(x.n, x.c, x.h, x.w);
    const std::size_t sz = x.size();
    if (kind == Activation::Relu) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(sz); ++i)
            y.data[i] = x.data[i] > 0 ? x.data[i] : 0.0;
    } else {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(sz); ++i)
            y.data[i] = 1.0 / (1.0 + std::exp(-x.data[i]));
    }
    return y;
}

Tensor activation_backward(const Tensor& gy, const Tensor& y, Activation kind) {
    Tensor gx(gy.n, gy.c, gy.h, gy.w);
    const std::size_t sz = gy.size();
    if (kind == Activation::Relu) {
        for (std::size_t i = 0; i < sz; ++i) gx.data[i] = y.data[i] > 0 ? gy.data[i] : 0.0;
    } else {
        for (std::size_t i = 0; i < sz; ++i) gx.data[i] = gy.data[i] * y.data[i] * (1.0 - y.data[i]);
    }
    return gx;
}

Tensor concat_channels(const std::vector<const Tensor*>& xs) {
    if (xs.empty()) throw ShapeError("concat_channels: empty input list");
    int total_c = 0;
    for (const Tensor* t : xs) {
        if (t->n != xs[0]->n || t->h != xs[0]->h || t->w != xs[0]->w) {
            std::string shapes;
            for (const Tensor* u : xs) shapes += u->shape_str() + " ";
            throw ShapeError("concat_channels: spatial/batch mismatch among inputs: " + shapes);
        }
        total_c += t->c;
    }
    Tensor y(xs[0]->n, total_c, xs[0]->h, xs[0]->w);
    const std::size_t plane = static_cast<std::size_t>(y.h) * y.w;
    for (int b = 0; b < y.n; ++b) {
        int c_off = 0;
        for (const Tensor* t : xs) {
            std::copy_n(&t->data[static_cast<std::size_t>(b) * t->c * plane],
                        static_cast<std::size_t>(t->c) * plane,
                        &y.data[(static_cast<std::size_t>(b) * total_c + c_off) * plane]);
            c_off += t->c;
        }
    }
    return y;
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
    std::vector<const Tensor*> ptrs;
    ptrs.reserve(xs.size());
    for (const Tensor& t : xs) ptrs.push_back(&t);
    return concat_channels(ptrs);
}

std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int>& channel_counts) {
    int total = 0;
    for (int c : channel_counts) total += c;
    if (total != x.c)
        throw ShapeError("split_channels: counts sum to " + std::to_string(total) +
                         " but input has " + std::to_string(x.c) + " channels");
    std::vector<Tensor> out;
    out.reserve(channel_counts.size());
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
    int c_off = 0;
    for (int cc : channel_counts) {
        Tensor t(x.n, cc, x.h, x.w);
        for (int b = 0; b < x.n; ++b)
            std::copy_n(&x.data[(static_cast<std::size_t>(b) * x.c + c_off) * plane],
                        static_cast<std::size_t>(cc) * plane,
                        &t.data[static_cast<std::size_t>(b) * cc * plane]);
        c_off += cc;
        out.push_back(std::move(t));
    }
    return out;
}

Tensor fc_forward(const Tensor& x, const ParamTensor& w, const ParamTensor& bias) {
    const int in = x.c * x.h * x.w;
    if (w.value.c != in)
        throw ShapeError("fc: input " + x.shape_str() + " flattens to " + std::to_string(in) +
                         " features but weight " + w.value.shape_str() + " expects " +
                         std::to_string(w.value.c));
    const int out = w.value.n;
    Tensor y(x.n, out, 1, 1);
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < x.n; ++b) {
        for (int o = 0; o < out; ++o) {
            double acc = bias.value.data[o];
            const double* xp = &x.data[static_cast<std::size_t>(b) * in];
            const double* wp = &w.value.data[static_cast<std::size_t>(o) * in];
            for (int i = 0; i < in; ++i) acc += wp[i] * xp[i];
            y.at(b, o, 0, 0) = acc;
        }
    }
    return y;
}

Tensor fc_backward(const Tensor& gy, const Tensor& x, const ParamTensor& w,
                   ParamTensor& gw, ParamTensor& gbias) {
    const int in = x.c * x.h * x.w;
    const int out = w.value.n;
    Tensor gx(x.n, x.c, x.h, x.w);
    for (int b = 0; b < x.n; ++b) {
        for (int o = 0; o < out; ++o) {
            const double go = gy.at(b, o, 0, 0);
            gbias.grad.data[o] += go;
            const double* xp = &x.data[static_cast<std::size_t>(b) * in];
            const double* wp = &w.value.data[static_cast<std::size_t>(o) * in];
            double* gxp = &gx.data[static_cast<std::size_t>(b) * in];
            double* gwp = &gw.grad.data[static_cast<std::size_t>(o) * in];
            for (int i = 0; i < in; ++i) {
                gxp[i] += wp[i] * go;
                gwp[i] += xp[i] * go;
            }
        }
    }
    return gx;
}

Tensor gap_forward(const Tensor& x) {
    Tensor y(x.n, x.c, 1, 1);
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
    for (int b = 0; b < x.n; ++b) {
        for (int ch = 0; ch < x.c; ++ch) {
            const double* xp = &x.data[(static_cast<std::size_t>(b) * x.c + ch) * plane];
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += xp[i];
            y.at(b, ch, 0, 0) = acc / static_cast<double>(plane);
        }
    }
    return y;
}

Tensor gap_backward(const Tensor& gy, int in_h, int in_w) {
    Tensor gx(gy.n, gy.c, in_h, in_w);
    const std::size_t plane = static_cast<std::size_t>(in_h) * in_w;
    for (int b = 0; b < gy.n; ++b) {
        for (int ch = 0; ch < gy.c; ++ch) {
            const double g = gy.at(b, ch, 0, 0) / static_cast<double>(plane);
            double* gxp = &gx.data[(static_cast<std::size_t>(b) * gy.c + ch) * plane];
            for (std::size_t i = 0; i < plane; ++i) gxp[i] = g;
        }
    }
    return gx;
}

bool all_finite(const Tensor& x) {
    for (double v : x.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace lmf
