#include "lmf/reference.hpp"

#include <algorithm>

namespace lmf::ref {

Tensor depthwise_forward(const Tensor& x, const Tensor& w, int kernel, int dilation,
                         int stride, int pad) {
    const int oh = (x.h + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1;
    const int ow = (x.w + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1;
    Tensor y(x.n, x.c, oh, ow);
    for (int b = 0; b < x.n; ++b)
        for (int ch = 0; ch < x.c; ++ch)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (int ky = 0; ky < kernel; ++ky)
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int iy = oy * stride - pad + ky * dilation;
                            const int ix = ox * stride - pad + kx * dilation;
                            if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                            acc += w.at(ch, 0, ky, kx) * x.at(b, ch, iy, ix);
                        }
                    y.at(b, ch, oy, ox) = acc;
                }
    return y;
}

Tensor pointwise_forward(const Tensor& x, const Tensor& w, const Tensor* bias) {
    Tensor y(x.n, w.n, x.h, x.w);
    for (int b = 0; b < x.n; ++b)
        for (int o = 0; o < w.n; ++o)
            for (int yi = 0; yi < x.h; ++yi)
                for (int xi = 0; xi < x.w; ++xi) {
                    double acc = bias ? bias->data[o] : 0.0;
                    for (int ci = 0; ci < x.c; ++ci)
                        acc += w.at(o, ci, 0, 0) * x.at(b, ci, yi, xi);
                    y.at(b, o, yi, xi) = acc;
                }
    return y;
}

Tensor maxpool2_forward(const Tensor& x) {
    Tensor y(x.n, x.c, x.h / 2, x.w / 2);
    for (int b = 0; b < x.n; ++b)
        for (int ch = 0; ch < x.c; ++ch)
            for (int oy = 0; oy < y.h; ++oy)
                for (int ox = 0; ox < y.w; ++ox) {
                    double best = x.at(b, ch, 2 * oy, 2 * ox);
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx)
                            best = std::max(best, x.at(b, ch, 2 * oy + dy, 2 * ox + dx));
                    y.at(b, ch, oy, ox) = best;
                }
    return y;
}

Tensor upsample2_forward(const Tensor& x) {
    Tensor y(x.n, x.c, 2 * x.h, 2 * x.w);
    for (int b = 0; b < x.n; ++b)
        for (int ch = 0; ch < x.c; ++ch)
            for (int oy = 0; oy < y.h; ++oy)
                for (int ox = 0; ox < y.w; ++ox) {
                    double sy = (oy + 0.5) * 0.5 - 0.5;
                    double sx = (ox + 0.5) * 0.5 - 0.5;
                    sy = std::clamp(sy, 0.0, static_cast<double>(x.h - 1));
                    sx = std::clamp(sx, 0.0, static_cast<double>(x.w - 1));
                    const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
                    const int y1 = std::min(y0 + 1, x.h - 1), x1 = std::min(x0 + 1, x.w - 1);
                    const double fy = sy - y0, fx = sx - x0;
                    y.at(b, ch, oy, ox) =
                        (1 - fy) * ((1 - fx) * x.at(b, ch, y0, x0) + fx * x.at(b, ch, y0, x1)) +
                        fy * ((1 - fx) * x.at(b, ch, y1, x0) + fx * x.at(b, ch, y1, x1));
                }
    return y;
}

}  // namespace lmf::ref
