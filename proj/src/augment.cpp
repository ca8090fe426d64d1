#include <algorithm>
#include <cmath>

#include "lmf/augment.hpp"
#include "lmf/dataset.hpp"

namespace lmf {

namespace {

Tensor hflip(const Tensor& t) {
    Tensor out(t.n, t.c, t.h, t.w);
    for (int b = 0; b < t.n; ++b)
        for (int c = 0; c < t.c; ++c)
            for (int y = 0; y < t.h; ++y)
                for (int x = 0; x < t.w; ++x) out.at(b, c, y, x) = t.at(b, c, y, t.w - 1 - x);
    return out;
}

Tensor crop(const Tensor& t, int y0, int x0, int ch, int cw) {
    Tensor out(t.n, t.c, ch, cw);
    for (int b = 0; b < t.n; ++b)
        for (int c = 0; c < t.c; ++c)
            for (int y = 0; y < ch; ++y)
                for (int x = 0; x < cw; ++x) out.at(b, c, y, x) = t.at(b, c, y0 + y, x0 + x);
    return out;
}

void photometric(Tensor& img, const AugmentConfig& cfg, Rng& rng) {
    const double bright = rng.uniform(-cfg.brightness_delta, cfg.brightness_delta);
    const double contrast = rng.uniform(cfg.contrast_min, cfg.contrast_max);
    for (double& v : img.data) v = std::clamp((v - 0.5) * contrast + 0.5 + bright, 0.0, 1.0);
}

}  // namespace

AugmentedPair augment_sod(const Tensor& image, const Tensor& mask, const AugmentConfig& cfg,
                          Rng& rng) {
    if (image.h != mask.h || image.w != mask.w)
        throw ShapeError("augment_sod: image " + image.shape_str() + " vs mask " +
                         mask.shape_str());
    AugmentedPair out{image, mask};
    if (!cfg.enabled) return out;
    if (rng.bernoulli(cfg.hflip_prob)) {
        out.image = hflip(out.image);
        out.mask = hflip(out.mask);
    }
    const double frac = rng.uniform(cfg.crop_min, cfg.crop_max);
    const int ch = std::max(1, static_cast<int>(std::lround(image.h * frac)));
    const int cw = std::max(1, static_cast<int>(std::lround(image.w * frac)));
    if (ch < image.h || cw < image.w) {
        const int y0 = static_cast<int>(rng.below(image.h - ch + 1));
        const int x0 = static_cast<int>(rng.below(image.w - cw + 1));
        out.image = resize_bilinear(crop(out.image, y0, x0, ch, cw), image.h, image.w);
        out.mask = resize_bilinear(crop(out.mask, y0, x0, ch, cw), image.h, image.w);
        for (double& v : out.mask.data) v = v >= 0.5 ? 1.0 : 0.0;
    }
    photometric(out.image, cfg, rng);
    return out;
}

Tensor augment_image(const Tensor& image, const AugmentConfig& cfg, Rng& rng) {
    Tensor out = image;
    if (!cfg.enabled) return out;
    if (rng.bernoulli(cfg.hflip_prob)) out = hflip(out);
    photometric(out, cfg, rng);
    return out;
}

}  // namespace lmf
