#pragma once

#include "lmf/rng.hpp"
#include "lmf/tensor.hpp"

namespace lmf {

struct AugmentConfig {
    double hflip_prob = 0.5;
    double brightness_delta = 0.2;    // additive shift drawn from [-delta, delta]
    double contrast_min = 0.8;        // multiplicative around 0.5
    double contrast_max = 1.25;
    double crop_min = 0.8;            // crop side as a fraction of the original
    double crop_max = 1.0;
    bool enabled = true;
};

struct AugmentedPair {
    Tensor image;
    Tensor mask;
};

// Geometric transforms (flip, crop+resize) apply to image and mask alike;
// photometric ones (brightness, contrast) touch only the image. The mask is
// re-binarized after resampling. Output shapes equal input shapes.
AugmentedPair augment_sod(const Tensor& image, const Tensor& mask, const AugmentConfig& cfg,
                          Rng& rng);

// Classifier path: flip + photometric only (32x32 inputs are left uncropped).
Tensor augment_image(const Tensor& image, const AugmentConfig& cfg, Rng& rng);

}  // namespace lmf
