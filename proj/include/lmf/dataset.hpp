#pragma once

#include <string>
#include <vector>

#include "lmf/data_io.hpp"
#include "lmf/tensor.hpp"

namespace lmf {

// General bilinear resize, align-corners=false (matches upsample2 for 2x).
Tensor resize_bilinear(const Tensor& src, int out_h, int out_w);

// Replicates a grayscale image to `channels`, or averages down to 1.
Tensor to_channels(const Tensor& img, int channels);

struct SodSample {
    Tensor image;  // (1, channels, h, w)
    Tensor mask;   // (1, 1, h, w), binary
    std::string stem;
};

// Loads every matched image/mask pair, converts the image to `channels`
// channels, resizes both to (h, w), and re-binarizes the resized mask at 0.5.
std::vector<SodSample> load_sod_dataset(const std::string& image_dir, const std::string& mask_dir,
                                        int h, int w, int channels,
                                        std::vector<std::string>* warnings = nullptr);

// Stacks same-shaped (1, c, h, w) tensors along the batch dimension.
Tensor stack_batch(const std::vector<const Tensor*>& items);

}  // namespace lmf
