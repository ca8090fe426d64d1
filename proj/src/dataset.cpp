#include <algorithm>
#include <cmath>
#include <filesystem>

#include "lmf/dataset.hpp"

namespace lmf {

Tensor resize_bilinear(const Tensor& src, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0)
        throw ShapeError("resize_bilinear: bad target " + std::to_string(out_h) + "x" +
                         std::to_string(out_w));
    if (src.h == out_h && src.w == out_w) return src;
    Tensor out(src.n, src.c, out_h, out_w);
    const double sy = static_cast<double>(src.h) / out_h;
    const double sx = static_cast<double>(src.w) / out_w;
    for (int b = 0; b < src.n; ++b)
        for (int c = 0; c < src.c; ++c)
            for (int y = 0; y < out_h; ++y) {
                double fy = (y + 0.5) * sy - 0.5;
                fy = std::clamp(fy, 0.0, static_cast<double>(src.h - 1));
                const int y0 = static_cast<int>(fy);
                const int y1 = std::min(y0 + 1, src.h - 1);
                const double wy = fy - y0;
                for (int x = 0; x < out_w; ++x) {
                    double fx = (x + 0.5) * sx - 0.5;
                    fx = std::clamp(fx, 0.0, static_cast<double>(src.w - 1));
                    const int x0 = static_cast<int>(fx);
                    const int x1 = std::min(x0 + 1, src.w - 1);
                    const double wx = fx - x0;
                    out.at(b, c, y, x) =
                        (1 - wy) * ((1 - wx) * src.at(b, c, y0, x0) + wx * src.at(b, c, y0, x1)) +
                        wy * ((1 - wx) * src.at(b, c, y1, x0) + wx * src.at(b, c, y1, x1));
                }
            }
    return out;
}

Tensor to_channels(const Tensor& img, int channels) {
    if (img.c == channels) return img;
    Tensor out(img.n, channels, img.h, img.w);
    if (img.c == 1) {
        for (int b = 0; b < img.n; ++b)
            for (int c = 0; c < channels; ++c)
                for (int y = 0; y < img.h; ++y)
                    for (int x = 0; x < img.w; ++x) out.at(b, c, y, x) = img.at(b, 0, y, x);
        return out;
    }
    if (channels == 1) {
        for (int b = 0; b < img.n; ++b)
            for (int y = 0; y < img.h; ++y)
                for (int x = 0; x < img.w; ++x) {
                    double sum = 0.0;
                    for (int c = 0; c < img.c; ++c) sum += img.at(b, c, y, x);
                    out.at(b, 0, y, x) = sum / img.c;
                }
        return out;
    }
    throw ShapeError("to_channels: cannot map " + std::to_string(img.c) + " channels to " +
                     std::to_string(channels));
}

std::vector<SodSample> load_sod_dataset(const std::string& image_dir, const std::string& mask_dir,
                                        int h, int w, int channels,
                                        std::vector<std::string>* warnings) {
    SodPairing pairing = pair_sod_dataset(image_dir, mask_dir);
    if (warnings) *warnings = pairing.warnings;
    std::vector<SodSample> out;
    out.reserve(pairing.pairs.size());
    for (const auto& [img_path, mask_path] : pairing.pairs) {
        SodSample s;
        s.stem = std::filesystem::path(img_path).stem().string();
        s.image = resize_bilinear(to_channels(load_image(img_path).pixels, channels), h, w);
        bool soft = false;
        Tensor mask = load_mask(mask_path, &soft);
        if (soft && warnings)
            warnings->push_back("mask binarized at 0.5: " + mask_path);
        mask = resize_bilinear(mask, h, w);
        for (double& v : mask.data) v = v >= 0.5 ? 1.0 : 0.0;
        s.mask = std::move(mask);
        out.push_back(std::move(s));
    }
    return out;
}

Tensor stack_batch(const std::vector<const Tensor*>& items) {
    if (items.empty()) throw ShapeError("stack_batch: empty batch");
    const Tensor& first = *items[0];
    for (const Tensor* t : items)
        if (t->n != 1 || t->c != first.c || t->h != first.h || t->w != first.w)
            throw ShapeError("stack_batch: shape mismatch " + t->shape_str() + " vs " +
                             first.shape_str());
    Tensor out(static_cast<int>(items.size()), first.c, first.h, first.w);
    const std::size_t per = first.size();
    for (std::size_t i = 0; i < items.size(); ++i)
        std::copy(items[i]->data.begin(), items[i]->data.end(), out.data.begin() + i * per);
    return out;
}

}  // namespace lmf
