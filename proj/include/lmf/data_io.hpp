#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lmf/tensor.hpp"

namespace lmf {

// ---- PGM (P5) / PPM (P6) ----------------------------------------------------

struct ImageRecord {
    Tensor pixels;  // (1, c, h, w), values in [0,1]
    std::string source;
    int maxval = 255;
};

ImageRecord load_image(const std::string& path);
ImageRecord decode_image(const std::vector<std::uint8_t>& bytes, const std::string& source);
// Quantizes round-half-up to 8 bits; writes P5 for 1 channel, P6 for 3.
void save_image(const Tensor& pixels, const std::string& path);
std::vector<std::uint8_t> encode_image(const Tensor& pixels);

// ---- CIFAR binary ------------------------------------------------------------

struct CifarRecord {
    int label = 0;
    Tensor image;  // (1, 3, 32, 32) in [0,1]
};

std::vector<CifarRecord> load_cifar(const std::string& path, int num_classes);
std::vector<CifarRecord> decode_cifar(const std::vector<std::uint8_t>& bytes, int num_classes,
                                      const std::string& source);
// Re-serializes records in the official layout (coarse label written equal to
// fine for CIFAR-100 fixtures generated by this codebase).
std::vector<std::uint8_t> encode_cifar(const std::vector<CifarRecord>& records, int num_classes);

// ---- LMFT tensor container ---------------------------------------------------

// magic "LMFT", version u16, dtype u8 (0=f32, 1=f64), rank u8, dims u32 LE,
// then raw little-endian values.
constexpr std::uint16_t kLmftVersion = 1;

std::vector<std::uint8_t> lmft_encode(const Tensor& t, bool f64 = true);
Tensor lmft_decode(const std::uint8_t* data, std::size_t size, std::size_t* consumed = nullptr);
void lmft_save(const Tensor& t, const std::string& path);
Tensor lmft_load(const std::string& path);

// ---- SOD dataset pairing -----------------------------------------------------

struct SodPairing {
    std::vector<std::pair<std::string, std::string>> pairs;  // (image path, mask path)
    std::vector<std::string> warnings;                       // unmatched stems
};

SodPairing pair_sod_dataset(const std::string& image_dir, const std::string& mask_dir);

// Loads a mask and binarizes at 0.5; sets *had_soft_pixels when any value was
// neither 0 nor the maximum.
Tensor load_mask(const std::string& path, bool* had_soft_pixels = nullptr);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace lmf
