#include <cstring>

#include "lmf/data_io.hpp"

// LMFT tensor container: magic "LMFT", version u16 LE, dtype u8 (0 = f32,
// 1 = f64), rank u8, `rank` dims as u32 LE, then the values little-endian in
// row-major order.

namespace lmf {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

template <typename T>
void put_value(std::vector<std::uint8_t>& out, T v) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

template <typename T>
T get_value(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    T v;
    std::memcpy(&v, &bits, sizeof(T));
    return v;
}

}  // namespace

std::vector<std::uint8_t> lmft_encode(const Tensor& t, bool f64) {
    std::vector<std::uint8_t> out = {'L', 'M', 'F', 'T'};
    put_u16(out, kLmftVersion);
    out.push_back(f64 ? 1 : 0);
    out.push_back(4);  // rank: tensors are always stored NCHW
    put_u32(out, static_cast<std::uint32_t>(t.n));
    put_u32(out, static_cast<std::uint32_t>(t.c));
    put_u32(out, static_cast<std::uint32_t>(t.h));
    put_u32(out, static_cast<std::uint32_t>(t.w));
    out.reserve(out.size() + t.size() * (f64 ? 8 : 4));
    for (double v : t.data) {
        if (f64)
            put_value(out, v);
        else
            put_value(out, static_cast<float>(v));
    }
    return out;
}

Tensor lmft_decode(const std::uint8_t* data, std::size_t size, std::size_t* consumed) {
    if (size < 8) throw IoError("LMFT: truncated header");
    if (std::memcmp(data, "LMFT", 4) != 0) throw IoError("LMFT: bad magic");
    const std::uint16_t version = static_cast<std::uint16_t>(data[4] | (data[5] << 8));
    if (version != kLmftVersion)
        throw IoError("LMFT: unsupported version " + std::to_string(version));
    const std::uint8_t dtype = data[6];
    if (dtype > 1) throw IoError("LMFT: unknown dtype " + std::to_string(dtype));
    const std::uint8_t rank = data[7];
    if (rank != 4) throw IoError("LMFT: expected rank 4, got " + std::to_string(rank));
    std::size_t pos = 8;
    if (size - pos < 4u * rank) throw IoError("LMFT: truncated dims");
    std::uint32_t dims[4];
    for (int i = 0; i < 4; ++i, pos += 4) dims[i] = get_u32(data + pos);
    for (std::uint32_t d : dims)
        if (d > (1u << 24)) throw IoError("LMFT: implausible dimension " + std::to_string(d));
    Tensor t(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]),
             static_cast<int>(dims[3]));
    const std::size_t value_size = dtype == 1 ? 8 : 4;
    if (size - pos < t.size() * value_size)
        throw IoError("LMFT: truncated payload (need " + std::to_string(t.size() * value_size) +
                      " bytes, have " + std::to_string(size - pos) + ")");
    for (std::size_t i = 0; i < t.size(); ++i, pos += value_size)
        t.data[i] = dtype == 1 ? get_value<double>(data + pos)
                               : static_cast<double>(get_value<float>(data + pos));
    if (consumed) *consumed = pos;
    return t;
}

void lmft_save(const Tensor& t, const std::string& path) { write_file(path, lmft_encode(t)); }

Tensor lmft_load(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    std::size_t consumed = 0;
    Tensor t = lmft_decode(bytes.data(), bytes.size(), &consumed);
    if (consumed != bytes.size())
        throw IoError(path + ": trailing bytes after tensor payload");
    return t;
}

}  // namespace lmf
