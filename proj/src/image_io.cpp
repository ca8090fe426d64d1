#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "lmf/data_io.hpp"

namespace lmf {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

namespace {

// Netpbm header tokens separated by whitespace; '#' starts a comment to EOL.
struct HeaderReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;
    const std::string& source;

    void skip_space() {
        while (pos < bytes.size()) {
            const char ch = static_cast<char>(bytes[pos]);
            if (ch == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    long long next_int() {
        skip_space();
        if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
            throw IoError(source + ": malformed header (expected integer)");
        long long v = 0;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1LL << 32) throw IoError(source + ": header value overflow");
            ++pos;
        }
        return v;
    }
};

}  // namespace

ImageRecord decode_image(const std::vector<std::uint8_t>& bytes, const std::string& source) {
    if (bytes.size() < 2) throw IoError(source + ": truncated file");
    int channels;
    if (bytes[0] == 'P' && bytes[1] == '5')
        channels = 1;
    else if (bytes[0] == 'P' && bytes[1] == '6')
        channels = 3;
    else
        throw IoError(source + ": bad magic (expected P5 or P6)");
    HeaderReader hr{bytes, 2, source};
    const long long w = hr.next_int();
    const long long h = hr.next_int();
    const long long maxval = hr.next_int();
    if (w <= 0 || h <= 0 || w > 1 << 20 || h > 1 << 20)
        throw IoError(source + ": invalid dimensions " + std::to_string(w) + "x" +
                      std::to_string(h));
    if (maxval == 0) throw IoError(source + ": maxval 0");
    if (maxval > 65535) throw IoError(source + ": maxval " + std::to_string(maxval) + " > 65535");
    // Single whitespace byte separates header from payload.
    if (hr.pos >= bytes.size()) throw IoError(source + ": truncated after header");
    ++hr.pos;
    const int bytes_per = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(w) * h * channels * bytes_per;
    if (bytes.size() - hr.pos < need)
        throw IoError(source + ": truncated payload (need " + std::to_string(need) + " bytes, have " +
                      std::to_string(bytes.size() - hr.pos) + ")");
    ImageRecord rec;
    rec.source = source;
    rec.maxval = static_cast<int>(maxval);
    rec.pixels = Tensor(1, channels, static_cast<int>(h), static_cast<int>(w));
    const double scale = 1.0 / static_cast<double>(maxval);
    const std::uint8_t* p = bytes.data() + hr.pos;
    for (int y = 0; y < rec.pixels.h; ++y)
        for (int x = 0; x < rec.pixels.w; ++x)
            for (int c = 0; c < channels; ++c) {
                long long v;
                if (bytes_per == 2) {
                    v = (static_cast<long long>(p[0]) << 8) | p[1];  // big-endian per netpbm
                    p += 2;
                } else {
                    v = *p++;
                }
                rec.pixels.at(0, c, y, x) = v * scale;
            }
    return rec;
}

ImageRecord load_image(const std::string& path) {
    return decode_image(read_file(path), path);
}

std::vector<std::uint8_t> encode_image(const Tensor& pixels) {
    if (pixels.n != 1 || (pixels.c != 1 && pixels.c != 3))
        throw ShapeError("encode_image: expected (1,1,h,w) or (1,3,h,w), got " +
                         pixels.shape_str());
    std::string header = std::string(pixels.c == 1 ? "P5" : "P6") + "\n" +
                         std::to_string(pixels.w) + " " + std::to_string(pixels.h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + pixels.size());
    for (int y = 0; y < pixels.h; ++y)
        for (int x = 0; x < pixels.w; ++x)
            for (int c = 0; c < pixels.c; ++c) {
                double v = pixels.at(0, c, y, x);
                v = v < 0 ? 0 : (v > 1 ? 1 : v);
                out.push_back(static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5)));
            }
    return out;
}

void save_image(const Tensor& pixels, const std::string& path) {
    write_file(path, encode_image(pixels));
}

Tensor load_mask(const std::string& path, bool* had_soft_pixels) {
    ImageRecord rec = load_image(path);
    if (rec.pixels.c != 1)
        throw IoError(path + ": mask must be single-channel, got " + rec.pixels.shape_str());
    bool soft = false;
    for (double& v : rec.pixels.data) {
        if (v != 0.0 && v != 1.0) soft = true;
        v = v >= 0.5 ? 1.0 : 0.0;
    }
    if (had_soft_pixels) *had_soft_pixels = soft;
    return rec.pixels;
}

SodPairing pair_sod_dataset(const std::string& image_dir, const std::string& mask_dir) {
    namespace fs = std::filesystem;
    auto scan = [](const std::string& dir) {
        std::vector<std::pair<std::string, std::string>> out;  // (stem, path)
        if (!fs::is_directory(dir)) throw IoError(dir + ": not a directory");
        for (const auto& e : fs::directory_iterator(dir)) {
            if (!e.is_regular_file()) continue;
            out.emplace_back(e.path().stem().string(), e.path().string());
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    auto images = scan(image_dir);
    auto masks = scan(mask_dir);
    SodPairing result;
    std::size_t i = 0, j = 0;
    while (i < images.size() && j < masks.size()) {
        if (images[i].first == masks[j].first) {
            result.pairs.emplace_back(images[i].second, masks[j].second);
            ++i;
            ++j;
        } else if (images[i].first < masks[j].first) {
            result.warnings.push_back("image without mask: " + images[i++].first);
        } else {
            result.warnings.push_back("mask without image: " + masks[j++].first);
        }
    }
    for (; i < images.size(); ++i)
        result.warnings.push_back("image without mask: " + images[i].first);
    for (; j < masks.size(); ++j)
        result.warnings.push_back("mask without image: " + masks[j].first);
    if (result.pairs.empty()) throw IoError("pair_sod_dataset: no matching image/mask stems");
    return result;
}

}  // namespace lmf
