#include <cmath>

#include "lmf/data_io.hpp"

namespace lmf {

static constexpr std::size_t kPixelBytes = 3 * 32 * 32;

std::vector<CifarRecord> decode_cifar(const std::vector<std::uint8_t>& bytes, int num_classes,
                                      const std::string& source) {
    if (num_classes != 10 && num_classes != 100)
        throw ConfigError("decode_cifar: num_classes must be 10 or 100");
    const std::size_t label_bytes = num_classes == 100 ? 2 : 1;  // coarse + fine
    const std::size_t record_size = label_bytes + kPixelBytes;
    if (bytes.empty() || bytes.size() % record_size != 0)
        throw IoError(source + ": length " + std::to_string(bytes.size()) +
                      " is not a multiple of the record size " + std::to_string(record_size));
    std::vector<CifarRecord> out;
    out.reserve(bytes.size() / record_size);
    for (std::size_t off = 0; off < bytes.size(); off += record_size) {
        CifarRecord rec;
        rec.label = bytes[off + label_bytes - 1];  // fine label for CIFAR-100
        if (rec.label >= num_classes)
            throw IoError(source + ": record " + std::to_string(off / record_size) + " label " +
                          std::to_string(rec.label) + " >= " + std::to_string(num_classes));
        rec.image = Tensor(1, 3, 32, 32);
        const std::uint8_t* p = &bytes[off + label_bytes];
        for (std::size_t i = 0; i < kPixelBytes; ++i) rec.image.data[i] = p[i] / 255.0;
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<CifarRecord> load_cifar(const std::string& path, int num_classes) {
    return decode_cifar(read_file(path), num_classes, path);
}

std::vector<std::uint8_t> encode_cifar(const std::vector<CifarRecord>& records, int num_classes) {
    const std::size_t label_bytes = num_classes == 100 ? 2 : 1;
    std::vector<std::uint8_t> out;
    out.reserve(records.size() * (label_bytes + kPixelBytes));
    for (const CifarRecord& rec : records) {
        if (label_bytes == 2) out.push_back(static_cast<std::uint8_t>(rec.label));
        out.push_back(static_cast<std::uint8_t>(rec.label));
        for (std::size_t i = 0; i < kPixelBytes; ++i)
            out.push_back(static_cast<std::uint8_t>(std::floor(rec.image.data[i] * 255.0 + 0.5)));
    }
    return out;
}

}  // namespace lmf
