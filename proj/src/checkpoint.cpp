#include <cstring>
#include <map>

#include "lmf/checkpoint.hpp"
#include "lmf/config_json.hpp"
#include "lmf/data_io.hpp"

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

Tensor vec_to_tensor(const std::vector<double>& v) {
    Tensor t(1, static_cast<int>(v.size()), 1, 1);
    t.data = v;
    return t;
}

// Deterministic record list: parameters by name, then BN running statistics.
std::vector<std::pair<std::string, Tensor>> collect_records(LmfNet& net) {
    std::vector<std::pair<std::string, Tensor>> records;
    for (auto& [name, p] : net.named_params()) records.emplace_back(name, p->value);
    for (auto& [name, bn] : net.named_norms()) {
        records.emplace_back(name + ".running_mean", vec_to_tensor(bn->state.running_mean));
        records.emplace_back(name + ".running_var", vec_to_tensor(bn->state.running_var));
    }
    return records;
}

}  // namespace

void save_checkpoint(LmfNet& net, const std::string& path) {
    std::vector<std::uint8_t> out = {'L', 'M', 'F', 'C'};
    put_u16(out, kCheckpointVersion);
    const std::string cfg = network_config_to_json(net.config()).dump();
    put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out.insert(out.end(), cfg.begin(), cfg.end());
    const auto records = collect_records(net);
    put_u32(out, static_cast<std::uint32_t>(records.size()));
    for (const auto& [name, tensor] : records) {
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        const std::vector<std::uint8_t> blob = lmft_encode(tensor);
        out.insert(out.end(), blob.begin(), blob.end());
    }
    write_file(path, out);
}

LmfNet load_checkpoint(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() < 10 || std::memcmp(bytes.data(), "LMFC", 4) != 0)
        throw IoError(path + ": not a checkpoint file");
    const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
    if (version != kCheckpointVersion)
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
    std::size_t pos = 6;
    const std::uint32_t json_len = get_u32(bytes.data() + pos);
    pos += 4;
    if (bytes.size() - pos < json_len) throw IoError(path + ": truncated config block");
    nlohmann::json cfg_json;
    try {
        cfg_json = nlohmann::json::parse(bytes.begin() + pos, bytes.begin() + pos + json_len);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path + ": bad config JSON: " + e.what());
    }
    pos += json_len;
    NetworkConfig cfg = network_config_from_json(cfg_json);
    LmfNet net = build_network(cfg);

    if (bytes.size() - pos < 4) throw IoError(path + ": truncated record count");
    const std::uint32_t count = get_u32(bytes.data() + pos);
    pos += 4;
    std::map<std::string, Tensor> loaded;
    for (std::uint32_t i = 0; i < count; ++i) {
        if (bytes.size() - pos < 2) throw IoError(path + ": truncated record name");
        const std::uint16_t name_len =
            static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        if (bytes.size() - pos < name_len) throw IoError(path + ": truncated record name");
        std::string name(bytes.begin() + pos, bytes.begin() + pos + name_len);
        pos += name_len;
        std::size_t consumed = 0;
        Tensor t = lmft_decode(bytes.data() + pos, bytes.size() - pos, &consumed);
        pos += consumed;
        if (!loaded.emplace(std::move(name), std::move(t)).second)
            throw IoError(path + ": duplicate record");
    }
    if (pos != bytes.size()) throw IoError(path + ": trailing bytes after records");

    const auto expected = collect_records(net);
    if (expected.size() != loaded.size())
        throw IoError(path + ": record count mismatch (expected " +
                      std::to_string(expected.size()) + ", got " +
                      std::to_string(loaded.size()) + ")");
    for (auto& [name, p] : net.named_params()) {
        auto it = loaded.find(name);
        if (it == loaded.end()) throw IoError(path + ": missing record " + name);
        if (!it->second.same_shape(p->value))
            throw IoError(path + ": record " + name + " shape " + it->second.shape_str() +
                          " does not match " + p->value.shape_str());
        p->value.data = it->second.data;
    }
    for (auto& [name, bn] : net.named_norms()) {
        for (const char* suffix : {".running_mean", ".running_var"}) {
            auto it = loaded.find(name + suffix);
            if (it == loaded.end()) throw IoError(path + ": missing record " + name + suffix);
            std::vector<double>& dst = suffix[9] == 'm' ? bn->state.running_mean
                                                        : bn->state.running_var;
            if (it->second.size() != dst.size())
                throw IoError(path + ": record " + name + suffix + " size mismatch");
            dst = it->second.data;
        }
    }
    return net;
}

}  // namespace lmf
