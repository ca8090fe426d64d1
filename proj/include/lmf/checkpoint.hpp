#pragma once

#include <string>

#include "lmf/lmfnet.hpp"

namespace lmf {

// Checkpoint container: magic "LMFC", version u16 LE, u32 JSON length, the
// network-config JSON, u32 record count, then named tensor records
// (u16 name length, name bytes, LMFT blob). Records cover every trainable
// parameter and every batch-norm running mean/variance, so a save/load
// round trip is bitwise exact in both train and eval mode.
constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(LmfNet& net, const std::string& path);
LmfNet load_checkpoint(const std::string& path);

}  // namespace lmf
