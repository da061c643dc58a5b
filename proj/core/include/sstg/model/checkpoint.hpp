// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sstg/model/stager.hpp"

namespace sstg::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: "SSTG" | u32 version | u64 manifest bytes | JSON manifest |
/// little-endian f64 payloads in manifest order.
std::vector<std::uint8_t> serialize_checkpoint(Stager& model);
/// Throws CorruptCheckpoint naming the offending field or tensor.
Stager deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(Stager& model, const std::filesystem::path& path);
Stager load_checkpoint(const std::filesystem::path& path);

}  // namespace sstg::model
