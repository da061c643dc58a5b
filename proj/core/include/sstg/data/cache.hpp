// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sstg/data/epochs.hpp"

namespace sstg::data {

inline constexpr std::uint32_t kCacheVersion = 1;

/// "SEPC" | u32 version | u32 id length | id | f64 rate | u64 N | u64 L |
/// N label bytes | N*L little-endian f32 samples. Channel and events are not
/// stored.
std::vector<std::uint8_t> serialize_epoch_set(const EpochSet& es);
/// Throws ParseError naming the offending field.
EpochSet deserialize_epoch_set(std::span<const std::uint8_t> bytes);

void write_epoch_set(const EpochSet& es, const std::filesystem::path& path);
EpochSet read_epoch_set(const std::filesystem::path& path);

}  // namespace sstg::data
