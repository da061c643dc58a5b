// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace sstg::data {

/// Class order is fixed everywhere: W, N1, N2, N3, REM.
enum class Stage : std::uint8_t { W = 0, N1 = 1, N2 = 2, N3 = 3, REM = 4, EXCLUDED = 5 };

inline constexpr std::size_t kNumStages = 5;
inline constexpr std::array<Stage, kNumStages> kStages{Stage::W, Stage::N1, Stage::N2, Stage::N3,
                                                       Stage::REM};

std::string_view stage_name(Stage s);
inline std::size_t index_of(Stage s) { return static_cast<std::size_t>(s); }

/// R&K ("Sleep stage 1".."4", "W", "R") and AASM (N1..N3, REM) labels, with or
/// without the "Sleep stage " prefix, case-insensitive. Stages 3 and 4 merge
/// into N3; movement, unknown and anything unrecognized map to EXCLUDED.
Stage map_stage_label(std::string_view raw);

}  // namespace sstg::data
