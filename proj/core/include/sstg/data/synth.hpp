// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sstg/data/epochs.hpp"

namespace sstg::data {

/// Synthetic single-channel sleep EEG (arbitrary µV-like units): pink-noise
/// background plus a per-stage signature.
///   W    sustained 8-12 Hz alpha
///   N1   low-amplitude 4-7 Hz tones
///   N2   background plus a 12-14 Hz spindle (0.5-1.5 s) and one
///        biphasic K-complex; both intervals are stored in EpochSet::events
///   N3   high-amplitude 0.5-2 Hz delta
///   REM  low-amplitude 2-8 Hz tones under a slow amplitude envelope
/// Stages follow W then repeated N1 -> N2 -> N3 -> N2 -> REM cycles with
/// random dwell times and brief arousals. Samples are float-representable so
/// the cache round-trip is exact.
std::vector<EpochSet> synth_generate(std::size_t n_subjects, std::size_t epochs_per_subject,
                                     double sample_rate, std::uint64_t seed);

}  // namespace sstg::data
