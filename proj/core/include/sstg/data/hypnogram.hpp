// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>
#include <vector>

#include "sstg/data/edf.hpp"
#include "sstg/data/stage.hpp"

namespace sstg::data {

inline constexpr double kEpochSeconds = 30.0;

struct Hypnogram {
  std::vector<Stage> labels;  // one per 30 s epoch from time 0
  std::size_t unrecognized = 0;  // annotations mapped to EXCLUDED as unknown text
};

/// Expands annotations into per-epoch labels. Zero-duration annotations
/// (events) are ignored and gaps become EXCLUDED. Overlaps and onsets or
/// durations off the 30 s grid raise AnnotationError.
Hypnogram hypnogram_from_annotations(std::vector<Annotation> notes);

/// Lines of onset_s,duration_s,stage; a non-numeric first line is a header.
Hypnogram parse_hypnogram_csv(std::string_view text);
Hypnogram parse_hypnogram_edf(const EdfRecording& rec);

}  // namespace sstg::data
