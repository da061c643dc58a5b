// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sstg/data/edf.hpp"
#include "sstg/data/hypnogram.hpp"

namespace sstg::data {

/// Ground-truth microstructure inside one epoch, seconds from the epoch start.
struct EventInterval {
  std::string kind;  // "spindle" | "k_complex"
  double start = 0.0;
  double end = 0.0;
};

/// Labeled 30 s epochs of one channel of one subject. No EXCLUDED labels.
struct EpochSet {
  std::string subject_id;
  std::string channel;
  double sample_rate = 0.0;
  std::size_t epoch_samples = 0;
  std::vector<double> samples;  // [size(), epoch_samples] row-major
  std::vector<Stage> labels;
  std::vector<std::vector<EventInterval>> events;  // empty, or one list per epoch

  std::size_t size() const { return labels.size(); }
  std::span<const double> epoch(std::size_t i) const;
  std::span<double> epoch(std::size_t i);
  /// Throws InvalidInput when shape or label invariants are broken.
  void validate() const;
};

std::size_t epoch_samples_for(double sample_rate);

/// Slices `channel` into hypnogram-aligned 30 s epochs and drops EXCLUDED
/// epochs. A trailing partial epoch (signal or labels) is dropped.
EpochSet epochize(const EdfRecording& rec, const std::string& channel, const Hypnogram& hyp,
                  const std::string& subject_id = {}, std::optional<double> expected_rate = std::nullopt);

enum class NormScheme { none, zscore_per_recording, zscore_per_epoch };
NormScheme norm_scheme_from_string(const std::string& s);
std::string to_string(NormScheme s);

/// Throws DegenerateSignal on a constant recording (or epoch, per scheme).
EpochSet normalize_recording(EpochSet es, NormScheme scheme);

/// Per-stage epoch counts in W, N1, N2, N3, REM order.
std::array<std::size_t, kNumStages> stage_histogram(const EpochSet& es);

}  // namespace sstg::data
