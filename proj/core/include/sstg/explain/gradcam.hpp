// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sstg/model/stager.hpp"

namespace sstg::explain {

struct Heatmap {
  std::vector<double> values;  // length L_epoch, in [0, 1]
  std::size_t target = 0;
  std::size_t predicted = 0;
  double raw_max = 0.0;
  bool all_zero = false;  // the rectified map vanished everywhere
};

/// Relevance of the middle epoch of `window` [W, 1, L] for `target` (default:
/// the predicted class). Runs in eval mode; parameters are read-only.
Heatmap gradcam(model::Stager& model, const ad::Tensor& window, std::optional<std::size_t> target = std::nullopt,
                model::ScoreKind score = model::ScoreKind::log_prob);

/// relu(sum_c mean_t(G[c, :]) * A[c, t]) over activations and gradients [C, T].
std::vector<double> gradcam_raw(std::span<const double> activations, std::span<const double> gradients,
                                std::size_t channels, std::size_t length);

/// Linear interpolation from raw.size() cells to `length` samples, sample
/// centers aligned with cell centers.
std::vector<double> upsample_linear(std::span<const double> raw, std::size_t length);

/// Min-max scaling to [0, 1]; an all-zero map stays zero and sets `all_zero`.
Heatmap normalize_map(std::span<const double> upsampled, double raw_max);

/// Fraction of the heatmap's total mass inside [start_s, end_s).
double mass_within(const Heatmap& h, double sample_rate, double start_s, double end_s);

/// Writes `<stem>.csv` (sample_index,signal,relevance) and `<stem>.svg`.
/// Throws IoError if either file cannot be written.
std::pair<std::filesystem::path, std::filesystem::path> render_heatmap(const Heatmap& h,
                                                                       std::span<const double> signal,
                                                                       const std::filesystem::path& stem);

}  // namespace sstg::explain
