// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sstg/train/trainer.hpp"

namespace sstg::train {

struct CvConfig {
  std::size_t k = 2;
  std::uint64_t seed = 0;  // split seed; fold f trains with seed + f
  std::size_t jobs = 1;
  TrainConfig train;
  model::StagerConfig model;
  std::filesystem::path checkpoint_dir;  // empty: checkpoints are not written
  std::function<void(std::size_t fold, const BatchTrace&)> on_batch;  // must be thread-safe when jobs > 1
};

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  metrics::ConfusionMatrix confusion;
  std::vector<double> loss_history;
  std::size_t windows_per_epoch = 0;
  double seconds = 0.0;
  std::string checkpoint_path;
};

struct CvResult {
  std::vector<FoldResult> folds;
  metrics::ConfusionMatrix pooled;

  /// Per-fold and pooled metrics; wall-clock times only when requested.
  nlohmann::json to_json(bool with_timing = false) const;
};

/// Subject-wise k-fold: every test epoch is scored at stride 1 with replicate
/// edges; aggregate metrics come from the summed confusion matrix.
CvResult cross_validate(const std::vector<data::EpochSet>& sets, const CvConfig& cfg);

}  // namespace sstg::train
