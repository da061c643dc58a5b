// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "sstg/data/epochs.hpp"
#include "sstg/model/stager.hpp"

namespace sstg::explain {

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // [rows, cols]
  std::vector<data::Stage> labels;
};

/// Eval-mode global-average-pooled last-conv features, one row per epoch.
FeatureMatrix export_features(model::Stager& model, const data::EpochSet& es);

/// Header "epoch,label,f0,...": one row per epoch, label as a stage name.
void write_features_csv(const FeatureMatrix& m, const std::filesystem::path& path);

}  // namespace sstg::explain
