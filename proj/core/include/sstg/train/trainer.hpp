// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sstg/data/epochs.hpp"
#include "sstg/data/windows.hpp"
#include "sstg/metrics/metrics.hpp"
#include "sstg/model/stager.hpp"
#include "sstg/train/adam.hpp"

namespace sstg::train {

struct TrainConfig {
  std::size_t epochs = 45;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  std::size_t stride_train = 4;
  std::size_t stride_eval = 1;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
  nlohmann::json to_json() const;
};

/// A training window: epochs [first, first + W) of one set.
struct WindowRef {
  std::size_t set;
  std::size_t first;
};

/// Every skip-policy window at `stride`; sets shorter than the window add none.
std::vector<WindowRef> training_windows(const std::vector<data::EpochSet>& sets, std::size_t window,
                                        std::size_t stride);

/// What one optimizer step saw; for leakage audits.
struct BatchTrace {
  std::size_t epoch;
  std::vector<std::pair<std::string, std::size_t>> epochs;  // (subject, epoch index) of every window member
};

struct FitResult {
  model::Stager model;
  std::vector<double> loss_history;  // mean window loss per training epoch
  std::size_t windows_per_epoch = 0;
  std::size_t steps = 0;
};

struct FitHooks {
  std::function<void(const BatchTrace&)> on_batch;
  std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
};

/// Trains a freshly initialized model. Throws EmptyDataset when no set holds a
/// full window.
FitResult fit(const std::vector<data::EpochSet>& train_sets, const TrainConfig& cfg,
              const model::StagerConfig& model_cfg, const FitHooks& hooks = {});

/// Continues training `model` in place; returns the loss history.
std::vector<double> train_model(model::Stager& model, const std::vector<data::EpochSet>& train_sets,
                                const TrainConfig& cfg, const FitHooks& hooks = {});

/// Mean NLL and the gradient step for one batch of windows; exposed for
/// step-level tests.
double train_step(model::Stager& model, const std::vector<data::EpochSet>& sets,
                  const std::vector<WindowRef>& batch, AdamState& adam, const nn::Registry& reg);

struct Evaluation {
  metrics::ConfusionMatrix confusion;
  std::vector<std::vector<std::size_t>> predictions;  // per set, one per epoch
};

/// Eval-mode prediction of every epoch (stride 1, replicate edges).
Evaluation evaluate(model::Stager& model, const std::vector<data::EpochSet>& sets);
std::vector<std::size_t> predict_recording(model::Stager& model, const data::EpochSet& es);

/// Eval-mode extractor features [N, D] of every epoch of a set.
Tensor recording_features(model::Stager& model, const data::EpochSet& es);

}  // namespace sstg::train
