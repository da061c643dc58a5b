// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sstg/nn/feature_extractor.hpp"
#include "sstg/nn/layers.hpp"
#include "sstg/rnn/lstm.hpp"

namespace sstg::model {

using ad::NormMode;
using ad::Tape;
using ad::Tensor;

struct StagerConfig {
  std::size_t window_size = 9;   // odd; the middle epoch is the prediction target
  std::size_t stride_train = 4;
  std::size_t stride_eval = 1;   // fixed
  std::size_t num_classes = 5;   // W, N1, N2, N3, REM
  double sample_rate = 100.0;
  nn::FeatureExtractorConfig extractor;
  std::size_t lstm_hidden = 128;
  std::size_t lstm_depth = 3;
  std::vector<std::size_t> head{5};  // linear widths; hidden layers use relu
  std::uint64_t seed = 0;

  std::size_t middle() const { return (window_size - 1) / 2; }
  std::size_t epoch_samples() const;
  /// Throws ConfigError on the first invalid field.
  void validate() const;

  nlohmann::json to_json() const;
  static StagerConfig from_json(const nlohmann::json& j);
};

/// Window of epoch row indices; row k of the batch reads epochs[window[k][t]].
using WindowIndex = std::vector<std::vector<std::size_t>>;

/// Which head output GradCAM and callers differentiate.
enum class ScoreKind { log_prob, logit };

class Stager {
 public:
  explicit Stager(StagerConfig cfg);
  Stager(Stager&&) noexcept = default;
  Stager& operator=(Stager&&) noexcept = default;
  Stager(const Stager&) = delete;
  Stager& operator=(const Stager&) = delete;

  const StagerConfig& config() const { return cfg_; }

  struct Scores {
    Tensor logits;     // [B, 5]
    Tensor log_probs;  // [B, 5]
  };

  /// Per-epoch last-conv activations [N, C, L_last] for epochs [N, 1, L].
  Tensor extract(Tape& tape, const Tensor& epochs, NormMode mode);
  /// Temporal encoder + middle-epoch head over feature rows [N, D].
  Scores classify(Tape& tape, const Tensor& features, const WindowIndex& windows) const;

  struct BatchOutput {
    Tensor log_probs;    // [B, 5]
    Tensor activations;  // [N, C_last, L_last]
  };
  /// Batched forward: the extractor runs once over `epochs` and windows index
  /// into its feature rows.
  BatchOutput forward(Tape& tape, const Tensor& epochs, const WindowIndex& windows, NormMode mode);

  struct WindowOutput {
    Tensor log_probs;            // [5]
    Tensor logits;               // [5]
    Tensor middle_activations;   // [C_last, L_last], gradient-tracked
  };
  /// Single window [W, 1, L]. After backward on this tape,
  /// middle_activations carries ∂loss/∂A for the middle epoch.
  WindowOutput forward_window(Tape& tape, const Tensor& window, NormMode mode);

  /// Eval-mode argmax over the window's log-probabilities (lowest index wins ties).
  std::size_t predict(const Tensor& window);

  nn::Registry registry();
  nn::FeatureExtractor& extractor() { return extractor_; }
  const rnn::BiLSTMStack& encoder() const { return encoder_; }
  rnn::BiLSTMStack& encoder() { return encoder_; }
  std::vector<nn::Linear>& head() { return head_; }

 private:
  StagerConfig cfg_;
  nn::FeatureExtractor extractor_;
  rnn::BiLSTMStack encoder_;
  std::vector<nn::Linear> head_;
};

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace sstg::model
