// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sstg/nn/basic_block.hpp"
#include "sstg/nn/layers.hpp"

namespace sstg::nn {

enum class Variant { se_resnet_18, se_resnet_34 };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Layout of the 1D SE-ResNet: stem conv -> max-pool -> four stages of basic
/// blocks (stages 2-4 downsample by 2 in their first block).
struct FeatureExtractorConfig {
  Variant variant = Variant::se_resnet_18;
  std::size_t stem_kernel = 7;
  std::size_t stem_stride = 2;
  std::size_t pool_kernel = 3;
  std::size_t pool_stride = 2;
  std::array<std::size_t, 4> stage_widths{64, 128, 256, 512};
  std::array<std::size_t, 4> blocks_per_stage{2, 2, 2, 2};
  std::size_t reduction_ratio = 16;
  double width_multiplier = 1.0;
  bool use_se = true;
  /// Required samples per epoch; 0 accepts any length.
  std::size_t epoch_samples = 0;

  static FeatureExtractorConfig for_variant(Variant v, double width_multiplier = 1.0,
                                            std::size_t reduction_ratio = 16);

  std::array<std::size_t, 4> widths() const;
  std::size_t stem_channels() const { return widths()[0]; }
  std::size_t feature_dim() const { return widths()[3]; }
  /// Throws ConfigError on an inconsistent layout.
  void validate() const;

  nlohmann::json to_json() const;
  static FeatureExtractorConfig from_json(const nlohmann::json& j);
};

class FeatureExtractor {
 public:
  FeatureExtractor(FeatureExtractorConfig cfg, Seeder& seeds);

  struct Output {
    Tensor features;          // [N, D] (or [D] for a single [1, L] epoch)
    Tensor last_activations;  // [N, C_last, L_last] (or [C_last, L_last])
  };

  /// Input is [N, 1, L] or a single epoch [1, L].
  Output forward(Tape& tape, const Tensor& epochs, NormMode mode);
  /// Everything up to and including the last residual block.
  Tensor trunk(Tape& tape, const Tensor& epochs, NormMode mode);

  const FeatureExtractorConfig& config() const { return cfg_; }
  std::vector<BasicBlock>& blocks() { return blocks_; }
  Conv1d& stem() { return stem_; }
  BatchNorm1d& stem_bn() { return stem_bn_; }
  void collect(Registry& reg, const std::string& prefix);

 private:
  FeatureExtractorConfig cfg_;
  Conv1d stem_;
  BatchNorm1d stem_bn_;
  std::vector<BasicBlock> blocks_;
  std::vector<std::string> block_names_;
};

}  // namespace sstg::nn
