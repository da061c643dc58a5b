// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "sstg/nn/layers.hpp"
#include "sstg/nn/se_block.hpp"

namespace sstg::nn {

/// Two-convolution residual block with an SE stage on the residual branch:
/// y = relu(SE(bn2(conv2(relu(bn1(conv1(x)))))) + shortcut(x)).
/// The shortcut is a strided 1×1 conv + bn when width or stride changes.
struct BasicBlock {
  Conv1d conv1;
  BatchNorm1d bn1;
  Conv1d conv2;
  BatchNorm1d bn2;
  SEBlock se;
  bool use_se = true;
  std::optional<Conv1d> shortcut_conv;
  std::optional<BatchNorm1d> shortcut_bn;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;

  static BasicBlock make(std::size_t in, std::size_t out, std::size_t stride, std::size_t reduction,
                         bool use_se, Seeder& seeds);

  /// `forced_se_scale` replaces the learned gate with a constant per channel.
  Tensor forward(Tape& tape, const Tensor& x, NormMode mode,
                 std::optional<double> forced_se_scale = std::nullopt);

  void collect(Registry& reg, const std::string& prefix);
};

}  // namespace sstg::nn
