// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sstg/nn/layers.hpp"

namespace sstg::nn {

/// Squeeze-and-excitation over the channel axis: a global-average squeeze to
/// a channel descriptor z, a bottleneck excitation s = σ(fc2·relu(fc1·z)),
/// then channel-wise rescaling of the input by s.
struct SEBlock {
  Tensor fc1;  // [C/r, C]
  Tensor fc2;  // [C, C/r]
  std::size_t reduction = 16;

  static SEBlock make(std::size_t channels, std::size_t reduction, Seeder& seeds);

  std::size_t channels() const { return fc2.dim(0); }
  /// Channel descriptor z (global average over the last axis).
  Tensor squeeze(Tape& tape, const Tensor& x) const;
  /// Gate s ∈ (0,1) per channel.
  Tensor excitation(Tape& tape, const Tensor& z) const;
  Tensor forward(Tape& tape, const Tensor& x) const;
  /// Channel re-weighting with an externally supplied gate.
  static Tensor apply(Tape& tape, const Tensor& x, const Tensor& s);

  void collect(Registry& reg, const std::string& prefix) const;
};

}  // namespace sstg::nn
