// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sstg/nn/layers.hpp"

namespace sstg::train {

using ad::Tensor;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments shaped like the registry's parameters.
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;

  AdamState(const nn::Registry& reg, AdamConfig cfg = {});
};

/// One bias-corrected Adam update of every registered parameter. Throws
/// ContractViolation if a parameter has no gradient or the registry does not
/// match the state.
void adam_step(const nn::Registry& reg, AdamState& state);

}  // namespace sstg::train
