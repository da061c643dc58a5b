// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sstg/autodiff/tape.hpp"
#include "sstg/autodiff/tensor.hpp"

namespace sstg::ad {

/// A scalar-valued function of tensors it closes over, evaluated on a tape.
using ScalarFn = std::function<Tensor(Tape&)>;

struct Probe {
  Tensor tensor;
  std::size_t index;
};

/// Compares reverse-mode gradients against central finite differences over
/// every entry of `inputs`. Returns max |analytic − numeric| /
/// max(|analytic|, |numeric|, 1e-8). `inputs` are temporarily marked
/// requires_grad and their grads are cleared.
double grad_check(const ScalarFn& fn, const std::vector<Tensor>& inputs, double epsilon = 1e-5);

/// Same comparison restricted to chosen entries (for large parameter sets).
double grad_check(const ScalarFn& fn, const std::vector<Probe>& probes, double epsilon = 1e-5);

}  // namespace sstg::ad
