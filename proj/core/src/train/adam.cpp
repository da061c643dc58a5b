// SPDX-License-Identifier: Apache-2.0
#include "sstg/train/adam.hpp"

#include <cmath>

#include "sstg/errors.hpp"

namespace sstg::train {

AdamState::AdamState(const nn::Registry& reg, AdamConfig cfg) : config(cfg) {
  for (const auto& p : reg.params()) {
    m.emplace_back(p.tensor.numel(), 0.0);
    v.emplace_back(p.tensor.numel(), 0.0);
  }
}

void adam_step(const nn::Registry& reg, AdamState& state) {
  const auto& params = reg.params();
  if (params.size() != state.m.size()) throw ContractViolation("adam: registry does not match optimizer state");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].tensor.numel() != state.m[i].size()) {
      throw ContractViolation("adam: shape of '" + params[i].name + "' changed");
    }
    if (!params[i].tensor.has_grad()) throw ContractViolation("adam: no gradient for '" + params[i].name + "'");
  }

  const auto& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i].tensor;
    auto g = p.grad_view();
    auto theta = p.mutable_values();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      theta[j] -= c.lr * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace sstg::train
