// SPDX-License-Identifier: Apache-2.0
#include "sstg/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "sstg/errors.hpp"

namespace sstg::ad {

namespace {

double evaluate(const ScalarFn& fn) {
  Tape tape = Tape::inference();
  Tensor out = fn(tape);
  if (out.numel() != 1) throw ContractViolation("grad_check: function output is not scalar");
  return out.item();
}

}  // namespace

double grad_check(const ScalarFn& fn, const std::vector<Probe>& probes, double epsilon) {
  std::vector<Tensor> distinct;
  for (const auto& p : probes) {
    if (std::none_of(distinct.begin(), distinct.end(),
                     [&](const Tensor& t) { return t.same_storage(p.tensor); })) {
      distinct.push_back(p.tensor);
    }
  }
  std::vector<bool> previous;
  for (auto& t : distinct) {
    previous.push_back(t.requires_grad());
    t.zero_grad();
    t.set_requires_grad(true);
  }

  {
    Tape tape;
    Tensor loss = fn(tape);
    if (loss.numel() != 1) throw ContractViolation("grad_check: function output is not scalar");
    tape.backward(loss);
  }

  double worst = 0.0;
  for (const auto& p : probes) {
    const double analytic = p.tensor.has_grad() ? p.tensor.grad_view()[p.index] : 0.0;
    Tensor t = p.tensor;
    double& slot = t.mutable_values()[p.index];
    const double original = slot;
    slot = original + epsilon;
    const double up = evaluate(fn);
    slot = original - epsilon;
    const double down = evaluate(fn);
    slot = original;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }

  for (std::size_t i = 0; i < distinct.size(); ++i) {
    distinct[i].zero_grad();
    distinct[i].set_requires_grad(previous[i]);
  }
  return worst;
}

double grad_check(const ScalarFn& fn, const std::vector<Tensor>& inputs, double epsilon) {
  std::vector<Probe> probes;
  for (const auto& t : inputs) {
    for (std::size_t i = 0; i < t.numel(); ++i) probes.push_back({t, i});
  }
  return grad_check(fn, probes, epsilon);
}

}  // namespace sstg::ad
