// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sstg/autodiff/grad_check.hpp"
#include "sstg/nn/layers.hpp"
#include "sstg/util/rng.hpp"

namespace fixture {

/// Reverse-mode derivative of fn w.r.t. t[idx] with t[idx] shifted by delta.
inline double analytic_at(const sstg::ad::ScalarFn& fn, sstg::ad::Tensor t, std::size_t idx, double delta) {
  double& slot = t.mutable_values()[idx];
  const double original = slot;
  const bool had = t.requires_grad();
  slot = original + delta;
  t.zero_grad();
  t.set_requires_grad(true);
  double g = 0.0;
  {
    sstg::ad::Tape tape;
    auto loss = fn(tape);
    tape.backward(loss);
    if (t.has_grad()) g = t.grad_view()[idx];
  }
  slot = original;
  t.zero_grad();
  t.set_requires_grad(had);
  return g;
}

/// True when a relu or max-pool switch lies within ±eps of the probe: the
/// derivative's second difference across the stencil is then the size of the
/// jump, not O(eps²).
inline bool near_kink(const sstg::ad::ScalarFn& fn, const sstg::ad::Probe& p, double eps) {
  const double g0 = analytic_at(fn, p.tensor, p.index, 0.0);
  const double gp = analytic_at(fn, p.tensor, p.index, eps);
  const double gm = analytic_at(fn, p.tensor, p.index, -eps);
  const double scale = std::max({std::abs(g0), std::abs(gp), std::abs(gm), 1e-8});
  return std::abs(gp + gm - 2.0 * g0) > 1e-6 * scale;
}

struct ProbeSample {
  std::vector<sstg::ad::Probe> probes;
  std::size_t rejected = 0;
};

/// Central differences carry roundoff of about 1e-16·|f|/eps; a derivative
/// within 1e4 of that (conv bias feeding batch-statistics BN is exactly 0)
/// cannot be checked to a relative 1e-4.
inline bool below_resolution(const sstg::ad::ScalarFn& fn, const sstg::ad::Probe& p, double eps) {
  sstg::ad::Tape tape = sstg::ad::Tape::inference();
  const double f = std::abs(fn(tape).item());
  return std::abs(analytic_at(fn, p.tensor, p.index, 0.0)) < 1e4 * 1e-16 * std::max(f, 1.0) / eps;
}

/// `count` random parameter entries whose ±eps stencil stays on one linear
/// piece of every relu and max-pool and whose derivative is resolvable.
inline ProbeSample smooth_probes(const sstg::ad::ScalarFn& fn, const sstg::nn::Registry& reg, std::size_t count,
                                 std::uint64_t seed, double eps = 1e-5) {
  sstg::Rng rng(seed);
  ProbeSample out;
  while (out.probes.size() < count) {
    const auto& e = reg.params()[rng.below(reg.params().size())];
    sstg::ad::Probe p{e.tensor, static_cast<std::size_t>(rng.below(e.tensor.numel()))};
    if (below_resolution(fn, p, eps) || near_kink(fn, p, eps)) {
      ++out.rejected;
      continue;
    }
    out.probes.push_back(p);
  }
  return out;
}

}  // namespace fixture
