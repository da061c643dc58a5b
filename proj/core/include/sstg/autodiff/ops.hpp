// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sstg/autodiff/tape.hpp"
#include "sstg/autodiff/tensor.hpp"

namespace sstg::ad {

// Every op records its backward rule on `tape` when any input requires grad.
// Batched variants accept a leading batch axis where noted.

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor sum(Tape& tape, const Tensor& a);
Tensor mean(Tape& tape, const Tensor& a);
/// Scalar view of one entry (flat index).
Tensor element(Tape& tape, const Tensor& a, std::size_t flat_index);
Tensor reshape(Tape& tape, const Tensor& a, const Shape& shape);
/// Concatenation along `axis`; all other extents must agree.
Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis);
/// rows[i] = x[index[i], :] for x of shape [N, ...]; backward scatter-adds.
Tensor gather_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> index);

/// [m,k] · [k,n] -> [m,n]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
/// y = x · Wᵀ + b for x [B,in] (or [in]), W [out,in], b [out] (may be undefined).
Tensor linear(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Cross-correlation over x [C_in,L] or [N,C_in,L] with w [C_out,C_in,K] and
/// b [C_out]; L_out = floor((L + 2·padding − K)/stride) + 1.
Tensor conv1d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
              std::size_t padding);

enum class NormMode { train, eval };

/// Running statistics of a batchnorm layer. Uninitialized until the first
/// train-mode pass (or a checkpoint load).
struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
  bool initialized = false;
  double momentum = 0.1;
  double epsilon = 1e-5;

  static BatchNormState fresh(std::size_t channels);
};

/// Per-channel normalization of x [N,C,L] (or [C,L]). Train mode uses batch
/// statistics over (N,L) and updates the running estimates (unbiased
/// variance); eval mode uses the running estimates.
Tensor batchnorm1d(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, NormMode mode);

enum class Activation { relu, sigmoid, tanh, log_softmax };

Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor tanh(Tape& tape, const Tensor& x);
Tensor log_softmax(Tape& tape, const Tensor& x, std::size_t axis);
Tensor activation(Tape& tape, const Tensor& x, Activation kind, std::size_t axis = 0);

/// Mean over the last axis: [C,L] -> [C], [N,C,L] -> [N,C].
Tensor global_avg_pool(Tape& tape, const Tensor& x);
/// Max over windows of the last axis; gradient goes to the first maximal index.
Tensor max_pool1d(Tape& tape, const Tensor& x, std::size_t kernel, std::size_t stride);

/// y[..,c,t] = s[..,c] · x[..,c,t] for x [C,L]/[N,C,L] and s [C]/[N,C].
Tensor channel_scale(Tape& tape, const Tensor& x, const Tensor& s);

/// Mean over the batch of −log_probs[b, targets[b]] for log_probs [B,K].
Tensor nll_loss(Tape& tape, const Tensor& log_probs, std::span<const std::size_t> targets);

}  // namespace sstg::ad
