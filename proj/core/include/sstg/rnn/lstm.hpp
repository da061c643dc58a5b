// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sstg/nn/layers.hpp"

namespace sstg::rnn {

using ad::Tape;
using ad::Tensor;

/// One LSTM cell. Every gate acts on the concatenation [h(t-1), x(t)]:
///   f = σ(W_f·[h,x] + b_f)   i = σ(W_i·[h,x] + b_i)   ĉ = tanh(W_c·[h,x] + b_c)
///   c = f⊙c_prev + i⊙ĉ        o = σ(W_o·[h,x] + b_o)   h = o⊙tanh(c)
struct LSTMCell {
  Tensor w_f, w_i, w_c, w_o;  // [H, H + D]
  Tensor b_f, b_i, b_c, b_o;  // [H]

  struct State {
    Tensor h;
    Tensor c;
  };
  struct Gates {
    Tensor f, i, c_hat, o;
  };

  /// Fan-in scaled weights; forget bias 1, other biases 0.
  static LSTMCell make(std::size_t input, std::size_t hidden, nn::Seeder& seeds);

  std::size_t hidden() const { return w_f.dim(0); }
  std::size_t input() const { return w_f.dim(1) - hidden(); }

  /// Zero state for a batch of `batch` rows (batch 0 = unbatched [H]).
  State zero_state(std::size_t batch) const;

  /// x_t is [D] or [B, D] with matching state. Optionally exposes the gates.
  State step(Tape& tape, const Tensor& x_t, const State& prev, Gates* gates = nullptr) const;

  void collect(nn::Registry& reg, const std::string& prefix) const;
};

/// Forward and backward cells over one sequence; output[t] = [h_fwd[t], h_bwd[t]].
struct BiLSTMLayer {
  LSTMCell forward_cell;
  LSTMCell backward_cell;

  static BiLSTMLayer make(std::size_t input, std::size_t hidden, nn::Seeder& seeds);
  std::vector<Tensor> forward(Tape& tape, const std::vector<Tensor>& seq) const;
  /// Hidden states of a single direction, in input order.
  static std::vector<Tensor> run_direction(Tape& tape, const LSTMCell& cell,
                                           const std::vector<Tensor>& seq, bool reversed);
  void collect(nn::Registry& reg, const std::string& prefix) const;
};

struct BiLSTMStack {
  std::vector<BiLSTMLayer> layers;

  static BiLSTMStack make(std::size_t input, std::size_t hidden, std::size_t depth, nn::Seeder& seeds);
  std::size_t output_dim() const { return 2 * layers.back().forward_cell.hidden(); }
  std::vector<Tensor> forward(Tape& tape, const std::vector<Tensor>& seq) const;
  void collect(nn::Registry& reg, const std::string& prefix) const;
};

}  // namespace sstg::rnn
