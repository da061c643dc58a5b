// SPDX-License-Identifier: Apache-2.0
#include "sstg/rnn/lstm.hpp"

#include "sstg/errors.hpp"

namespace sstg::rnn {

LSTMCell LSTMCell::make(std::size_t input, std::size_t hidden, nn::Seeder& seeds) {
  if (input == 0 || hidden == 0) throw ConfigError("LSTM input and hidden sizes must be positive");
  auto weight = [&] {
    return Tensor::init({hidden, hidden + input}, ad::Init::fan_in_scaled(seeds.next())).set_requires_grad(true);
  };
  LSTMCell c;
  c.w_f = weight();
  c.w_i = weight();
  c.w_c = weight();
  c.w_o = weight();
  c.b_f = Tensor::constant({hidden}, 1.0).set_requires_grad(true);
  c.b_i = Tensor::zeros({hidden}).set_requires_grad(true);
  c.b_c = Tensor::zeros({hidden}).set_requires_grad(true);
  c.b_o = Tensor::zeros({hidden}).set_requires_grad(true);
  return c;
}

LSTMCell::State LSTMCell::zero_state(std::size_t batch) const {
  const ad::Shape shape = batch == 0 ? ad::Shape{hidden()} : ad::Shape{batch, hidden()};
  return {Tensor::zeros(shape), Tensor::zeros(shape)};
}

LSTMCell::State LSTMCell::step(Tape& tape, const Tensor& x_t, const State& prev, Gates* gates) const {
  const std::size_t axis = x_t.rank() - 1;
  if (x_t.shape().back() != input() || prev.h.shape().back() != hidden() ||
      prev.c.shape() != prev.h.shape()) {
    throw ShapeError("lstm step: x " + ad::shape_str(x_t.shape()) + ", h " +
                     ad::shape_str(prev.h.shape()) + " for cell with D=" + std::to_string(input()) +
                     ", H=" + std::to_string(hidden()));
  }
  Tensor hx = ad::concat(tape, {prev.h, x_t}, axis);
  Tensor f = ad::sigmoid(tape, ad::linear(tape, hx, w_f, b_f));
  Tensor i = ad::sigmoid(tape, ad::linear(tape, hx, w_i, b_i));
  Tensor c_hat = ad::tanh(tape, ad::linear(tape, hx, w_c, b_c));
  Tensor c = ad::add(tape, ad::mul(tape, f, prev.c), ad::mul(tape, i, c_hat));
  Tensor o = ad::sigmoid(tape, ad::linear(tape, hx, w_o, b_o));
  Tensor h = ad::mul(tape, o, ad::tanh(tape, c));
  if (gates) *gates = {f, i, c_hat, o};
  return {h, c};
}

void LSTMCell::collect(nn::Registry& reg, const std::string& prefix) const {
  reg.add_param(prefix + ".W_f", w_f);
  reg.add_param(prefix + ".W_i", w_i);
  reg.add_param(prefix + ".W_c", w_c);
  reg.add_param(prefix + ".W_o", w_o);
  reg.add_param(prefix + ".b_f", b_f);
  reg.add_param(prefix + ".b_i", b_i);
  reg.add_param(prefix + ".b_c", b_c);
  reg.add_param(prefix + ".b_o", b_o);
}

BiLSTMLayer BiLSTMLayer::make(std::size_t input, std::size_t hidden, nn::Seeder& seeds) {
  BiLSTMLayer layer;
  layer.forward_cell = LSTMCell::make(input, hidden, seeds);
  layer.backward_cell = LSTMCell::make(input, hidden, seeds);
  return layer;
}

std::vector<Tensor> BiLSTMLayer::run_direction(Tape& tape, const LSTMCell& cell,
                                               const std::vector<Tensor>& seq, bool reversed) {
  const std::size_t n = seq.size();
  const std::size_t batch = seq.front().rank() == 1 ? 0 : seq.front().dim(0);
  std::vector<Tensor> out(n);
  LSTMCell::State state = cell.zero_state(batch);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = reversed ? n - 1 - k : k;
    state = cell.step(tape, seq[t], state);
    out[t] = state.h;
  }
  return out;
}

std::vector<Tensor> BiLSTMLayer::forward(Tape& tape, const std::vector<Tensor>& seq) const {
  if (seq.empty()) throw InvalidInput("bi-lstm: empty sequence");
  auto fwd = run_direction(tape, forward_cell, seq, false);
  auto bwd = run_direction(tape, backward_cell, seq, true);
  std::vector<Tensor> out;
  out.reserve(seq.size());
  const std::size_t axis = seq.front().rank() - 1;
  for (std::size_t t = 0; t < seq.size(); ++t) out.push_back(ad::concat(tape, {fwd[t], bwd[t]}, axis));
  return out;
}

void BiLSTMLayer::collect(nn::Registry& reg, const std::string& prefix) const {
  forward_cell.collect(reg, prefix + ".fwd");
  backward_cell.collect(reg, prefix + ".bwd");
}

BiLSTMStack BiLSTMStack::make(std::size_t input, std::size_t hidden, std::size_t depth,
                              nn::Seeder& seeds) {
  if (depth == 0) throw ConfigError("bi-lstm stack depth must be >= 1");
  BiLSTMStack stack;
  std::size_t in = input;
  for (std::size_t k = 0; k < depth; ++k) {
    stack.layers.push_back(BiLSTMLayer::make(in, hidden, seeds));
    in = 2 * hidden;
  }
  return stack;
}

std::vector<Tensor> BiLSTMStack::forward(Tape& tape, const std::vector<Tensor>& seq) const {
  if (layers.empty()) throw ConfigError("bi-lstm stack has no layers");
  std::vector<Tensor> h = seq;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& cell = layers[k].forward_cell;
    if (!h.empty() && h.front().shape().back() != cell.input()) {
      throw ConfigError("bi-lstm layer " + std::to_string(k + 1) + " expects input dim " +
                        std::to_string(cell.input()) + ", got " +
                        std::to_string(h.front().shape().back()));
    }
    h = layers[k].forward(tape, h);
  }
  return h;
}

void BiLSTMStack::collect(nn::Registry& reg, const std::string& prefix) const {
  for (std::size_t k = 0; k < layers.size(); ++k) layers[k].collect(reg, prefix + ".layer" + std::to_string(k + 1));
}

}  // namespace sstg::rnn
