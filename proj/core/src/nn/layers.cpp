// SPDX-License-Identifier: Apache-2.0
#include "sstg/nn/layers.hpp"

#include <algorithm>

#include "sstg/errors.hpp"

namespace sstg::nn {

std::uint64_t Seeder::next() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void Registry::check_unique(const std::string& name) const {
  auto same = [&](const Entry& e) { return e.name == name; };
  if (std::any_of(params_.begin(), params_.end(), same) ||
      std::any_of(buffers_.begin(), buffers_.end(), same)) {
    throw ContractViolation("duplicate registry name '" + name + "'");
  }
}

void Registry::add_param(const std::string& name, const Tensor& t) {
  check_unique(name);
  for (const auto& e : params_) {
    if (e.tensor.same_storage(t)) throw ContractViolation("tensor registered twice: " + name);
  }
  params_.push_back({name, t});
}

void Registry::add_buffer(const std::string& name, const Tensor& t) {
  check_unique(name);
  buffers_.push_back({name, t});
}

void Registry::add_flag(const std::string& name, bool* value) { flags_.push_back({name, value}); }

std::size_t Registry::param_count() const {
  std::size_t n = 0;
  for (const auto& e : params_) n += e.tensor.numel();
  return n;
}

void Registry::zero_grad() const {
  for (const auto& e : params_) {
    Tensor t = e.tensor;
    t.zero_grad();
  }
}

Linear Linear::make(std::size_t in, std::size_t out, bool with_bias, Seeder& seeds) {
  Linear l;
  l.weight = Tensor::init({out, in}, ad::Init::fan_in_scaled(seeds.next())).set_requires_grad(true);
  if (with_bias) l.bias = Tensor::zeros({out}).set_requires_grad(true);
  return l;
}

Tensor Linear::forward(Tape& tape, const Tensor& x) const { return ad::linear(tape, x, weight, bias); }

void Linear::collect(Registry& reg, const std::string& prefix) const {
  reg.add_param(prefix + ".weight", weight);
  if (bias.defined()) reg.add_param(prefix + ".bias", bias);
}

Conv1d Conv1d::make(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                    std::size_t padding, Seeder& seeds) {
  Conv1d c;
  c.weight = Tensor::init({out, in, kernel}, ad::Init::fan_in_scaled(seeds.next())).set_requires_grad(true);
  c.bias = Tensor::zeros({out}).set_requires_grad(true);
  c.stride = stride;
  c.padding = padding;
  return c;
}

Tensor Conv1d::forward(Tape& tape, const Tensor& x) const {
  return ad::conv1d(tape, x, weight, bias, stride, padding);
}

void Conv1d::collect(Registry& reg, const std::string& prefix) const {
  reg.add_param(prefix + ".weight", weight);
  reg.add_param(prefix + ".bias", bias);
}

BatchNorm1d BatchNorm1d::make(std::size_t channels) {
  BatchNorm1d b;
  b.gamma = Tensor::constant({channels}, 1.0).set_requires_grad(true);
  b.beta = Tensor::zeros({channels}).set_requires_grad(true);
  b.state = ad::BatchNormState::fresh(channels);
  return b;
}

Tensor BatchNorm1d::forward(Tape& tape, const Tensor& x, NormMode mode) {
  return ad::batchnorm1d(tape, x, gamma, beta, state, mode);
}

void BatchNorm1d::collect(Registry& reg, const std::string& prefix) {
  reg.add_param(prefix + ".gamma", gamma);
  reg.add_param(prefix + ".beta", beta);
  reg.add_buffer(prefix + ".running_mean", state.running_mean);
  reg.add_buffer(prefix + ".running_var", state.running_var);
  reg.add_flag(prefix + ".initialized", &state.initialized);
}

}  // namespace sstg::nn
