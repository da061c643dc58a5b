// SPDX-License-Identifier: Apache-2.0
#include "sstg/nn/se_block.hpp"

#include "sstg/errors.hpp"

namespace sstg::nn {

SEBlock SEBlock::make(std::size_t channels, std::size_t reduction, Seeder& seeds) {
  if (reduction == 0 || channels % reduction != 0 || channels < reduction) {
    throw ConfigError("SE block: reduction ratio " + std::to_string(reduction) +
                      " must divide channel count " + std::to_string(channels));
  }
  const std::size_t squeezed = channels / reduction;
  SEBlock se;
  se.reduction = reduction;
  se.fc1 = Tensor::init({squeezed, channels}, ad::Init::fan_in_scaled(seeds.next())).set_requires_grad(true);
  se.fc2 = Tensor::init({channels, squeezed}, ad::Init::fan_in_scaled(seeds.next())).set_requires_grad(true);
  return se;
}

Tensor SEBlock::squeeze(Tape& tape, const Tensor& x) const { return ad::global_avg_pool(tape, x); }

Tensor SEBlock::excitation(Tape& tape, const Tensor& z) const {
  Tensor hidden = ad::relu(tape, ad::linear(tape, z, fc1, Tensor{}));
  return ad::sigmoid(tape, ad::linear(tape, hidden, fc2, Tensor{}));
}

Tensor SEBlock::forward(Tape& tape, const Tensor& x) const {
  return apply(tape, x, excitation(tape, squeeze(tape, x)));
}

Tensor SEBlock::apply(Tape& tape, const Tensor& x, const Tensor& s) {
  return ad::channel_scale(tape, x, s);
}

void SEBlock::collect(Registry& reg, const std::string& prefix) const {
  reg.add_param(prefix + ".fc1", fc1);
  reg.add_param(prefix + ".fc2", fc2);
}

}  // namespace sstg::nn
