// SPDX-License-Identifier: Apache-2.0
#include "sstg/nn/basic_block.hpp"

#include "sstg/errors.hpp"

namespace sstg::nn {

BasicBlock BasicBlock::make(std::size_t in, std::size_t out, std::size_t stride,
                            std::size_t reduction, bool use_se, Seeder& seeds) {
  BasicBlock b;
  b.in_channels = in;
  b.out_channels = out;
  b.stride = stride;
  b.use_se = use_se;
  b.conv1 = Conv1d::make(in, out, 3, stride, 1, seeds);
  b.bn1 = BatchNorm1d::make(out);
  b.conv2 = Conv1d::make(out, out, 3, 1, 1, seeds);
  b.bn2 = BatchNorm1d::make(out);
  b.se = SEBlock::make(out, reduction, seeds);
  if (in != out || stride != 1) {
    b.shortcut_conv = Conv1d::make(in, out, 1, stride, 0, seeds);
    b.shortcut_bn = BatchNorm1d::make(out);
  }
  return b;
}

Tensor BasicBlock::forward(Tape& tape, const Tensor& x, NormMode mode,
                           std::optional<double> forced_se_scale) {
  Tensor h = ad::relu(tape, bn1.forward(tape, conv1.forward(tape, x), mode));
  h = bn2.forward(tape, conv2.forward(tape, h), mode);
  if (forced_se_scale) {
    const ad::Shape gate_shape(h.shape().begin(), h.shape().end() - 1);
    h = SEBlock::apply(tape, h, Tensor::constant(gate_shape, *forced_se_scale));
  } else if (use_se) {
    h = se.forward(tape, h);
  }
  Tensor skip = x;
  if (shortcut_conv) {
    skip = shortcut_bn->forward(tape, shortcut_conv->forward(tape, x), mode);
  }
  if (skip.shape() != h.shape()) {
    throw ShapeError("basic block: residual " + ad::shape_str(h.shape()) + " vs shortcut " +
                     ad::shape_str(skip.shape()));
  }
  return ad::relu(tape, ad::add(tape, h, skip));
}

void BasicBlock::collect(Registry& reg, const std::string& prefix) {
  conv1.collect(reg, prefix + ".conv1");
  bn1.collect(reg, prefix + ".bn1");
  conv2.collect(reg, prefix + ".conv2");
  bn2.collect(reg, prefix + ".bn2");
  if (use_se) se.collect(reg, prefix + ".se");
  if (shortcut_conv) {
    shortcut_conv->collect(reg, prefix + ".shortcut.conv");
    shortcut_bn->collect(reg, prefix + ".shortcut.bn");
  }
}

}  // namespace sstg::nn
