// SPDX-License-Identifier: Apache-2.0
#include "sstg/autodiff/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "sstg/errors.hpp"
#include "sstg/util/rng.hpp"

namespace sstg::ad {

std::size_t numel_of(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

void check_finite(std::span<const double> values, const char* where) {
  // Exponent all ones means inf or NaN; the bitwise scan vectorizes.
  constexpr std::uint64_t kExp = 0x7ff0000000000000ULL;
  std::uint64_t bad = 0;
  for (double v : values) {
    std::uint64_t b;
    std::memcpy(&b, &v, sizeof b);
    bad |= static_cast<std::uint64_t>((b & kExp) == kExp);
  }
  if (bad == 0) return;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NonFiniteValue(std::string(where) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw InvalidShape("tensor shape must have at least one extent");
  for (auto e : shape) {
    if (e == 0) throw InvalidShape("zero extent in shape " + shape_str(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> values) : impl_(std::make_shared<TensorImpl>()) {
  validate_shape(shape);
  if (numel_of(shape) != values.size()) {
    throw ShapeError("shape " + shape_str(shape) + " needs " + std::to_string(numel_of(shape)) +
                     " values, got " + std::to_string(values.size()));
  }
  check_finite(values, "Tensor");
  impl_->shape = std::move(shape);
  impl_->values = std::move(values);
}

Tensor Tensor::init(const Shape& shape, const Init& scheme) {
  validate_shape(shape);
  const std::size_t n = numel_of(shape);
  std::vector<double> v(n, 0.0);
  switch (scheme.kind) {
    case Init::Kind::zeros:
      break;
    case Init::Kind::constant:
      std::fill(v.begin(), v.end(), scheme.value);
      break;
    case Init::Kind::fan_in_scaled: {
      const std::size_t fan_in = shape.size() > 1 ? n / shape[0] : n;
      const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      Rng rng(scheme.seed);
      for (auto& x : v) x = stddev * rng.normal();
      break;
    }
  }
  return Tensor(shape, std::move(v));
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(impl_->shape));
  }
  return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->values.size(); }

std::span<const double> Tensor::values() const { return impl_->values; }
std::span<double> Tensor::mutable_values() { return impl_->values; }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return impl_->values[0];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return !impl_->grad.empty(); }

std::vector<double> Tensor::grad() const {
  if (impl_->grad.empty()) return std::vector<double>(impl_->values.size(), 0.0);
  return impl_->grad;
}

std::span<const double> Tensor::grad_view() const { return impl_->grad; }

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::clone() const {
  auto copy = std::make_shared<TensorImpl>();
  copy->shape = impl_->shape;
  copy->values = impl_->values;
  copy->requires_grad = impl_->requires_grad;
  return Tensor(std::move(copy));
}

}  // namespace sstg::ad
