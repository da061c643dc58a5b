// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sstg::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Storage shared between Tensor handles and the tape closures that
/// reference them.
struct TensorImpl {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  std::uint64_t tape_id = 0;  // producing tape; 0 for leaves

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
    return grad;
  }
};

/// Initialization schemes for tensor_init.
struct Init {
  enum class Kind { zeros, constant, fan_in_scaled };
  Kind kind = Kind::zeros;
  double value = 0.0;
  std::uint64_t seed = 0;

  static Init zeros() { return {}; }
  static Init constant(double c) { return {Kind::constant, c, 0}; }
  /// Zero-mean normal draws with variance 2 / fan_in, fan_in = product of
  /// all extents after the first.
  static Init fan_in_scaled(std::uint64_t seed) { return {Kind::fan_in_scaled, 0.0, seed}; }
};

/// Dense row-major float64 array. Copies are shallow handles onto the same
/// storage (the autodiff graph needs identity); use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values);

  static Tensor init(const Shape& shape, const Init& scheme);
  static Tensor zeros(const Shape& shape) { return init(shape, Init::zeros()); }
  static Tensor constant(const Shape& shape, double c) { return init(shape, Init::constant(c)); }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double operator[](std::size_t i) const { return values()[i]; }
  double item() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  /// Accumulated gradient; zeros if none has flowed yet.
  std::vector<double> grad() const;
  std::span<const double> grad_view() const;
  void zero_grad();

  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Throws NonFiniteValue naming `where` if any value is NaN or infinite.
void check_finite(std::span<const double> values, const char* where);

}  // namespace sstg::ad
