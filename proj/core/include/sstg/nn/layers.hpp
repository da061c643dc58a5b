// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sstg/autodiff/ops.hpp"

namespace sstg::nn {

using ad::NormMode;
using ad::Tape;
using ad::Tensor;

/// Deterministic stream of per-tensor seeds derived from one base seed.
class Seeder {
 public:
  explicit Seeder(std::uint64_t base) : state_(base) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

/// Stable name -> tensor view over a model. Parameters are learnable;
/// buffers (batchnorm running statistics) are persisted but not optimized.
class Registry {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };
  struct Flag {
    std::string name;
    bool* value;
  };

  void add_param(const std::string& name, const Tensor& t);
  void add_buffer(const std::string& name, const Tensor& t);
  void add_flag(const std::string& name, bool* value);

  const std::vector<Entry>& params() const { return params_; }
  const std::vector<Entry>& buffers() const { return buffers_; }
  const std::vector<Flag>& flags() const { return flags_; }
  std::size_t param_count() const;
  void zero_grad() const;

 private:
  void check_unique(const std::string& name) const;

  std::vector<Entry> params_;
  std::vector<Entry> buffers_;
  std::vector<Flag> flags_;
};

struct Linear {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out], may be undefined

  static Linear make(std::size_t in, std::size_t out, bool with_bias, Seeder& seeds);
  Tensor forward(Tape& tape, const Tensor& x) const;
  void collect(Registry& reg, const std::string& prefix) const;
};

struct Conv1d {
  Tensor weight;  // [out, in, kernel]
  Tensor bias;    // [out]
  std::size_t stride = 1;
  std::size_t padding = 0;

  static Conv1d make(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                     std::size_t padding, Seeder& seeds);
  Tensor forward(Tape& tape, const Tensor& x) const;
  void collect(Registry& reg, const std::string& prefix) const;
};

struct BatchNorm1d {
  Tensor gamma;
  Tensor beta;
  ad::BatchNormState state;

  static BatchNorm1d make(std::size_t channels);
  Tensor forward(Tape& tape, const Tensor& x, NormMode mode);
  void collect(Registry& reg, const std::string& prefix);
};

}  // namespace sstg::nn
