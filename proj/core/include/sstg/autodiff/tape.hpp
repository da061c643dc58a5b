// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <unordered_set>
#include <vector>

#include "sstg/autodiff/tensor.hpp"

namespace sstg::ad {

/// Records backward rules in forward order for one forward pass. A tape in
/// inference mode records nothing and its outputs never require grad.
class Tape {
 public:
  enum class Mode { record, inference };

  explicit Tape(Mode mode = Mode::record);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape inference() { return Tape(Mode::inference); }

  bool recording() const { return mode_ == Mode::record; }
  std::size_t size() const { return nodes_.size(); }
  std::uint64_t id() const { return id_; }

  /// Treats `t` as a constant on this tape: ops do not record on its account
  /// and backward never writes its gradient. Lets frozen parameters be shared
  /// read-only while gradients flow to other tensors.
  void freeze(const Tensor& t);
  bool is_frozen(const TensorImpl* impl) const { return frozen_.count(impl) != 0; }

  /// True if an op over `inputs` must be recorded.
  bool wants(std::initializer_list<const Tensor*> inputs) const;
  bool wants(const std::vector<Tensor>& inputs) const;

  /// Builds an op output owned by this tape. When `track` is set the output
  /// requires grad and `backward` is appended to the tape; the closure reads
  /// the output gradient through the returned tensor's impl.
  Tensor emit(Shape shape, std::vector<double> values, bool track,
              std::function<void(TensorImpl& out)> backward, const char* op_name);

  /// Reverse sweep from a scalar loss recorded on this tape. Gradients are
  /// accumulated into every reachable requires_grad tensor; the tape is
  /// consumed.
  void backward(const Tensor& loss);

 private:
  struct Node {
    std::shared_ptr<TensorImpl> out;
    std::function<void(TensorImpl&)> rule;
  };

  Mode mode_;
  std::uint64_t id_;
  std::vector<Node> nodes_;
  std::unordered_set<const TensorImpl*> frozen_;
};

/// True when a backward rule should accumulate into `impl`: it requires grad
/// and is not frozen on the tape currently running backward on this thread.
bool accumulates(const TensorImpl* impl);

}  // namespace sstg::ad
