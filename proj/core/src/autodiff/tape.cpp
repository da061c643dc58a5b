// SPDX-License-Identifier: Apache-2.0
#include "sstg/autodiff/tape.hpp"

#include <atomic>

#include "sstg/errors.hpp"

namespace sstg::ad {

namespace {
std::atomic<std::uint64_t> next_tape_id{1};
thread_local const Tape* active_backward = nullptr;
}

bool accumulates(const TensorImpl* impl) {
  if (impl == nullptr || !impl->requires_grad) return false;
  return active_backward == nullptr || !active_backward->is_frozen(impl);
}

void Tape::freeze(const Tensor& t) {
  if (t.defined()) frozen_.insert(t.impl().get());
}

Tape::Tape(Mode mode) : mode_(mode), id_(next_tape_id.fetch_add(1)) {}

bool Tape::wants(std::initializer_list<const Tensor*> inputs) const {
  if (!recording()) return false;
  for (const Tensor* t : inputs) {
    if (t != nullptr && t->defined() && t->requires_grad() && !is_frozen(t->impl().get())) return true;
  }
  return false;
}

bool Tape::wants(const std::vector<Tensor>& inputs) const {
  if (!recording()) return false;
  for (const Tensor& t : inputs) {
    if (t.defined() && t.requires_grad() && !is_frozen(t.impl().get())) return true;
  }
  return false;
}

Tensor Tape::emit(Shape shape, std::vector<double> values, bool track,
                  std::function<void(TensorImpl& out)> backward, const char* op_name) {
  check_finite(values, op_name);
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  impl->tape_id = id_;
  if (track && recording()) {
    impl->requires_grad = true;
    nodes_.push_back(Node{impl, std::move(backward)});
  }
  return Tensor(std::move(impl));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractViolation("backward requires a scalar loss");
  }
  if (loss.impl()->tape_id != id_ || !loss.requires_grad()) {
    throw ContractViolation("loss was not recorded on this tape");
  }
  loss.impl()->grad_buffer()[0] += 1.0;
  struct ActiveScope {
    const Tape* outer;
    explicit ActiveScope(const Tape* self) : outer(active_backward) { active_backward = self; }
    ~ActiveScope() { active_backward = outer; }
  } scope(this);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->out->grad.empty()) it->rule(*it->out);
    // Drop the closure and output reference so intermediates free eagerly.
    it->rule = nullptr;
    it->out.reset();
  }
  nodes_.clear();
}

}  // namespace sstg::ad
