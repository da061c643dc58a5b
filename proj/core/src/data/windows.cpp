// SPDX-License-Identifier: Apache-2.0
#include "sstg/data/windows.hpp"

#include <algorithm>

#include "sstg/errors.hpp"

namespace sstg::data {

EdgePolicy edge_policy_from_string(const std::string& s) {
  if (s == "skip") return EdgePolicy::skip;
  if (s == "replicate") return EdgePolicy::replicate;
  throw ConfigError("unknown edge policy '" + s + "'");
}

std::string to_string(EdgePolicy p) { return p == EdgePolicy::skip ? "skip" : "replicate"; }

WindowView::WindowView(std::size_t num_epochs, std::size_t window, std::size_t stride, EdgePolicy policy)
    : n_(num_epochs), w_(window), s_(stride), policy_(policy) {
  if (w_ == 0 || w_ % 2 == 0) throw ConfigError("window size must be odd, got " + std::to_string(w_));
  if (s_ == 0) throw ConfigError("stride must be >= 1");
  if (policy_ == EdgePolicy::skip) {
    count_ = n_ >= w_ ? (n_ - w_) / s_ + 1 : 0;
  } else {
    count_ = n_ == 0 ? 0 : (n_ - 1) / s_ + 1;
  }
}

std::size_t WindowView::center(std::size_t k) const {
  if (k >= count_) throw InvalidInput("window index out of range");
  return policy_ == EdgePolicy::skip ? k * s_ + (w_ - 1) / 2 : k * s_;
}

std::vector<std::size_t> WindowView::indices(std::size_t k) const {
  if (k >= count_) throw InvalidInput("window index out of range");
  std::vector<std::size_t> out(w_);
  if (policy_ == EdgePolicy::skip) {
    for (std::size_t j = 0; j < w_; ++j) out[j] = k * s_ + j;
    return out;
  }
  const auto c = static_cast<std::ptrdiff_t>(k * s_);
  const auto half = static_cast<std::ptrdiff_t>((w_ - 1) / 2);
  const auto last = static_cast<std::ptrdiff_t>(n_) - 1;
  for (std::size_t j = 0; j < w_; ++j) {
    out[j] = static_cast<std::size_t>(std::clamp(c - half + static_cast<std::ptrdiff_t>(j), std::ptrdiff_t{0}, last));
  }
  return out;
}

WindowView make_windows(std::size_t num_epochs, std::size_t window, std::size_t stride, EdgePolicy policy) {
  WindowView v(num_epochs, window, stride, policy);
  if (policy == EdgePolicy::skip && window > num_epochs) {
    throw EmptyDataset("window of " + std::to_string(window) + " epochs exceeds the " +
                       std::to_string(num_epochs) + " available");
  }
  if (v.size() == 0) throw EmptyDataset("no epochs to window");
  return v;
}

WindowView make_windows(const EpochSet& es, std::size_t window, std::size_t stride, EdgePolicy policy) {
  return make_windows(es.size(), window, stride, policy);
}

}  // namespace sstg::data
