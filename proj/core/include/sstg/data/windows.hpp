// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sstg/data/epochs.hpp"

namespace sstg::data {

enum class EdgePolicy { skip, replicate };
EdgePolicy edge_policy_from_string(const std::string& s);
std::string to_string(EdgePolicy p);

/// Windows of W consecutive epochs advanced by S. Under `skip`, window k
/// covers [kS, kS+W). Under `replicate`, window k is centered on epoch kS and
/// out-of-range positions repeat the first/last epoch.
class WindowView {
 public:
  WindowView(std::size_t num_epochs, std::size_t window, std::size_t stride, EdgePolicy policy);

  std::size_t size() const { return count_; }
  std::size_t num_epochs() const { return n_; }
  std::size_t window() const { return w_; }
  std::size_t stride() const { return s_; }
  EdgePolicy policy() const { return policy_; }

  /// Epoch whose label supervises window k.
  std::size_t center(std::size_t k) const;
  /// The W epoch indices of window k, in time order.
  std::vector<std::size_t> indices(std::size_t k) const;

 private:
  std::size_t n_, w_, s_;
  EdgePolicy policy_;
  std::size_t count_;
};

/// Throws ConfigError for even W or S == 0, EmptyDataset when W > N under skip.
WindowView make_windows(std::size_t num_epochs, std::size_t window, std::size_t stride, EdgePolicy policy);
WindowView make_windows(const EpochSet& es, std::size_t window, std::size_t stride, EdgePolicy policy);

}  // namespace sstg::data
