// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sstg::data {

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Subject-wise split: ids are shuffled with `seed` and cut into k folds whose
/// sizes differ by at most one (the first n mod k folds take the extra one).
/// Throws ConfigError when k < 2, k > n, or ids repeat.
std::vector<Fold> kfold_split(std::vector<std::string> subject_ids, std::size_t k, std::uint64_t seed);

}  // namespace sstg::data
