// SPDX-License-Identifier: Apache-2.0
#include "sstg/data/kfold.hpp"

#include <algorithm>
#include <set>

#include "sstg/errors.hpp"
#include "sstg/util/rng.hpp"

namespace sstg::data {

std::vector<Fold> kfold_split(std::vector<std::string> subject_ids, std::size_t k, std::uint64_t seed) {
  const std::size_t n = subject_ids.size();
  if (k < 2 || k > n) {
    throw ConfigError("k = " + std::to_string(k) + " is invalid for " + std::to_string(n) + " subjects");
  }
  if (std::set<std::string>(subject_ids.begin(), subject_ids.end()).size() != n) {
    throw ConfigError("subject ids must be unique");
  }
  Rng rng(seed);
  rng.shuffle(subject_ids);

  std::vector<Fold> folds(k);
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].test.assign(subject_ids.begin() + static_cast<std::ptrdiff_t>(at),
                         subject_ids.begin() + static_cast<std::ptrdiff_t>(at + size));
    at += size;
  }
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), folds[g].test.begin(), folds[g].test.end());
    }
  }
  return folds;
}

}  // namespace sstg::data
