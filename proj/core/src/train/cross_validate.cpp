// SPDX-License-Identifier: Apache-2.0
#include "sstg/train/cross_validate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "sstg/data/kfold.hpp"
#include "sstg/errors.hpp"
#include "sstg/model/checkpoint.hpp"

namespace sstg::train {

namespace {

FoldResult run_fold(const std::vector<data::EpochSet>& sets, const data::Fold& split, std::size_t fold,
                    const CvConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  auto pick = [&](const std::vector<std::string>& ids) {
    std::vector<data::EpochSet> out;
    for (const auto& id : ids) {
      for (const auto& es : sets) {
        if (es.subject_id == id) out.push_back(es);
      }
    }
    return out;
  };
  const auto train_sets = pick(split.train);
  const auto test_sets = pick(split.test);

  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed + fold;
  model::StagerConfig mc = cfg.model;
  mc.seed = cfg.seed + fold;
  FitHooks hooks;
  if (cfg.on_batch) hooks.on_batch = [&](const BatchTrace& t) { cfg.on_batch(fold, t); };
  auto fitted = fit(train_sets, tc, mc, hooks);

  FoldResult r;
  r.fold = fold;
  r.train_subjects = split.train;
  r.test_subjects = split.test;
  r.confusion = evaluate(fitted.model, test_sets).confusion;
  r.loss_history = std::move(fitted.loss_history);
  r.windows_per_epoch = fitted.windows_per_epoch;
  if (!cfg.checkpoint_dir.empty()) {
    const auto path = cfg.checkpoint_dir / ("fold" + std::to_string(fold) + ".sstg");
    model::save_checkpoint(fitted.model, path);
    r.checkpoint_path = path.string();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

CvResult cross_validate(const std::vector<data::EpochSet>& sets, const CvConfig& cfg) {
  if (sets.empty()) throw EmptyDataset("cross_validate: no subjects");
  std::vector<std::string> ids;
  for (const auto& es : sets) ids.push_back(es.subject_id);
  const auto splits = data::kfold_split(ids, cfg.k, cfg.seed);

  CvResult result;
  result.folds.resize(splits.size());
  const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, splits.size());
  if (jobs == 1) {
    for (std::size_t f = 0; f < splits.size(); ++f) result.folds[f] = run_fold(sets, splits[f], f, cfg);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t j = 0; j < jobs; ++j) {
      workers.emplace_back([&] {
        for (std::size_t f = next++; f < splits.size(); f = next++) {
          try {
            result.folds[f] = run_fold(sets, splits[f], f, cfg);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
  }
  for (const auto& f : result.folds) result.pooled += f.confusion;
  return result;
}

nlohmann::json CvResult::to_json(bool with_timing) const {
  nlohmann::json folds_json = nlohmann::json::array();
  for (const auto& f : folds) {
    nlohmann::json j = {{"fold", f.fold},
                        {"train_subjects", f.train_subjects},
                        {"test_subjects", f.test_subjects},
                        {"windows_per_epoch", f.windows_per_epoch},
                        {"loss_history", f.loss_history},
                        {"metrics", metrics::metrics_report(f.confusion)}};
    if (!f.checkpoint_path.empty()) j["checkpoint"] = f.checkpoint_path;
    if (with_timing) j["seconds"] = f.seconds;
    folds_json.push_back(std::move(j));
  }
  return {{"folds", folds_json}, {"pooled", metrics::metrics_report(pooled)}};
}

}  // namespace sstg::train
