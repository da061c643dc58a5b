// SPDX-License-Identifier: Apache-2.0
#include "sstg/train/trainer.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>

#include "sstg/errors.hpp"
#include "sstg/train/adam.hpp"
#include "sstg/util/rng.hpp"

namespace sstg::train {

namespace {

constexpr std::size_t kEvalChunk = 64;
constexpr std::size_t kEvalBatch = 256;

std::vector<std::size_t> middle_labels(const std::vector<data::EpochSet>& sets, const std::vector<WindowRef>& batch,
                                       std::size_t window) {
  std::vector<std::size_t> out;
  out.reserve(batch.size());
  for (const auto& w : batch) out.push_back(data::index_of(sets[w.set].labels[w.first + (window - 1) / 2]));
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train.epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (stride_train == 0) throw ConfigError("stride_train must be >= 1");
  if (stride_eval != 1) throw ConfigError("stride_eval is fixed at 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},         {"batch_size", batch_size}, {"lr", lr},
          {"stride_train", stride_train}, {"stride_eval", stride_eval}, {"seed", seed},
          {"shuffle", shuffle}};
}

std::vector<WindowRef> training_windows(const std::vector<data::EpochSet>& sets, std::size_t window,
                                        std::size_t stride) {
  std::vector<WindowRef> out;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const data::WindowView view(sets[s].size(), window, stride, data::EdgePolicy::skip);
    for (std::size_t k = 0; k < view.size(); ++k) out.push_back({s, view.indices(k).front()});
  }
  return out;
}

double train_step(model::Stager& model, const std::vector<data::EpochSet>& sets, const std::vector<WindowRef>& batch,
                  AdamState& adam, const nn::Registry& reg) {
  const std::size_t w = model.config().window_size;
  // Each distinct epoch runs through the extractor once, in (set, epoch) order
  // so the batch composition, not its order, fixes the result.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> slot;
  for (const auto& win : batch) {
    for (std::size_t j = 0; j < w; ++j) slot.emplace(std::make_pair(win.set, win.first + j), 0);
  }
  const std::size_t l = model.config().epoch_samples();
  std::vector<double> values;
  values.reserve(slot.size() * l);
  std::size_t next = 0;
  for (auto& [key, pos] : slot) {
    const auto& es = sets[key.first];
    if (es.epoch_samples != l) {
      throw ShapeError("set '" + es.subject_id + "' has " + std::to_string(es.epoch_samples) +
                       " samples per epoch, model expects " + std::to_string(l));
    }
    auto e = es.epoch(key.second);
    values.insert(values.end(), e.begin(), e.end());
    pos = next++;
  }
  model::WindowIndex index(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (std::size_t j = 0; j < w; ++j) index[b].push_back(slot.at({batch[b].set, batch[b].first + j}));
  }

  ad::Tape tape;
  const Tensor epochs({slot.size(), 1, l}, std::move(values));
  auto out = model.forward(tape, epochs, index, ad::NormMode::train);
  const auto targets = middle_labels(sets, batch, w);
  Tensor loss = ad::nll_loss(tape, out.log_probs, targets);
  const double value = loss.item();
  reg.zero_grad();
  tape.backward(loss);
  adam_step(reg, adam);
  return value;
}

std::vector<double> train_model(model::Stager& model, const std::vector<data::EpochSet>& train_sets,
                                const TrainConfig& cfg, const FitHooks& hooks) {
  cfg.validate();
  const std::size_t w = model.config().window_size;
  const auto windows = training_windows(train_sets, w, cfg.stride_train);
  if (windows.empty()) throw EmptyDataset("no training set holds a full window of " + std::to_string(w) + " epochs");

  nn::Registry reg = model.registry();
  AdamState adam(reg, AdamConfig{cfg.lr});
  Rng rng(cfg.seed);
  std::vector<WindowRef> order = windows;
  std::vector<double> history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) rng.shuffle(order);
    double total = 0.0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), at + cfg.batch_size);
      std::vector<WindowRef> batch(order.begin() + static_cast<std::ptrdiff_t>(at),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      if (hooks.on_batch) {
        BatchTrace trace{epoch, {}};
        for (const auto& b : batch) {
          for (std::size_t j = 0; j < w; ++j) trace.epochs.emplace_back(train_sets[b.set].subject_id, b.first + j);
        }
        hooks.on_batch(trace);
      }
      total += train_step(model, train_sets, batch, adam, reg) * static_cast<double>(batch.size());
    }
    history.push_back(total / static_cast<double>(order.size()));
    if (hooks.on_epoch) hooks.on_epoch(epoch, history.back());
  }
  return history;
}

FitResult fit(const std::vector<data::EpochSet>& train_sets, const TrainConfig& cfg,
              const model::StagerConfig& model_cfg, const FitHooks& hooks) {
  if (train_sets.empty()) throw EmptyDataset("no training sets");
  model::Stager model(model_cfg);
  const std::size_t per_epoch = training_windows(train_sets, model_cfg.window_size, cfg.stride_train).size();
  auto history = train_model(model, train_sets, cfg, hooks);
  const std::size_t steps = cfg.epochs * ((per_epoch + cfg.batch_size - 1) / cfg.batch_size);
  return {std::move(model), std::move(history), per_epoch, steps};
}

Tensor recording_features(model::Stager& model, const data::EpochSet& es) {
  const std::size_t l = model.config().epoch_samples();
  if (es.epoch_samples != l) {
    throw ShapeError("set '" + es.subject_id + "' has " + std::to_string(es.epoch_samples) +
                     " samples per epoch, model expects " + std::to_string(l));
  }
  std::vector<Tensor> parts;
  for (std::size_t at = 0; at < es.size(); at += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, es.size() - at);
    std::vector<double> values(es.samples.begin() + static_cast<std::ptrdiff_t>(at * l),
                               es.samples.begin() + static_cast<std::ptrdiff_t>((at + n) * l));
    ad::Tape tape = ad::Tape::inference();
    Tensor acts = model.extract(tape, Tensor({n, 1, l}, std::move(values)), ad::NormMode::eval);
    parts.push_back(ad::global_avg_pool(tape, acts));
  }
  ad::Tape tape = ad::Tape::inference();
  return parts.size() == 1 ? parts.front() : ad::concat(tape, parts, 0);
}

std::vector<std::size_t> predict_recording(model::Stager& model, const data::EpochSet& es) {
  const Tensor feats = recording_features(model, es);
  const data::WindowView view(es.size(), model.config().window_size, 1, data::EdgePolicy::replicate);
  std::vector<std::size_t> preds;
  preds.reserve(es.size());
  for (std::size_t at = 0; at < view.size(); at += kEvalBatch) {
    const std::size_t end = std::min(view.size(), at + kEvalBatch);
    model::WindowIndex index;
    for (std::size_t k = at; k < end; ++k) index.push_back(view.indices(k));
    ad::Tape tape = ad::Tape::inference();
    const auto scores = model.classify(tape, feats, index);
    const auto lp = scores.log_probs.values();
    for (std::size_t b = 0; b < index.size(); ++b) preds.push_back(model::argmax(lp.subspan(b * 5, 5)));
  }
  return preds;
}

Evaluation evaluate(model::Stager& model, const std::vector<data::EpochSet>& sets) {
  Evaluation ev;
  for (const auto& es : sets) {
    auto preds = predict_recording(model, es);
    for (std::size_t i = 0; i < es.size(); ++i) ev.confusion.add(data::index_of(es.labels[i]), preds[i]);
    ev.predictions.push_back(std::move(preds));
  }
  return ev;
}

}  // namespace sstg::train
