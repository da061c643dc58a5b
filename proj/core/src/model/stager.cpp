// SPDX-License-Identifier: Apache-2.0
#include "sstg/model/stager.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "sstg/errors.hpp"

namespace sstg::model {

namespace {

nn::FeatureExtractorConfig bound_extractor(const StagerConfig& cfg) {
  auto e = cfg.extractor;
  e.epoch_samples = cfg.epoch_samples();
  return e;
}

}  // namespace

std::size_t StagerConfig::epoch_samples() const {
  return static_cast<std::size_t>(std::llround(sample_rate * 30.0));
}

void StagerConfig::validate() const {
  if (window_size == 0 || window_size % 2 == 0) {
    throw ConfigError("window_size must be odd and >= 1, got " + std::to_string(window_size));
  }
  if (stride_train == 0) throw ConfigError("stride_train must be >= 1");
  if (stride_eval != 1) throw ConfigError("stride_eval is fixed at 1");
  if (num_classes != 5) throw ConfigError("num_classes must be 5");
  if (!(sample_rate > 0.0) || std::abs(sample_rate * 30.0 - std::round(sample_rate * 30.0)) > 1e-9) {
    throw ConfigError("sample_rate × 30 must be a positive integer");
  }
  if (lstm_hidden == 0) throw ConfigError("lstm hidden size must be >= 1");
  if (lstm_depth == 0) throw ConfigError("lstm depth must be >= 1");
  if (head.empty() || head.back() != num_classes) {
    throw ConfigError("head widths must end in " + std::to_string(num_classes));
  }
  for (auto w : head) {
    if (w == 0) throw ConfigError("head widths must be positive");
  }
  extractor.validate();
}

nlohmann::json StagerConfig::to_json() const {
  return {{"window_size", window_size}, {"stride_train", stride_train},
          {"stride_eval", stride_eval}, {"num_classes", num_classes},
          {"sample_rate", sample_rate}, {"extractor", extractor.to_json()},
          {"lstm_hidden", lstm_hidden}, {"lstm_depth", lstm_depth},
          {"head", head},               {"seed", seed}};
}

StagerConfig StagerConfig::from_json(const nlohmann::json& j) {
  StagerConfig c;
  c.window_size = j.at("window_size").get<std::size_t>();
  c.stride_train = j.at("stride_train").get<std::size_t>();
  c.stride_eval = j.at("stride_eval").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.sample_rate = j.at("sample_rate").get<double>();
  c.extractor = nn::FeatureExtractorConfig::from_json(j.at("extractor"));
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  c.lstm_depth = j.at("lstm_depth").get<std::size_t>();
  c.head = j.at("head").get<std::vector<std::size_t>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

namespace {
StagerConfig validated(StagerConfig cfg) {
  cfg.validate();
  return cfg;
}
}  // namespace

Stager::Stager(StagerConfig cfg)
    : cfg_(validated(std::move(cfg))), extractor_([&] {
        nn::Seeder seeds(cfg_.seed);
        return nn::FeatureExtractor(bound_extractor(cfg_), seeds);
      }()) {
  nn::Seeder seeds(cfg_.seed ^ 0x5bd1e995u);
  encoder_ = rnn::BiLSTMStack::make(extractor_.config().feature_dim(), cfg_.lstm_hidden,
                                    cfg_.lstm_depth, seeds);
  std::size_t in = encoder_.output_dim();
  for (auto width : cfg_.head) {
    head_.push_back(nn::Linear::make(in, width, true, seeds));
    in = width;
  }
}

Tensor Stager::extract(Tape& tape, const Tensor& epochs, NormMode mode) {
  return extractor_.trunk(tape, epochs, mode);
}

Stager::Scores Stager::classify(Tape& tape, const Tensor& features, const WindowIndex& windows) const {
  if (windows.empty()) throw InvalidInput("classify: no windows");
  const std::size_t w = cfg_.window_size;
  for (const auto& row : windows) {
    if (row.size() != w) {
      throw ShapeError("window has " + std::to_string(row.size()) + " epochs, expected " +
                       std::to_string(w));
    }
  }
  std::vector<Tensor> seq;
  seq.reserve(w);
  std::vector<std::size_t> idx(windows.size());
  for (std::size_t t = 0; t < w; ++t) {
    for (std::size_t b = 0; b < windows.size(); ++b) idx[b] = windows[b][t];
    seq.push_back(ad::gather_rows(tape, features, idx));
  }
  auto encoded = encoder_.forward(tape, seq);
  Tensor h = encoded[cfg_.middle()];
  for (std::size_t k = 0; k < head_.size(); ++k) {
    h = head_[k].forward(tape, h);
    if (k + 1 < head_.size()) h = ad::relu(tape, h);
  }
  return {h, ad::log_softmax(tape, h, 1)};
}

Stager::BatchOutput Stager::forward(Tape& tape, const Tensor& epochs, const WindowIndex& windows,
                                    NormMode mode) {
  Tensor acts = extract(tape, epochs, mode);
  Tensor feats = ad::global_avg_pool(tape, acts);
  return {classify(tape, feats, windows).log_probs, acts};
}

Stager::WindowOutput Stager::forward_window(Tape& tape, const Tensor& window, NormMode mode) {
  if (window.rank() != 3 || window.dim(0) != cfg_.window_size || window.dim(1) != 1) {
    throw ShapeError("window must be [" + std::to_string(cfg_.window_size) + ",1,L], got " +
                     ad::shape_str(window.shape()));
  }
  Tensor acts = extract(tape, window, mode);
  const std::size_t c = acts.dim(1), len = acts.dim(2);
  std::vector<Tensor> rows;
  Tensor middle;
  for (std::size_t t = 0; t < cfg_.window_size; ++t) {
    const std::size_t pick[] = {t};
    Tensor a = ad::reshape(tape, ad::gather_rows(tape, acts, pick), {c, len});
    if (t == cfg_.middle()) {
      // A leaf when the trunk is untracked (frozen parameters), so gradients
      // still reach it.
      if (!a.requires_grad()) a.set_requires_grad(true);
      middle = a;
    }
    rows.push_back(ad::reshape(tape, ad::global_avg_pool(tape, a), {1, c}));
  }
  Tensor feats = ad::concat(tape, rows, 0);
  WindowIndex one(1);
  for (std::size_t t = 0; t < cfg_.window_size; ++t) one[0].push_back(t);
  Scores s = classify(tape, feats, one);
  const std::size_t k = cfg_.num_classes;
  return {ad::reshape(tape, s.log_probs, {k}), ad::reshape(tape, s.logits, {k}), middle};
}

std::size_t Stager::predict(const Tensor& window) {
  Tape tape = Tape::inference();
  auto out = forward_window(tape, window, NormMode::eval);
  return argmax(out.log_probs.values());
}

nn::Registry Stager::registry() {
  nn::Registry reg;
  extractor_.collect(reg, "extractor");
  encoder_.collect(reg, "encoder");
  for (std::size_t k = 0; k < head_.size(); ++k) head_[k].collect(reg, "head." + std::to_string(k));
  return reg;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace sstg::model
