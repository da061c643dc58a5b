// SPDX-License-Identifier: Apache-2.0
#include "sstg/nn/feature_extractor.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "sstg/errors.hpp"

namespace sstg::nn {

std::string to_string(Variant v) {
  return v == Variant::se_resnet_18 ? "se_resnet_18" : "se_resnet_34";
}

Variant variant_from_string(const std::string& s) {
  if (s == "se_resnet_18") return Variant::se_resnet_18;
  if (s == "se_resnet_34") return Variant::se_resnet_34;
  throw ConfigError("unknown extractor variant '" + s + "' (expected se_resnet_18 or se_resnet_34)");
}

FeatureExtractorConfig FeatureExtractorConfig::for_variant(Variant v, double width_multiplier,
                                                           std::size_t reduction_ratio) {
  FeatureExtractorConfig c;
  c.variant = v;
  c.blocks_per_stage = v == Variant::se_resnet_18 ? std::array<std::size_t, 4>{2, 2, 2, 2}
                                                  : std::array<std::size_t, 4>{3, 4, 6, 3};
  c.width_multiplier = width_multiplier;
  c.reduction_ratio = reduction_ratio;
  return c;
}

std::array<std::size_t, 4> FeatureExtractorConfig::widths() const {
  std::array<std::size_t, 4> w{};
  for (std::size_t i = 0; i < 4; ++i) {
    w[i] = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(static_cast<double>(stage_widths[i]) * width_multiplier)));
  }
  return w;
}

void FeatureExtractorConfig::validate() const {
  const auto expected = variant == Variant::se_resnet_18 ? std::array<std::size_t, 4>{2, 2, 2, 2}
                                                         : std::array<std::size_t, 4>{3, 4, 6, 3};
  if (blocks_per_stage != expected) {
    throw ConfigError("blocks_per_stage does not match variant " + to_string(variant));
  }
  if (!(width_multiplier > 0.0)) throw ConfigError("width_multiplier must be positive");
  if (reduction_ratio == 0) throw ConfigError("reduction_ratio must be positive");
  if (stem_kernel == 0 || stem_stride == 0 || pool_kernel == 0 || pool_stride == 0) {
    throw ConfigError("stem and pool kernel/stride must be positive");
  }
  for (auto w : widths()) {
    if (w < reduction_ratio || w % reduction_ratio != 0) {
      throw ConfigError("stage width " + std::to_string(w) + " not divisible by reduction ratio " +
                        std::to_string(reduction_ratio));
    }
  }
}

nlohmann::json FeatureExtractorConfig::to_json() const {
  return {{"variant", to_string(variant)},
          {"stem_kernel", stem_kernel},
          {"stem_stride", stem_stride},
          {"pool_kernel", pool_kernel},
          {"pool_stride", pool_stride},
          {"stage_widths", stage_widths},
          {"blocks_per_stage", blocks_per_stage},
          {"reduction_ratio", reduction_ratio},
          {"width_multiplier", width_multiplier},
          {"use_se", use_se},
          {"epoch_samples", epoch_samples}};
}

FeatureExtractorConfig FeatureExtractorConfig::from_json(const nlohmann::json& j) {
  FeatureExtractorConfig c;
  c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.stem_kernel = j.at("stem_kernel").get<std::size_t>();
  c.stem_stride = j.at("stem_stride").get<std::size_t>();
  c.pool_kernel = j.at("pool_kernel").get<std::size_t>();
  c.pool_stride = j.at("pool_stride").get<std::size_t>();
  c.stage_widths = j.at("stage_widths").get<std::array<std::size_t, 4>>();
  c.blocks_per_stage = j.at("blocks_per_stage").get<std::array<std::size_t, 4>>();
  c.reduction_ratio = j.at("reduction_ratio").get<std::size_t>();
  c.width_multiplier = j.at("width_multiplier").get<double>();
  c.use_se = j.at("use_se").get<bool>();
  c.epoch_samples = j.at("epoch_samples").get<std::size_t>();
  return c;
}

FeatureExtractor::FeatureExtractor(FeatureExtractorConfig cfg, Seeder& seeds) : cfg_(cfg) {
  cfg_.validate();
  const auto w = cfg_.widths();
  stem_ = Conv1d::make(1, w[0], cfg_.stem_kernel, cfg_.stem_stride, cfg_.stem_kernel / 2, seeds);
  stem_bn_ = BatchNorm1d::make(w[0]);
  std::size_t in = w[0];
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t b = 0; b < cfg_.blocks_per_stage[s]; ++b) {
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      blocks_.push_back(BasicBlock::make(in, w[s], stride, cfg_.reduction_ratio, cfg_.use_se, seeds));
      block_names_.push_back("stage" + std::to_string(s + 1) + ".block" + std::to_string(b + 1));
      in = w[s];
    }
  }
}

Tensor FeatureExtractor::trunk(Tape& tape, const Tensor& epochs, NormMode mode) {
  const bool single = epochs.rank() == 2;
  if (!single && epochs.rank() != 3) {
    throw ShapeError("feature extractor expects [N,1,L] or [1,L], got " + ad::shape_str(epochs.shape()));
  }
  if (epochs.shape()[epochs.rank() - 2] != 1) {
    throw ShapeError("feature extractor expects one input channel, got " + ad::shape_str(epochs.shape()));
  }
  const std::size_t len = epochs.shape().back();
  if (cfg_.epoch_samples != 0 && len != cfg_.epoch_samples) {
    throw ShapeError("epoch length " + std::to_string(len) + " != configured " +
                     std::to_string(cfg_.epoch_samples));
  }
  Tensor h = ad::relu(tape, stem_bn_.forward(tape, stem_.forward(tape, epochs), mode));
  h = ad::max_pool1d(tape, h, cfg_.pool_kernel, cfg_.pool_stride);
  for (auto& block : blocks_) h = block.forward(tape, h, mode);
  return h;
}

FeatureExtractor::Output FeatureExtractor::forward(Tape& tape, const Tensor& epochs, NormMode mode) {
  Tensor acts = trunk(tape, epochs, mode);
  Tensor feats = ad::global_avg_pool(tape, acts);
  return {feats, acts};
}

void FeatureExtractor::collect(Registry& reg, const std::string& prefix) {
  stem_.collect(reg, prefix + ".stem.conv");
  stem_bn_.collect(reg, prefix + ".stem.bn");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(reg, prefix + "." + block_names_[i]);
}

}  // namespace sstg::nn
