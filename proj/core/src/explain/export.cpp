// SPDX-License-Identifier: Apache-2.0
#include "sstg/explain/export.hpp"

#include <cstdio>
#include <fstream>

#include "sstg/errors.hpp"
#include "sstg/train/trainer.hpp"

namespace sstg::explain {

FeatureMatrix export_features(model::Stager& model, const data::EpochSet& es) {
  // One epoch per pass: batched GEMM rounding depends on the column position,
  // and identical epochs must give identical rows.
  FeatureMatrix m;
  m.rows = es.size();
  m.labels = es.labels;
  data::EpochSet one;
  one.subject_id = es.subject_id;
  one.sample_rate = es.sample_rate;
  one.epoch_samples = es.epoch_samples;
  one.labels = {data::Stage::W};
  for (std::size_t i = 0; i < es.size(); ++i) {
    auto e = es.epoch(i);
    one.samples.assign(e.begin(), e.end());
    const ad::Tensor f = train::recording_features(model, one);
    m.cols = f.dim(1);
    m.values.insert(m.values.end(), f.values().begin(), f.values().end());
  }
  return m;
}

void write_features_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,label";
  for (std::size_t c = 0; c < m.cols; ++c) out << ",f" << c;
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < m.rows; ++r) {
    out << r << ',' << data::stage_name(m.labels[r]);
    for (std::size_t c = 0; c < m.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m.values[r * m.cols + c]);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace sstg::explain
