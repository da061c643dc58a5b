// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "edf_builder.hpp"
#include "oracles.hpp"
#include "sstg/data/cache.hpp"
#include "sstg/data/epochs.hpp"
#include "sstg/data/hypnogram.hpp"
#include "sstg/data/kfold.hpp"
#include "sstg/data/stage.hpp"
#include "sstg/data/windows.hpp"
#include "sstg/errors.hpp"
#include "sstg/util/rng.hpp"

using namespace sstg;
using namespace sstg::data;

namespace {

// One-signal recording at `rate` Hz with 30 s records and a ramp signal.
EdfRecording ramp_recording(std::size_t rate, std::size_t records) {
  fixture::EdfSpec e;
  e.num_records = std::to_string(records);
  e.duration = "30";
  e.signals[0].samples_per_record = std::to_string(rate * 30);
  e.signals[0].dig_min = "-32768";
  e.signals[0].dig_max = "32767";
  e.signals[0].phys_min = "-32768";
  e.signals[0].phys_max = "32767";
  for (std::size_t i = 0; i < records * rate * 30; ++i) e.signals[0].samples.push_back(static_cast<std::int16_t>(i % 20000));
  return parse_edf(fixture::build(e));
}

EpochSet random_set(std::size_t n, std::size_t l, std::uint64_t seed) {
  EpochSet es;
  es.subject_id = "s";
  es.sample_rate = static_cast<double>(l) / 30.0;
  es.epoch_samples = l;
  Rng rng(seed);
  for (std::size_t i = 0; i < n * l; ++i) es.samples.push_back(3.0 + 2.0 * rng.normal());
  for (std::size_t i = 0; i < n; ++i) es.labels.push_back(kStages[rng.below(5)]);
  return es;
}

}  // namespace

TEST(StageLabel, RkAndAasm) {
  EXPECT_EQ(map_stage_label("Sleep stage W"), Stage::W);
  EXPECT_EQ(map_stage_label("Sleep stage 1"), Stage::N1);
  EXPECT_EQ(map_stage_label("Sleep stage 2"), Stage::N2);
  EXPECT_EQ(map_stage_label("Sleep stage 3"), Stage::N3);
  EXPECT_EQ(map_stage_label("Sleep stage 4"), Stage::N3);
  EXPECT_EQ(map_stage_label("Sleep stage R"), Stage::REM);
  EXPECT_EQ(map_stage_label("Sleep stage ?"), Stage::EXCLUDED);
  EXPECT_EQ(map_stage_label("Movement time"), Stage::EXCLUDED);
  EXPECT_EQ(map_stage_label("N1"), Stage::N1);
  EXPECT_EQ(map_stage_label("N2"), Stage::N2);
  EXPECT_EQ(map_stage_label("N3"), Stage::N3);
  EXPECT_EQ(map_stage_label("REM"), Stage::REM);
  EXPECT_EQ(map_stage_label("w"), Stage::W);
  EXPECT_EQ(map_stage_label("UNKNOWN"), Stage::EXCLUDED);
  EXPECT_EQ(map_stage_label("Lights off"), Stage::EXCLUDED);
  EXPECT_EQ(map_stage_label(""), Stage::EXCLUDED);
}

TEST(StageLabel, Total) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const auto len = rng.below(16);
    for (std::uint64_t j = 0; j < len; ++j) s.push_back(static_cast<char>(32 + rng.below(95)));
    EXPECT_LE(index_of(map_stage_label(s)), 5u);
  }
}

TEST(Hypnogram, Expansion) {
  EXPECT_EQ(hypnogram_from_annotations({{0, 60, "Sleep stage W"}}).labels, (std::vector<Stage>{Stage::W, Stage::W}));
  EXPECT_EQ(hypnogram_from_annotations({{0, 30, "Sleep stage 4"}}).labels, (std::vector<Stage>{Stage::N3}));
  EXPECT_EQ(hypnogram_from_annotations({{0, 30, "Movement time"}}).labels, (std::vector<Stage>{Stage::EXCLUDED}));
}

TEST(Hypnogram, GapsAndEvents) {
  auto h = hypnogram_from_annotations({{90, 30, "Sleep stage 2"}, {0, 30, "Sleep stage 1"}, {15, 0, "Lights off"}});
  EXPECT_EQ(h.labels, (std::vector<Stage>{Stage::N1, Stage::EXCLUDED, Stage::EXCLUDED, Stage::N2}));
}

TEST(Hypnogram, Errors) {
  EXPECT_THROW(hypnogram_from_annotations({{0, 45, "Sleep stage W"}}), AnnotationError);
  EXPECT_THROW(hypnogram_from_annotations({{0, 60, "Sleep stage W"}, {30, 30, "Sleep stage 1"}}), AnnotationError);
  EXPECT_THROW(hypnogram_from_annotations({{10, 30, "Sleep stage W"}}), AnnotationError);
}

TEST(Hypnogram, Csv) {
  auto h = parse_hypnogram_csv("onset,duration,stage\n0,60,Sleep stage W\n60,30,Sleep stage R\n\n90,30,N2\n");
  EXPECT_EQ(h.labels, (std::vector<Stage>{Stage::W, Stage::W, Stage::REM, Stage::N2}));
  EXPECT_THROW(parse_hypnogram_csv("0,30,W\nbad line\n"), AnnotationError);
  EXPECT_EQ(parse_hypnogram_csv("0,30,Sleep stage banana\n").unrecognized, 1u);
}

TEST(Epochize, ShapeAndSlices) {
  auto rec = ramp_recording(100, 3);
  Hypnogram h{{Stage::W, Stage::N1, Stage::N2}, 0};
  auto es = epochize(rec, "EEG Fpz-Cz", h, "subj");
  EXPECT_EQ(es.size(), 3u);
  EXPECT_EQ(es.epoch_samples, 3000u);
  EXPECT_EQ(es.samples.size(), 9000u);
  EXPECT_EQ(es.epoch(1)[0], 3000.0);
  EXPECT_NO_THROW(es.validate());
}

TEST(Epochize, DropsExcluded) {
  auto rec = ramp_recording(100, 3);
  auto es = epochize(rec, "EEG Fpz-Cz", Hypnogram{{Stage::W, Stage::EXCLUDED, Stage::N2}, 0});
  EXPECT_EQ(es.labels, (std::vector<Stage>{Stage::W, Stage::N2}));
  EXPECT_EQ(es.epoch(1)[0], 6000.0);
}

TEST(Epochize, RateArithmetic) {
  EXPECT_EQ(epoch_samples_for(125.0), 3750u);
  EXPECT_EQ(epoch_samples_for(100.0), 3000u);
  EXPECT_THROW(epoch_samples_for(100.01), ConfigError);
  auto rec = ramp_recording(125, 1);
  EXPECT_EQ(epochize(rec, "EEG Fpz-Cz", Hypnogram{{Stage::W}, 0}).epoch_samples, 3750u);
}

TEST(Epochize, Errors) {
  auto rec = ramp_recording(100, 2);
  EXPECT_THROW(epochize(rec, "EEG C4-A1", Hypnogram{{Stage::W}, 0}), ChannelNotFound);
  EXPECT_THROW(epochize(rec, "EEG Fpz-Cz", Hypnogram{{Stage::W}, 0}, "s", 125.0), ConfigError);
  EXPECT_THROW(epochize(rec, "EEG Fpz-Cz", Hypnogram{{Stage::EXCLUDED}, 0}), EmptyDataset);
}

TEST(Epochize, TrailingPartialDropped) {
  auto rec = ramp_recording(100, 2);
  auto es = epochize(rec, "EEG Fpz-Cz", Hypnogram{{Stage::W, Stage::N1, Stage::N2}, 0});
  EXPECT_EQ(es.size(), 2u);
}

TEST(Windows, SpecExamples) {
  auto v = make_windows(10, 3, 2, EdgePolicy::skip);
  ASSERT_EQ(v.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(v.center(k), 1 + 2 * k);
  auto exact = make_windows(5, 5, 1, EdgePolicy::skip);
  ASSERT_EQ(exact.size(), 1u);
  EXPECT_EQ(exact.center(0), 2u);
  auto rep = make_windows(5, 3, 1, EdgePolicy::replicate);
  ASSERT_EQ(rep.size(), 5u);
  EXPECT_EQ(rep.indices(0), (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_EQ(rep.indices(4), (std::vector<std::size_t>{3, 4, 4}));
}

TEST(Windows, Errors) {
  EXPECT_THROW(make_windows(10, 4, 1, EdgePolicy::skip), ConfigError);
  EXPECT_THROW(make_windows(10, 3, 0, EdgePolicy::skip), ConfigError);
  EXPECT_THROW(make_windows(4, 5, 1, EdgePolicy::skip), EmptyDataset);
  EXPECT_EQ(edge_policy_from_string("replicate"), EdgePolicy::replicate);
  EXPECT_THROW(edge_policy_from_string("wrap"), ConfigError);
}

TEST(Windows, ExhaustiveEnumeration) {
  for (std::size_t n = 1; n <= 50; ++n) {
    for (std::size_t w : {1, 3, 5, 7, 9, 11}) {
      for (std::size_t s = 1; s <= 5; ++s) {
        const auto skip_ref = oracle::enumerate_skip(n, w, s);
        const std::size_t formula = n >= w ? (n - w) / s + 1 : 0;
        ASSERT_EQ(skip_ref.size(), formula);
        if (n >= w) {
          WindowView v(n, w, s, EdgePolicy::skip);
          ASSERT_EQ(v.size(), skip_ref.size()) << n << " " << w << " " << s;
          for (std::size_t k = 0; k < v.size(); ++k) {
            ASSERT_EQ(v.indices(k), skip_ref[k].members);
            ASSERT_EQ(v.center(k), skip_ref[k].center);
          }
        }
        const auto rep_ref = oracle::enumerate_replicate(n, w, s);
        WindowView r(n, w, s, EdgePolicy::replicate);
        ASSERT_EQ(r.size(), rep_ref.size());
        for (std::size_t k = 0; k < r.size(); ++k) {
          ASSERT_EQ(r.indices(k), rep_ref[k].members);
          ASSERT_EQ(r.center(k), rep_ref[k].center);
        }
      }
    }
  }
}

TEST(Windows, StrideSubsetOfUnitStride) {
  for (std::size_t n = 9; n <= 40; ++n) {
    WindowView one(n, 9, 1, EdgePolicy::skip);
    std::set<std::size_t> centers;
    for (std::size_t k = 0; k < one.size(); ++k) centers.insert(one.center(k));
    for (std::size_t s = 2; s <= 5; ++s) {
      WindowView v(n, 9, s, EdgePolicy::skip);
      for (std::size_t k = 0; k < v.size(); ++k) EXPECT_TRUE(centers.count(v.center(k)));
    }
  }
}

TEST(Normalize, Schemes) {
  auto es = random_set(4, 90, 1);
  auto same = normalize_recording(es, NormScheme::none);
  EXPECT_EQ(same.samples, es.samples);
  auto z = normalize_recording(es, NormScheme::zscore_per_recording);
  double m = std::accumulate(z.samples.begin(), z.samples.end(), 0.0) / z.samples.size();
  double v = 0;
  for (double x : z.samples) v += (x - m) * (x - m);
  v /= z.samples.size();
  EXPECT_LT(std::abs(m), 1e-10);
  EXPECT_LT(std::abs(v - 1.0), 1e-9);
  EXPECT_EQ(z.labels, es.labels);
  auto ze = normalize_recording(es, NormScheme::zscore_per_epoch);
  for (std::size_t i = 0; i < ze.size(); ++i) {
    auto e = ze.epoch(i);
    EXPECT_LT(std::abs(std::accumulate(e.begin(), e.end(), 0.0) / e.size()), 1e-10);
  }
}

TEST(Normalize, ConstantSignal) {
  auto es = random_set(2, 90, 1);
  std::fill(es.samples.begin(), es.samples.end(), 4.0);
  EXPECT_THROW(normalize_recording(es, NormScheme::zscore_per_recording), DegenerateSignal);
  EXPECT_THROW(normalize_recording(es, NormScheme::zscore_per_epoch), DegenerateSignal);
  EXPECT_NO_THROW(normalize_recording(es, NormScheme::none));
}

TEST(Kfold, SizesAndPartition) {
  std::vector<std::string> ids;
  for (int i = 0; i < 7; ++i) ids.push_back("s" + std::to_string(i));
  auto folds = kfold_split(ids, 3, 11);
  ASSERT_EQ(folds.size(), 3u);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.test.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2}));
}

TEST(Kfold, LeaveOneOut) {
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("s" + std::to_string(i));
  auto folds = kfold_split(ids, 20, 1);
  for (const auto& f : folds) {
    EXPECT_EQ(f.test.size(), 1u);
    EXPECT_EQ(f.train.size(), 19u);
  }
}

TEST(Kfold, PartitionPropertyAllK) {
  for (std::size_t n = 2; n <= 12; ++n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
    for (std::size_t k = 2; k <= n; ++k) {
      auto folds = kfold_split(ids, k, n * 100 + k);
      std::multiset<std::string> tested;
      std::size_t lo = n, hi = 0;
      for (const auto& f : folds) {
        lo = std::min(lo, f.test.size());
        hi = std::max(hi, f.test.size());
        std::set<std::string> train(f.train.begin(), f.train.end());
        for (const auto& t : f.test) {
          EXPECT_FALSE(train.count(t));
          tested.insert(t);
        }
        EXPECT_EQ(f.train.size() + f.test.size(), n);
      }
      EXPECT_LE(hi - lo, 1u);
      EXPECT_EQ(tested, std::multiset<std::string>(ids.begin(), ids.end()));
    }
  }
}

TEST(Kfold, DeterministicAndValidated) {
  std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  auto a = kfold_split(ids, 2, 9), b = kfold_split(ids, 2, 9);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].test, b[i].test);
  EXPECT_THROW(kfold_split(ids, 6, 1), ConfigError);
  EXPECT_THROW(kfold_split(ids, 1, 1), ConfigError);
  EXPECT_THROW(kfold_split({"a", "a", "b"}, 2, 1), ConfigError);
}

TEST(Cache, RoundTrip) {
  auto es = random_set(5, 960, 3);
  for (auto& v : es.samples) v = static_cast<float>(v);
  es.subject_id = "synth03";
  es.sample_rate = 32.0;
  auto back = deserialize_epoch_set(serialize_epoch_set(es));
  EXPECT_EQ(back.subject_id, es.subject_id);
  EXPECT_EQ(back.sample_rate, 32.0);
  EXPECT_EQ(back.epoch_samples, 960u);
  EXPECT_EQ(back.labels, es.labels);
  EXPECT_EQ(back.samples, es.samples);
  auto path = std::filesystem::temp_directory_path() / "sstg_cache_roundtrip.sepc";
  write_epoch_set(es, path);
  EXPECT_EQ(read_epoch_set(path).samples, es.samples);
  std::filesystem::remove(path);
}

TEST(Cache, Corruption) {
  auto es = random_set(2, 960, 3);
  auto bytes = serialize_epoch_set(es);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_epoch_set(bad), ParseError);
  bad = bytes;
  bad.resize(bytes.size() - 1);
  EXPECT_THROW(deserialize_epoch_set(bad), ParseError);
}

TEST(Histogram, Counts) {
  EpochSet es;
  es.labels = {Stage::W, Stage::N2, Stage::N2, Stage::REM};
  EXPECT_EQ(stage_histogram(es), (std::array<std::size_t, 5>{1, 0, 2, 0, 1}));
}
