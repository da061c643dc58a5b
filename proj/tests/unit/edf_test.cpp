// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "edf_builder.hpp"
#include "edf_malformed.hpp"
#include "sstg/data/edf.hpp"
#include "sstg/data/hypnogram.hpp"
#include "sstg/errors.hpp"

using namespace sstg;
using namespace sstg::data;

using fixture::crafted;

TEST(Edf, PhysicalScalingOfDigitalZero) {
  auto rec = parse_edf(fixture::build(crafted()));
  ASSERT_EQ(rec.signals.size(), 1u);
  const auto& s = rec.signals[0];
  EXPECT_EQ(s.digital.size(), 6u);
  // (0 + 32768) * 500 / 65535 - 250
  EXPECT_NEAR(s.physical[0], 0.003815, 5e-7);
  EXPECT_NEAR(s.physical[0], 32768.0 * 500.0 / 65535.0 - 250.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.physical[3], 250.0);
  EXPECT_DOUBLE_EQ(s.physical[4], -250.0);
  EXPECT_EQ(s.sample_rate, 3.0);
}

TEST(Edf, HeaderFields) {
  auto rec = parse_edf(fixture::build(crafted()));
  EXPECT_EQ(rec.version, "0");
  EXPECT_EQ(rec.patient, "X F 01-JAN-1970 subject01");
  EXPECT_EQ(rec.start_date, "01.01.70");
  EXPECT_EQ(rec.start_time, "23.00.00");
  EXPECT_EQ(rec.header_bytes, 512u);
  EXPECT_EQ(rec.num_records, 2);
  EXPECT_EQ(rec.record_duration, 1.0);
  EXPECT_EQ(rec.signals[0].label, "EEG Fpz-Cz");
  EXPECT_EQ(rec.signals[0].physical_dimension, "uV");
  EXPECT_EQ(rec.signals[0].digital_min, -32768);
}

TEST(Edf, TwoSignalsDeinterleaved) {
  auto e = crafted();
  fixture::SignalSpec second;
  second.label = "EEG Pz-Oz";
  second.samples_per_record = "2";
  second.samples = {10, 11, 20, 21};
  e.signals.push_back(second);
  e.num_signals = "2   ";
  auto bytes = fixture::build(e);
  auto rec = parse_edf(bytes);
  EXPECT_EQ(rec.header_bytes, 768u);
  ASSERT_EQ(rec.signals.size(), 2u);
  EXPECT_EQ(rec.signals[0].digital, (std::vector<std::int16_t>{0, 1, -1, 32767, -32768, 1234}));
  EXPECT_EQ(rec.signals[1].digital, (std::vector<std::int16_t>{10, 11, 20, 21}));
  EXPECT_EQ(bytes.size(), 768u + 2 * 2 * 5);
}

TEST(Edf, RoundTripBitExact) {
  for (auto e : {crafted(), fixture::EdfSpec{}}) {
    e.reserved = "EDF+C";
    e.signals[0].samples.resize(6, 7);
    const auto bytes = fixture::build(e);
    auto rec = parse_edf(bytes);
    EXPECT_EQ(serialize_edf(rec), bytes);
    auto again = parse_edf(serialize_edf(rec));
    EXPECT_EQ(again.signals[0].digital, rec.signals[0].digital);
    EXPECT_EQ(again.reserved, "EDF+C");
  }
}

TEST(Edf, FileRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "sstg_edf_roundtrip.edf";
  auto rec = parse_edf(fixture::build(crafted()));
  write_edf(rec, path);
  auto back = read_edf(path);
  EXPECT_EQ(back.signals[0].digital, rec.signals[0].digital);
  EXPECT_EQ(read_file(path), fixture::build(crafted()));
  std::filesystem::remove(path);
}

TEST(Edf, MalformationFixtures) {
  const auto fixtures = fixture::malformed_fixtures();
  ASSERT_GE(fixtures.size(), 10u);
  for (const auto& f : fixtures) {
    SCOPED_TRACE(f.name);
    try {
      parse_edf(f.bytes);
      ADD_FAILURE() << "no error for " << f.name;
    } catch (const ParseError& err) {
      EXPECT_EQ(err.field(), f.field);
      EXPECT_EQ(err.offset(), f.offset);
    }
  }
}

TEST(Edf, MissingChannelListsAvailable) {
  auto rec = parse_edf(fixture::build(crafted()));
  try {
    rec.signal("EEG C4-A1");
    FAIL();
  } catch (const ChannelNotFound& e) {
    EXPECT_NE(std::string(e.what()).find("EEG Fpz-Cz"), std::string::npos);
  }
}

TEST(Edf, AnnotationChannel) {
  fixture::EdfSpec e;
  e.reserved = "EDF+C";
  e.num_records = "2";
  e.duration = "60";
  e.signals[0].samples_per_record = "60";
  fixture::SignalSpec ann;
  ann.label = "EDF Annotations";
  ann.dimension = "";
  ann.phys_min = "-1";
  ann.phys_max = "1";
  ann.samples_per_record = "40";
  const std::string r0 = fixture::tal("+0", "", "") + fixture::tal("+0", "60", "Sleep stage W");
  const std::string r1 = fixture::tal("+60", "", "") + fixture::tal("+60", "30", "Sleep stage 4") +
                         fixture::tal("+90", "30", "Movement time");
  auto w0 = fixture::annotation_record(r0, 40), w1 = fixture::annotation_record(r1, 40);
  ann.samples = w0;
  ann.samples.insert(ann.samples.end(), w1.begin(), w1.end());
  e.signals.push_back(ann);
  auto rec = parse_edf(fixture::build(e));
  auto notes = edf_annotations(rec);
  ASSERT_EQ(notes.size(), 3u);
  EXPECT_EQ(notes[0].text, "Sleep stage W");
  EXPECT_EQ(notes[1].onset, 60.0);
  EXPECT_EQ(notes[2].duration, 30.0);
  auto hyp = parse_hypnogram_edf(rec);
  EXPECT_EQ(hyp.labels, (std::vector<Stage>{Stage::W, Stage::W, Stage::N3, Stage::EXCLUDED}));
  // The annotation encoder reproduces the same stream.
  auto encoded = encode_annotations(notes, 40, 2, 60.0);
  auto reparsed = rec;
  reparsed.signals[1].digital = encoded;
  auto notes2 = edf_annotations(reparsed);
  ASSERT_EQ(notes2.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(notes2[i].text, notes[i].text);
    EXPECT_EQ(notes2[i].onset, notes[i].onset);
    EXPECT_EQ(notes2[i].duration, notes[i].duration);
  }
}
