// SPDX-License-Identifier: Apache-2.0
// Byte-level EDF writer for fixtures. Every field is laid out by hand at its
// fixed width so malformed files can be crafted one field at a time.
#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace fixture {

struct SignalSpec {
  std::string label = "EEG Fpz-Cz";
  std::string transducer = "AgAgCl electrode";
  std::string dimension = "uV";
  std::string phys_min = "-250";
  std::string phys_max = "250";
  std::string dig_min = "-32768";
  std::string dig_max = "32767";
  std::string prefilter = "HP:0.5Hz";
  std::string samples_per_record = "3";
  std::string reserved;
  std::vector<std::int16_t> samples;  // all records, de-interleaved
};

struct EdfSpec {
  std::string version = "0";
  std::string patient = "X F 01-JAN-1970 subject01";
  std::string recording = "Startdate 01-JAN-1970 X X X";
  std::string start_date = "01.01.70";
  std::string start_time = "23.00.00";
  std::string header_bytes;  // derived when empty
  std::string reserved;
  std::string num_records = "2";
  std::string duration = "1";
  std::string num_signals;  // derived when empty
  std::vector<SignalSpec> signals{SignalSpec{}};
};

inline void put(std::vector<std::uint8_t>& out, const std::string& s, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) out.push_back(i < s.size() ? static_cast<std::uint8_t>(s[i]) : ' ');
}

/// Header fields then record-interleaved little-endian int16 samples.
inline std::vector<std::uint8_t> build(const EdfSpec& e) {
  const std::size_t ns = e.signals.size();
  std::vector<std::uint8_t> out;
  put(out, e.version, 8);
  put(out, e.patient, 80);
  put(out, e.recording, 80);
  put(out, e.start_date, 8);
  put(out, e.start_time, 8);
  put(out, e.header_bytes.empty() ? std::to_string(256 + 256 * ns) : e.header_bytes, 8);
  put(out, e.reserved, 44);
  put(out, e.num_records, 8);
  put(out, e.duration, 8);
  put(out, e.num_signals.empty() ? std::to_string(ns) : e.num_signals, 4);
  for (const auto& s : e.signals) put(out, s.label, 16);
  for (const auto& s : e.signals) put(out, s.transducer, 80);
  for (const auto& s : e.signals) put(out, s.dimension, 8);
  for (const auto& s : e.signals) put(out, s.phys_min, 8);
  for (const auto& s : e.signals) put(out, s.phys_max, 8);
  for (const auto& s : e.signals) put(out, s.dig_min, 8);
  for (const auto& s : e.signals) put(out, s.dig_max, 8);
  for (const auto& s : e.signals) put(out, s.prefilter, 80);
  for (const auto& s : e.signals) put(out, s.samples_per_record, 8);
  for (const auto& s : e.signals) put(out, s.reserved, 32);
  const std::size_t records = static_cast<std::size_t>(std::stol(e.num_records));
  for (std::size_t r = 0; r < records; ++r) {
    for (const auto& s : e.signals) {
      const std::size_t spr = static_cast<std::size_t>(std::stol(s.samples_per_record));
      for (std::size_t i = 0; i < spr; ++i) {
        const std::size_t at = r * spr + i;
        const std::int16_t v = at < s.samples.size() ? s.samples[at] : 0;
        const auto u = static_cast<std::uint16_t>(v);
        out.push_back(static_cast<std::uint8_t>(u & 0xff));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
      }
    }
  }
  return out;
}

/// Offset of signal field `field_offset` (relative to the per-signal block
/// of `width`-byte fields) for signal i of ns.
inline std::size_t signal_field_offset(std::size_t field_start, std::size_t width, std::size_t ns,
                                       std::size_t i) {
  return 256 + field_start * ns + width * i;
}

/// One EDF+ TAL: "+onset\x15duration\x14text\x14\0".
inline std::string tal(const std::string& onset, const std::string& duration, const std::string& text) {
  std::string s = onset;
  if (!duration.empty()) s += '\x15' + duration;
  s += '\x14' + text + '\x14';
  s += '\0';
  return s;
}

/// Packs TAL bytes (timekeeping TAL first) into int16 sample words of one record.
inline std::vector<std::int16_t> annotation_record(const std::string& bytes, std::size_t samples) {
  std::vector<std::int16_t> words(samples, 0);
  for (std::size_t i = 0; i < bytes.size() && i / 2 < samples; ++i) {
    auto& w = words[i / 2];
    auto u = static_cast<std::uint16_t>(w);
    if (i % 2 == 0) {
      u = static_cast<std::uint16_t>((u & 0xff00) | static_cast<std::uint8_t>(bytes[i]));
    } else {
      u = static_cast<std::uint16_t>((u & 0x00ff) | (static_cast<std::uint8_t>(bytes[i]) << 8));
    }
    w = static_cast<std::int16_t>(u);
  }
  return words;
}

}  // namespace fixture
