// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sstg::data {

struct EdfSignal {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  std::int32_t digital_min = 0;
  std::int32_t digital_max = 0;
  std::string prefilter;
  std::size_t samples_per_record = 0;
  std::string reserved;

  std::vector<std::int16_t> digital;  // all records, de-interleaved
  std::vector<double> physical;
  double sample_rate = 0.0;

  double to_physical(std::int16_t d) const;
  bool is_annotation() const { return label == "EDF Annotations"; }
};

struct EdfRecording {
  std::string version;
  std::string patient;
  std::string recording;
  std::string start_date;
  std::string start_time;
  std::size_t header_bytes = 0;
  std::string reserved;  // "EDF+C" / "EDF+D" for EDF+
  std::int64_t num_records = 0;
  double record_duration = 0.0;
  std::vector<EdfSignal> signals;

  /// Throws ChannelNotFound listing the available labels.
  const EdfSignal& signal(const std::string& label) const;
  std::vector<std::string> signal_labels() const;
};

inline constexpr std::size_t kEdfFixedHeader = 256;
inline constexpr std::size_t kEdfSignalHeader = 256;

/// Every structural error raises ParseError with the byte offset and field.
EdfRecording parse_edf(std::span<const std::uint8_t> bytes);
EdfRecording read_edf(const std::filesystem::path& path);

/// Writes header fields and digital samples; header_bytes and record layout
/// are recomputed from the signals.
std::vector<std::uint8_t> serialize_edf(const EdfRecording& rec);
void write_edf(const EdfRecording& rec, const std::filesystem::path& path);

struct Annotation {
  double onset = 0.0;
  double duration = 0.0;
  std::string text;
};

/// Time-stamped annotation lists of every "EDF Annotations" signal, excluding
/// the per-record timekeeping entries.
std::vector<Annotation> edf_annotations(const EdfRecording& rec);
/// Encodes annotations as one TAL block per record for serialize_edf.
std::vector<std::int16_t> encode_annotations(const std::vector<Annotation>& notes,
                                             std::size_t samples_per_record, std::int64_t num_records,
                                             double record_duration);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace sstg::data
