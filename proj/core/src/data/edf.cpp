// SPDX-License-Identifier: Apache-2.0
#include "sstg/data/edf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "sstg/errors.hpp"

namespace sstg::data {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(' ');
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(' ');
  return std::string(s.substr(b, e - b + 1));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string text(std::size_t at, std::size_t width, const char* field) const {
    if (at + width > bytes_.size()) {
      throw ParseError(bytes_.size(), field, "file ends inside header field");
    }
    std::string out(reinterpret_cast<const char*>(bytes_.data() + at), width);
    for (std::size_t i = 0; i < width; ++i) {
      const auto c = static_cast<unsigned char>(out[i]);
      if (c < 32 || c > 126) {
        throw ParseError(at + i, field, "non-ASCII byte in header field");
      }
    }
    return trim(out);
  }

  double real(std::size_t at, std::size_t width, const char* field) const {
    const std::string s = text(at, width, field);
    std::string_view v = s;
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    double out = 0.0;
    auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out)) {
      throw ParseError(at, field, "expected a number, got '" + s + "'");
    }
    return out;
  }

  std::int64_t integer(std::size_t at, std::size_t width, const char* field) const {
    const std::string s = text(at, width, field);
    std::string_view v = s;
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    std::int64_t out = 0;
    auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || end != v.data() + v.size()) {
      throw ParseError(at, field, "expected an integer, got '" + s + "'");
    }
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
};

// Per-signal header fields: each is stored for all signals before the next.
struct FieldSpec {
  const char* name;
  std::size_t width;
};
constexpr FieldSpec kSignalFields[] = {{"label", 16},        {"transducer", 80},   {"physical_dimension", 8},
                                       {"physical_min", 8},  {"physical_max", 8},  {"digital_min", 8},
                                       {"digital_max", 8},   {"prefilter", 80},    {"samples_per_record", 8},
                                       {"signal_reserved", 32}};

std::size_t field_offset(std::size_t field, std::size_t ns, std::size_t signal) {
  std::size_t at = kEdfFixedHeader;
  for (std::size_t f = 0; f < field; ++f) at += kSignalFields[f].width * ns;
  return at + kSignalFields[field].width * signal;
}

void put_field(std::string& out, const std::string& value, std::size_t width) {
  std::string v = value.substr(0, width);
  v.resize(width, ' ');
  out += v;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << v;
  return os.str();
}

}  // namespace

double EdfSignal::to_physical(std::int16_t d) const {
  return (static_cast<double>(d) - digital_min) * (physical_max - physical_min) /
             static_cast<double>(digital_max - digital_min) +
         physical_min;
}

const EdfSignal& EdfRecording::signal(const std::string& label) const {
  for (const auto& s : signals) {
    if (s.label == label) return s;
  }
  std::string available;
  for (const auto& s : signals) available += (available.empty() ? "" : ", ") + s.label;
  throw ChannelNotFound("channel '" + label + "' not found; available: " + available);
}

std::vector<std::string> EdfRecording::signal_labels() const {
  std::vector<std::string> out;
  for (const auto& s : signals) out.push_back(s.label);
  return out;
}

EdfRecording parse_edf(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kEdfFixedHeader) {
    throw ParseError(bytes.size(), "header", "file shorter than the 256-byte fixed header");
  }
  Reader r(bytes);
  EdfRecording rec;
  rec.version = r.text(0, 8, "version");
  rec.patient = r.text(8, 80, "patient");
  rec.recording = r.text(88, 80, "recording");
  rec.start_date = r.text(168, 8, "start_date");
  rec.start_time = r.text(176, 8, "start_time");
  const std::int64_t header_bytes = r.integer(184, 8, "header_bytes");
  rec.reserved = r.text(192, 44, "reserved");
  rec.num_records = r.integer(236, 8, "num_records");
  rec.record_duration = r.real(244, 8, "record_duration");
  const std::int64_t ns = r.integer(252, 4, "num_signals");

  if (ns < 1) throw ParseError(252, "num_signals", "signal count must be >= 1");
  if (rec.num_records < 0) throw ParseError(236, "num_records", "record count must be >= 0");
  if (!(rec.record_duration > 0.0)) {
    throw ParseError(244, "record_duration", "record duration must be positive");
  }
  const auto n = static_cast<std::size_t>(ns);
  if (header_bytes < 0 || static_cast<std::size_t>(header_bytes) != kEdfFixedHeader + n * kEdfSignalHeader) {
    throw ParseError(184, "header_bytes",
                     "declared " + std::to_string(header_bytes) + ", expected " +
                         std::to_string(kEdfFixedHeader + n * kEdfSignalHeader));
  }
  rec.header_bytes = static_cast<std::size_t>(header_bytes);
  if (bytes.size() < rec.header_bytes) {
    throw ParseError(bytes.size(), "signal_header", "file ends inside the signal headers");
  }

  rec.signals.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    auto& sig = rec.signals[s];
    auto at = [&](std::size_t f) { return field_offset(f, n, s); };
    auto name = [&](std::size_t f) { return kSignalFields[f].name; };
    auto width = [&](std::size_t f) { return kSignalFields[f].width; };
    sig.label = r.text(at(0), width(0), name(0));
    sig.transducer = r.text(at(1), width(1), name(1));
    sig.physical_dimension = r.text(at(2), width(2), name(2));
    sig.physical_min = r.real(at(3), width(3), name(3));
    sig.physical_max = r.real(at(4), width(4), name(4));
    const auto dmin = r.integer(at(5), width(5), name(5));
    const auto dmax = r.integer(at(6), width(6), name(6));
    sig.prefilter = r.text(at(7), width(7), name(7));
    const auto spr = r.integer(at(8), width(8), name(8));
    sig.reserved = r.text(at(9), width(9), name(9));

    if (dmin < -32768 || dmin > 32767) throw ParseError(at(5), name(5), "outside the 16-bit range");
    if (dmax < -32768 || dmax > 32767) throw ParseError(at(6), name(6), "outside the 16-bit range");
    if (dmin >= dmax) {
      throw ParseError(at(5), name(5), "digital_min " + std::to_string(dmin) + " >= digital_max " +
                                           std::to_string(dmax));
    }
    if (sig.physical_min == sig.physical_max) {
      throw ParseError(at(3), name(3), "physical_min equals physical_max");
    }
    if (spr < 1) throw ParseError(at(8), name(8), "samples per record must be >= 1");
    sig.digital_min = static_cast<std::int32_t>(dmin);
    sig.digital_max = static_cast<std::int32_t>(dmax);
    sig.samples_per_record = static_cast<std::size_t>(spr);
    sig.sample_rate = static_cast<double>(spr) / rec.record_duration;
  }

  std::size_t record_samples = 0;
  for (const auto& sig : rec.signals) record_samples += sig.samples_per_record;
  const std::size_t record_bytes = 2 * record_samples;
  const auto records = static_cast<std::size_t>(rec.num_records);
  const std::size_t available = bytes.size() - rec.header_bytes;
  if (records > 0 && available / record_bytes < records) {
    throw ParseError(bytes.size(), "data_record",
                     "file ends inside data record " + std::to_string(available / record_bytes) + " of " +
                         std::to_string(records));
  }

  for (auto& sig : rec.signals) sig.digital.reserve(records * sig.samples_per_record);
  std::size_t at = rec.header_bytes;
  for (std::size_t k = 0; k < records; ++k) {
    for (auto& sig : rec.signals) {
      for (std::size_t i = 0; i < sig.samples_per_record; ++i, at += 2) {
        const auto lo = static_cast<std::uint16_t>(bytes[at]);
        const auto hi = static_cast<std::uint16_t>(bytes[at + 1]);
        sig.digital.push_back(static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8))));
      }
    }
  }
  for (auto& sig : rec.signals) {
    if (sig.is_annotation()) continue;
    sig.physical.resize(sig.digital.size());
    std::transform(sig.digital.begin(), sig.digital.end(), sig.physical.begin(),
                   [&](std::int16_t d) { return sig.to_physical(d); });
  }
  return rec;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

EdfRecording read_edf(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_edf(bytes);
  } catch (const ParseError& e) {
    throw ParseError(e.offset(), e.field(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> serialize_edf(const EdfRecording& rec) {
  const std::size_t ns = rec.signals.size();
  std::string h;
  put_field(h, rec.version.empty() ? "0" : rec.version, 8);
  put_field(h, rec.patient, 80);
  put_field(h, rec.recording, 80);
  put_field(h, rec.start_date, 8);
  put_field(h, rec.start_time, 8);
  put_field(h, std::to_string(kEdfFixedHeader + ns * kEdfSignalHeader), 8);
  put_field(h, rec.reserved, 44);
  put_field(h, std::to_string(rec.num_records), 8);
  put_field(h, format_number(rec.record_duration), 8);
  put_field(h, std::to_string(ns), 4);
  for (std::size_t f = 0; f < std::size(kSignalFields); ++f) {
    for (const auto& s : rec.signals) {
      std::string v;
      switch (f) {
        case 0: v = s.label; break;
        case 1: v = s.transducer; break;
        case 2: v = s.physical_dimension; break;
        case 3: v = format_number(s.physical_min); break;
        case 4: v = format_number(s.physical_max); break;
        case 5: v = std::to_string(s.digital_min); break;
        case 6: v = std::to_string(s.digital_max); break;
        case 7: v = s.prefilter; break;
        case 8: v = std::to_string(s.samples_per_record); break;
        default: v = s.reserved; break;
      }
      put_field(h, v, kSignalFields[f].width);
    }
  }
  std::vector<std::uint8_t> out(h.begin(), h.end());
  for (std::int64_t k = 0; k < rec.num_records; ++k) {
    for (const auto& s : rec.signals) {
      for (std::size_t i = 0; i < s.samples_per_record; ++i) {
        const std::size_t idx = static_cast<std::size_t>(k) * s.samples_per_record + i;
        const auto d = static_cast<std::uint16_t>(idx < s.digital.size() ? s.digital[idx] : 0);
        out.push_back(static_cast<std::uint8_t>(d & 0xff));
        out.push_back(static_cast<std::uint8_t>(d >> 8));
      }
    }
  }
  return out;
}

void write_edf(const EdfRecording& rec, const std::filesystem::path& path) {
  const auto bytes = serialize_edf(rec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace {

// One TAL: "+onset[\x15duration]\x14text\x14...\x14\0".
void parse_tal_block(std::string_view block, std::vector<Annotation>& out) {
  std::size_t pos = 0;
  while (pos < block.size()) {
    if (block[pos] == '\0') {
      ++pos;
      continue;
    }
    const std::size_t end = block.find('\0', pos);
    std::string_view tal = block.substr(pos, end == std::string_view::npos ? block.size() - pos : end - pos);
    pos = end == std::string_view::npos ? block.size() : end + 1;

    const std::size_t first = tal.find('\x14');
    if (first == std::string_view::npos) throw AnnotationError("malformed TAL: missing 0x14 separator");
    std::string_view stamp = tal.substr(0, first);
    std::string_view rest = tal.substr(first + 1);
    double onset = 0.0, duration = 0.0;
    const std::size_t dur_sep = stamp.find('\x15');
    std::string_view onset_text = stamp.substr(0, dur_sep);
    auto number = [](std::string_view v, const char* what) {
      if (!v.empty() && v.front() == '+') v.remove_prefix(1);
      double x = 0.0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
        throw AnnotationError(std::string("malformed TAL ") + what + " '" + std::string(v) + "'");
      }
      return x;
    };
    onset = number(onset_text, "onset");
    if (dur_sep != std::string_view::npos) duration = number(stamp.substr(dur_sep + 1), "duration");

    while (!rest.empty()) {
      const std::size_t sep = rest.find('\x14');
      std::string_view text = rest.substr(0, sep);
      // Empty text in the first slot is the record timekeeping entry.
      if (!text.empty()) out.push_back({onset, duration, std::string(text)});
      if (sep == std::string_view::npos) break;
      rest.remove_prefix(sep + 1);
    }
  }
}

}  // namespace

std::vector<Annotation> edf_annotations(const EdfRecording& rec) {
  std::vector<Annotation> out;
  for (const auto& sig : rec.signals) {
    if (!sig.is_annotation()) continue;
    std::string raw;
    raw.reserve(sig.digital.size() * 2);
    for (std::int16_t d : sig.digital) {
      const auto u = static_cast<std::uint16_t>(d);
      raw.push_back(static_cast<char>(u & 0xff));
      raw.push_back(static_cast<char>(u >> 8));
    }
    const std::size_t per_record = sig.samples_per_record * 2;
    for (std::size_t at = 0; at < raw.size(); at += per_record) {
      parse_tal_block(std::string_view(raw).substr(at, per_record), out);
    }
  }
  return out;
}

std::vector<std::int16_t> encode_annotations(const std::vector<Annotation>& notes,
                                             std::size_t samples_per_record, std::int64_t num_records,
                                             double record_duration) {
  const std::size_t per_record = samples_per_record * 2;
  std::vector<std::string> blocks(static_cast<std::size_t>(num_records));
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    blocks[k] = "+" + format_number(static_cast<double>(k) * record_duration) + "\x14\x14";
    blocks[k].push_back('\0');
  }
  for (std::size_t i = 0; i < notes.size(); ++i) {
    const auto& a = notes[i];
    std::string tal = "+" + format_number(a.onset);
    if (a.duration > 0.0) tal += "\x15" + format_number(a.duration);
    tal += "\x14" + a.text + "\x14";
    tal.push_back('\0');
    // First record with room keeps the annotations in onset order.
    bool placed = false;
    for (auto& b : blocks) {
      if (b.size() + tal.size() <= per_record) {
        b += tal;
        placed = true;
        break;
      }
    }
    if (!placed) throw InvalidInput("annotations do not fit in the annotation signal");
  }
  std::vector<std::int16_t> out;
  out.reserve(blocks.size() * samples_per_record);
  for (auto& b : blocks) {
    b.resize(per_record, '\0');
    for (std::size_t i = 0; i < per_record; i += 2) {
      const auto lo = static_cast<std::uint8_t>(b[i]);
      const auto hi = static_cast<std::uint8_t>(b[i + 1]);
      out.push_back(static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8))));
    }
  }
  return out;
}

}  // namespace sstg::data
