// SPDX-License-Identifier: Apache-2.0
#include "sstg/data/cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "sstg/data/edf.hpp"
#include "sstg/errors.hpp"

namespace sstg::data {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> b) : b_(b) {}

  template <typename T>
  T le(const char* field) {
    need(sizeof(T), field);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b_[at_ + i]) << (8 * i);
    at_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* field) {
    need(n, field);
    auto s = b_.subspan(at_, n);
    at_ += n;
    return s;
  }

  std::size_t offset() const { return at_; }
  std::size_t remaining() const { return b_.size() - at_; }

 private:
  void need(std::size_t n, const char* field) const {
    if (n > b_.size() - at_) throw ParseError(b_.size(), field, "epoch cache truncated");
  }
  std::span<const std::uint8_t> b_;
  std::size_t at_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_epoch_set(const EpochSet& es) {
  es.validate();
  std::vector<std::uint8_t> out = {'S', 'E', 'P', 'C'};
  put_le<std::uint32_t>(out, kCacheVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(es.subject_id.size()));
  out.insert(out.end(), es.subject_id.begin(), es.subject_id.end());
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(es.sample_rate));
  put_le<std::uint64_t>(out, es.size());
  put_le<std::uint64_t>(out, es.epoch_samples);
  for (Stage s : es.labels) out.push_back(static_cast<std::uint8_t>(s));
  out.reserve(out.size() + 4 * es.samples.size());
  for (double v : es.samples) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

EpochSet deserialize_epoch_set(std::span<const std::uint8_t> bytes) {
  Cursor c(bytes);
  auto magic = c.take(4, "magic");
  if (std::memcmp(magic.data(), "SEPC", 4) != 0) throw ParseError(0, "magic", "not an epoch cache");
  const auto version = c.le<std::uint32_t>("version");
  if (version != kCacheVersion) throw ParseError(4, "version", "unsupported version " + std::to_string(version));
  const auto id_len = c.le<std::uint32_t>("subject_id");
  auto id = c.take(id_len, "subject_id");
  EpochSet es;
  es.subject_id.assign(id.begin(), id.end());
  const std::size_t rate_at = c.offset();
  es.sample_rate = std::bit_cast<double>(c.le<std::uint64_t>("sample_rate"));
  const auto n = c.le<std::uint64_t>("num_epochs");
  const std::size_t l_at = c.offset();
  const auto l = c.le<std::uint64_t>("epoch_samples");
  try {
    if (epoch_samples_for(es.sample_rate) != l) throw ParseError(l_at, "epoch_samples", "does not match 30 s at the stored rate");
  } catch (const ConfigError& e) {
    throw ParseError(rate_at, "sample_rate", e.what());
  }
  es.epoch_samples = l;
  if (n > c.remaining() || (n > 0 && l > (c.remaining() - n) / 4 / n)) {
    throw ParseError(bytes.size(), "samples", "epoch cache truncated");
  }
  const std::size_t labels_at = c.offset();
  for (std::uint8_t b : c.take(n, "labels")) {
    if (b >= kNumStages) throw ParseError(labels_at, "labels", "label byte " + std::to_string(b) + " out of range");
    es.labels.push_back(static_cast<Stage>(b));
  }
  es.samples.resize(n * l);
  for (auto& v : es.samples) v = static_cast<double>(std::bit_cast<float>(c.le<std::uint32_t>("samples")));
  return es;
}

void write_epoch_set(const EpochSet& es, const std::filesystem::path& path) {
  const auto bytes = serialize_epoch_set(es);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

EpochSet read_epoch_set(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return deserialize_epoch_set(bytes);
  } catch (const ParseError& e) {
    throw ParseError(e.offset(), e.field(), path.string() + ": " + e.what());
  }
}

}  // namespace sstg::data
