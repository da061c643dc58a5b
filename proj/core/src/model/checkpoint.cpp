// SPDX-License-Identifier: Apache-2.0
#include "sstg/model/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <nlohmann/json.hpp>

#include "sstg/errors.hpp"

namespace sstg::model {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'T', 'G'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(in[at + i]) << (8 * i);
  return v;
}

struct Slot {
  std::string kind;
  Tensor tensor;
};

std::vector<std::pair<std::string, Slot>> slots(const nn::Registry& reg) {
  std::vector<std::pair<std::string, Slot>> out;
  for (const auto& e : reg.params()) out.push_back({e.name, {"param", e.tensor}});
  for (const auto& e : reg.buffers()) out.push_back({e.name, {"buffer", e.tensor}});
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(Stager& model) {
  nn::Registry reg = model.registry();
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  const auto entries = slots(reg);
  for (const auto& [name, slot] : entries) {
    tensors.push_back({{"name", name},
                       {"kind", slot.kind},
                       {"shape", slot.tensor.shape()},
                       {"offset", offset},
                       {"count", slot.tensor.numel()}});
    offset += slot.tensor.numel();
  }
  nlohmann::json flags = nlohmann::json::object();
  for (const auto& f : reg.flags()) flags[f.name] = *f.value;
  const nlohmann::json manifest = {{"config", model.config().to_json()},
                                   {"tensors", tensors},
                                   {"flags", flags},
                                   {"payload_values", offset}};
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + 8 * offset);
  for (const auto& [name, slot] : entries) {
    for (double v : slot.tensor.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Stager deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CorruptCheckpoint("magic", "not a checkpoint (bad magic)");
  }
  if (bytes.size() < 8) throw CorruptCheckpoint("version", "truncated before version");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) {
    throw CorruptCheckpoint("version", "unsupported version " + std::to_string(version));
  }
  if (bytes.size() < 16) throw CorruptCheckpoint("manifest", "truncated before manifest length");
  const auto manifest_len = get_le<std::uint64_t>(bytes, 8);
  if (manifest_len > bytes.size() - 16) throw CorruptCheckpoint("manifest", "manifest truncated");
  const std::size_t payload_at = 16 + manifest_len;

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + static_cast<std::ptrdiff_t>(payload_at));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint("manifest", std::string("manifest is not valid JSON: ") + e.what());
  }

  StagerConfig cfg;
  try {
    cfg = StagerConfig::from_json(manifest.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint("config", e.what());
  }
  std::optional<Stager> model;
  try {
    model.emplace(cfg);
  } catch (const ConfigError& e) {
    throw CorruptCheckpoint("config", e.what());
  }

  struct Declared {
    ad::Shape shape;
    std::size_t offset;
    std::size_t count;
  };
  std::map<std::string, Declared> declared;
  try {
    for (const auto& t : manifest.at("tensors")) {
      declared[t.at("name").get<std::string>()] = {t.at("shape").get<ad::Shape>(),
                                                   t.at("offset").get<std::size_t>(),
                                                   t.at("count").get<std::size_t>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint("tensors", e.what());
  }

  const std::size_t payload_values = (bytes.size() - payload_at) / 8;
  nn::Registry reg = model->registry();
  for (auto& [name, slot] : slots(reg)) {
    auto it = declared.find(name);
    if (it == declared.end()) throw CorruptCheckpoint(name, "tensor missing from checkpoint");
    const Declared& d = it->second;
    if (d.shape != slot.tensor.shape() || ad::numel_of(d.shape) != d.count) {
      throw CorruptCheckpoint(name, "declared shape " + ad::shape_str(d.shape) + " does not match payload of " +
                                        std::to_string(d.count) + " values (model expects " +
                                        ad::shape_str(slot.tensor.shape()) + ")");
    }
    if (d.offset > payload_values || d.count > payload_values - d.offset) {
      throw CorruptCheckpoint(name, "payload truncated");
    }
    std::vector<double> values(d.count);
    for (std::size_t i = 0; i < d.count; ++i) {
      values[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, payload_at + 8 * (d.offset + i)));
    }
    try {
      ad::check_finite(values, name.c_str());
    } catch (const NonFiniteValue&) {
      throw CorruptCheckpoint(name, "non-finite payload");
    }
    auto dst = slot.tensor.mutable_values();
    std::copy(values.begin(), values.end(), dst.begin());
  }
  const auto& flags = manifest.contains("flags") ? manifest["flags"] : nlohmann::json::object();
  for (const auto& f : reg.flags()) {
    if (!flags.contains(f.name) || !flags[f.name].is_boolean()) {
      throw CorruptCheckpoint(f.name, "flag missing from checkpoint");
    }
    *f.value = flags[f.name].get<bool>();
  }
  return std::move(*model);
}

void save_checkpoint(Stager& model, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Stager load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace sstg::model
