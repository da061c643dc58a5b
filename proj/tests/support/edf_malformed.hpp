// SPDX-License-Identifier: Apache-2.0
// A well-formed single-signal file and one malformed variant per header check.
#pragma once

#include <string>
#include <vector>

#include "edf_builder.hpp"

namespace fixture {

inline EdfSpec crafted() {
  EdfSpec e;
  e.signals[0].samples = {0, 1, -1, 32767, -32768, 1234};
  return e;
}

// Fixed offsets of the single-signal header.
inline constexpr std::size_t kPhysMin = 360, kPhysMax = 368, kDigMin = 376, kDigMax = 384, kSpr = 472;

struct Malformed {
  const char* name;
  std::vector<std::uint8_t> bytes;
  std::string field;
  std::size_t offset;
};

inline std::vector<Malformed> malformed_fixtures() {
  std::vector<Malformed> out;
  const auto good = build(crafted());
  {
    std::vector<std::uint8_t> b(good.begin(), good.begin() + 200);
    out.push_back({"short_file", b, "header", 200});
  }
  {
    auto e = crafted();
    e.num_signals = "ab";
    out.push_back({"non_numeric_signal_count", build(e), "num_signals", 252});
  }
  {
    auto e = crafted();
    e.num_signals = "0";
    e.signals.clear();
    e.num_records = "0";
    out.push_back({"zero_signals", build(e), "num_signals", 252});
  }
  {
    auto e = crafted();
    e.header_bytes = "999";
    out.push_back({"header_length_mismatch", build(e), "header_bytes", 184});
  }
  {
    auto e = crafted();
    e.duration = "0";
    out.push_back({"zero_record_duration", build(e), "record_duration", 244});
  }
  {
    auto e = crafted();
    e.duration = "1.x";
    out.push_back({"non_numeric_duration", build(e), "record_duration", 244});
  }
  {
    auto e = crafted();
    e.signals[0].dig_min = "100";
    e.signals[0].dig_max = "100";
    out.push_back({"digital_min_not_below_max", build(e), "digital_min", kDigMin});
  }
  {
    auto e = crafted();
    e.signals[0].dig_max = "40000";
    out.push_back({"digital_max_out_of_range", build(e), "digital_max", kDigMax});
  }
  {
    auto e = crafted();
    e.signals[0].phys_max = "-250";
    out.push_back({"physical_range_empty", build(e), "physical_min", kPhysMin});
  }
  {
    auto e = crafted();
    e.signals[0].phys_max = "abc";
    out.push_back({"non_numeric_physical_max", build(e), "physical_max", kPhysMax});
  }
  {
    auto e = crafted();
    e.signals[0].samples_per_record = "0";
    e.num_records = "0";
    out.push_back({"zero_samples_per_record", build(e), "samples_per_record", kSpr});
  }
  {
    auto b = good;
    b.resize(b.size() - 3);
    out.push_back({"truncated_data_record", b, "data_record", good.size() - 3});
  }
  {
    std::vector<std::uint8_t> b(good.begin(), good.begin() + 300);
    out.push_back({"truncated_signal_header", b, "signal_header", 300});
  }
  {
    auto b = good;
    b[20] = 0xC3;
    out.push_back({"non_ascii_patient", b, "patient", 20});
  }
  return out;
}

}  // namespace fixture
