// SPDX-License-Identifier: Apache-2.0
#include "sstg/data/stage.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace sstg::data {

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::W: return "W";
    case Stage::N1: return "N1";
    case Stage::N2: return "N2";
    case Stage::N3: return "N3";
    case Stage::REM: return "REM";
    case Stage::EXCLUDED: return "EXCLUDED";
  }
  return "EXCLUDED";
}

Stage map_stage_label(std::string_view raw) {
  std::string s;
  for (char c : raw) s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  constexpr std::string_view prefix = "SLEEP STAGE ";
  if (s.starts_with(prefix)) s.erase(0, prefix.size());

  if (s == "W" || s == "WAKE") return Stage::W;
  if (s == "1" || s == "N1") return Stage::N1;
  if (s == "2" || s == "N2") return Stage::N2;
  if (s == "3" || s == "4" || s == "N3" || s == "N4") return Stage::N3;
  if (s == "R" || s == "REM") return Stage::REM;
  return Stage::EXCLUDED;
}

}  // namespace sstg::data
