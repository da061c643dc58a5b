// SPDX-License-Identifier: Apache-2.0
#include "sstg/data/hypnogram.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <string>

#include "sstg/errors.hpp"

namespace sstg::data {

namespace {

std::size_t grid_epochs(double seconds, const char* what, const Annotation& a) {
  const double k = seconds / kEpochSeconds;
  if (!(k >= 0.0) || std::abs(k - std::round(k)) > 1e-6) {
    throw AnnotationError(std::string(what) + " " + std::to_string(seconds) + " s of '" + a.text +
                          "' is not a multiple of 30 s");
  }
  return static_cast<std::size_t>(std::llround(k));
}

bool names_exclusion(std::string_view text) {
  std::string s(text);
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s.find("MOVEMENT") != std::string::npos || s.find('?') != std::string::npos ||
         s.find("UNKNOWN") != std::string::npos;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view v, double& out) {
  v = trim(v);
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  return !v.empty() && ec == std::errc() && p == v.data() + v.size();
}

}  // namespace

Hypnogram hypnogram_from_annotations(std::vector<Annotation> notes) {
  std::erase_if(notes, [](const Annotation& a) { return a.duration == 0.0; });
  std::stable_sort(notes.begin(), notes.end(),
                   [](const Annotation& a, const Annotation& b) { return a.onset < b.onset; });
  Hypnogram h;
  for (const auto& a : notes) {
    if (a.duration < 0.0) throw AnnotationError("negative duration for '" + a.text + "'");
    const std::size_t start = grid_epochs(a.onset, "onset", a);
    const std::size_t count = grid_epochs(a.duration, "duration", a);
    if (start < h.labels.size()) {
      throw AnnotationError("annotation '" + a.text + "' at " + std::to_string(a.onset) +
                            " s overlaps the previous one");
    }
    h.labels.resize(start, Stage::EXCLUDED);
    const Stage s = map_stage_label(a.text);
    if (s == Stage::EXCLUDED && !names_exclusion(a.text)) ++h.unrecognized;
    h.labels.insert(h.labels.end(), count, s);
  }
  return h;
}

Hypnogram parse_hypnogram_csv(std::string_view text) {
  std::vector<Annotation> notes;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    Annotation a;
    const bool ok = c2 != std::string_view::npos && parse_double(line.substr(0, c1), a.onset) &&
                    parse_double(line.substr(c1 + 1, c2 - c1 - 1), a.duration);
    if (!ok) {
      if (notes.empty() && line_no == 1) continue;  // header
      throw AnnotationError("hypnogram line " + std::to_string(line_no) + ": expected onset,duration,stage");
    }
    a.text = std::string(trim(line.substr(c2 + 1)));
    notes.push_back(std::move(a));
  }
  return hypnogram_from_annotations(std::move(notes));
}

Hypnogram parse_hypnogram_edf(const EdfRecording& rec) { return hypnogram_from_annotations(edf_annotations(rec)); }

}  // namespace sstg::data
