// SPDX-License-Identifier: Apache-2.0
#include "sstg/explain/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "sstg/errors.hpp"

namespace sstg::explain {

std::vector<double> gradcam_raw(std::span<const double> activations, std::span<const double> gradients,
                                std::size_t channels, std::size_t length) {
  if (activations.size() != channels * length || gradients.size() != channels * length) {
    throw ShapeError("gradcam: activations and gradients must both be [C, T]");
  }
  std::vector<double> m(length, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    double w = 0.0;
    for (std::size_t t = 0; t < length; ++t) w += gradients[c * length + t];
    w /= static_cast<double>(length);
    for (std::size_t t = 0; t < length; ++t) m[t] += w * activations[c * length + t];
  }
  for (double& v : m) v = std::max(v, 0.0);
  return m;
}

std::vector<double> upsample_linear(std::span<const double> raw, std::size_t length) {
  if (raw.empty() || length == 0) throw InvalidShape("upsample_linear: empty input");
  std::vector<double> out(length);
  const double scale = static_cast<double>(raw.size()) / static_cast<double>(length);
  const double last = static_cast<double>(raw.size() - 1);
  for (std::size_t i = 0; i < length; ++i) {
    const double x = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, last);
    const auto lo = static_cast<std::size_t>(x);
    const std::size_t hi = std::min(lo + 1, raw.size() - 1);
    const double f = x - static_cast<double>(lo);
    out[i] = raw[lo] * (1.0 - f) + raw[hi] * f;
  }
  return out;
}

Heatmap normalize_map(std::span<const double> upsampled, double raw_max) {
  Heatmap h;
  h.raw_max = raw_max;
  h.values.assign(upsampled.size(), 0.0);
  if (raw_max <= 0.0) {
    h.all_zero = true;
    return h;
  }
  const auto [lo, hi] = std::minmax_element(upsampled.begin(), upsampled.end());
  const double span = *hi - *lo;
  for (std::size_t i = 0; i < upsampled.size(); ++i) {
    h.values[i] = span > 0.0 ? (upsampled[i] - *lo) / span : 1.0;
  }
  return h;
}

Heatmap gradcam(model::Stager& model, const ad::Tensor& window, std::optional<std::size_t> target,
                model::ScoreKind score) {
  ad::Tape tape;
  nn::Registry reg = model.registry();
  for (const auto& p : reg.params()) tape.freeze(p.tensor);
  auto out = model.forward_window(tape, window, ad::NormMode::eval);
  const std::size_t predicted = model::argmax(out.log_probs.values());
  const std::size_t cls = target.value_or(predicted);
  if (cls >= model.config().num_classes) throw InvalidLabel("gradcam target out of range");
  const ad::Tensor& head = score == model::ScoreKind::log_prob ? out.log_probs : out.logits;
  tape.backward(ad::element(tape, head, cls));

  const ad::Tensor& a = out.middle_activations;
  const std::vector<double> g = a.grad();
  const auto raw = gradcam_raw(a.values(), g, a.dim(0), a.dim(1));
  const double raw_max = *std::max_element(raw.begin(), raw.end());
  Heatmap h = normalize_map(upsample_linear(raw, model.config().epoch_samples()), raw_max);
  h.target = cls;
  h.predicted = predicted;
  return h;
}

double mass_within(const Heatmap& h, double sample_rate, double start_s, double end_s) {
  double inside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    total += h.values[i];
    if (t >= start_s && t < end_s) inside += h.values[i];
  }
  return total > 0.0 ? inside / total : 0.0;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fixed(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::pair<std::filesystem::path, std::filesystem::path> render_heatmap(const Heatmap& h,
                                                                       std::span<const double> signal,
                                                                       const std::filesystem::path& stem) {
  if (signal.size() != h.values.size()) {
    throw ShapeError("render_heatmap: signal has " + std::to_string(signal.size()) + " samples, heatmap " +
                     std::to_string(h.values.size()));
  }
  auto csv_path = stem;
  csv_path += ".csv";
  auto svg_path = stem;
  svg_path += ".svg";

  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "sample_index,signal,relevance\n";
  for (std::size_t i = 0; i < signal.size(); ++i) csv << i << ',' << num(signal[i]) << ',' << num(h.values[i]) << '\n';
  if (!csv) throw IoError("write failed: " + csv_path.string());

  constexpr double width = 1200.0, height = 260.0, pad = 10.0;
  const std::size_t n = signal.size();
  const auto [lo, hi] = std::minmax_element(signal.begin(), signal.end());
  const double range = *hi > *lo ? *hi - *lo : 1.0;
  auto x_of = [&](double i) { return pad + (width - 2 * pad) * i / static_cast<double>(n); };
  auto y_of = [&](double v) { return pad + (height - 2 * pad) * (1.0 - (v - *lo) / range); };

  std::ofstream svg(svg_path, std::ios::binary | std::ios::trunc);
  if (!svg) throw IoError("cannot write " + svg_path.string());
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  constexpr std::size_t kBands = 300;
  svg << "<g id=\"relevance\">\n";
  for (std::size_t b = 0; b < kBands; ++b) {
    const std::size_t from = b * n / kBands, to = (b + 1) * n / kBands;
    if (to <= from) continue;
    double mean = 0.0;
    for (std::size_t i = from; i < to; ++i) mean += h.values[i];
    mean /= static_cast<double>(to - from);
    if (mean <= 0.005) continue;
    svg << "<rect x=\"" << fixed(x_of(static_cast<double>(from))) << "\" y=\"" << pad << "\" width=\""
        << fixed(x_of(static_cast<double>(to)) - x_of(static_cast<double>(from))) << "\" height=\""
        << height - 2 * pad << "\" fill=\"red\" fill-opacity=\"" << fixed(mean * 0.8) << "\"/>\n";
  }
  svg << "</g>\n<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.8\" points=\"";
  for (std::size_t i = 0; i < n; ++i) {
    svg << fixed(x_of(static_cast<double>(i))) << ',' << fixed(y_of(signal[i])) << (i + 1 < n ? " " : "");
  }
  svg << "\"/>\n</svg>\n";
  if (!svg) throw IoError("write failed: " + svg_path.string());
  return {csv_path, svg_path};
}

}  // namespace sstg::explain
