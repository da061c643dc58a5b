// SPDX-License-Identifier: Apache-2.0
#include "sstg/data/epochs.hpp"

#include <algorithm>
#include <cmath>

#include "sstg/errors.hpp"

namespace sstg::data {

std::span<const double> EpochSet::epoch(std::size_t i) const {
  return std::span<const double>(samples).subspan(i * epoch_samples, epoch_samples);
}

std::span<double> EpochSet::epoch(std::size_t i) {
  return std::span<double>(samples).subspan(i * epoch_samples, epoch_samples);
}

void EpochSet::validate() const {
  if (epoch_samples == 0 || epoch_samples != epoch_samples_for(sample_rate)) {
    throw InvalidInput("epoch set '" + subject_id + "': epoch length " + std::to_string(epoch_samples) +
                       " does not match 30 s at " + std::to_string(sample_rate) + " Hz");
  }
  if (samples.size() != labels.size() * epoch_samples) {
    throw InvalidInput("epoch set '" + subject_id + "': sample count does not match labels");
  }
  if (!events.empty() && events.size() != labels.size()) {
    throw InvalidInput("epoch set '" + subject_id + "': event list count does not match labels");
  }
  for (Stage s : labels) {
    if (index_of(s) >= kNumStages) throw InvalidLabel("epoch set '" + subject_id + "' holds an EXCLUDED label");
  }
}

std::size_t epoch_samples_for(double sample_rate) {
  const double l = sample_rate * kEpochSeconds;
  if (!(l >= 1.0) || std::abs(l - std::round(l)) > 1e-9) {
    throw ConfigError("sample rate " + std::to_string(sample_rate) + " Hz gives a non-integer 30 s epoch");
  }
  return static_cast<std::size_t>(std::llround(l));
}

EpochSet epochize(const EdfRecording& rec, const std::string& channel, const Hypnogram& hyp,
                  const std::string& subject_id, std::optional<double> expected_rate) {
  const EdfSignal& sig = rec.signal(channel);
  if (expected_rate && std::abs(*expected_rate - sig.sample_rate) > 1e-9) {
    throw ConfigError("channel '" + channel + "' is sampled at " + std::to_string(sig.sample_rate) +
                      " Hz, configuration expects " + std::to_string(*expected_rate) + " Hz");
  }
  EpochSet es;
  es.subject_id = subject_id;
  es.channel = channel;
  es.sample_rate = sig.sample_rate;
  es.epoch_samples = epoch_samples_for(sig.sample_rate);
  const std::size_t n = std::min(hyp.labels.size(), sig.physical.size() / es.epoch_samples);
  for (std::size_t i = 0; i < n; ++i) {
    if (hyp.labels[i] == Stage::EXCLUDED) continue;
    es.labels.push_back(hyp.labels[i]);
    const auto first = sig.physical.begin() + static_cast<std::ptrdiff_t>(i * es.epoch_samples);
    es.samples.insert(es.samples.end(), first, first + static_cast<std::ptrdiff_t>(es.epoch_samples));
  }
  if (es.labels.empty()) throw EmptyDataset("recording '" + subject_id + "' has no labeled epochs");
  return es;
}

NormScheme norm_scheme_from_string(const std::string& s) {
  if (s == "none") return NormScheme::none;
  if (s == "zscore_per_recording") return NormScheme::zscore_per_recording;
  if (s == "zscore_per_epoch") return NormScheme::zscore_per_epoch;
  throw ConfigError("unknown normalization scheme '" + s + "'");
}

std::string to_string(NormScheme s) {
  switch (s) {
    case NormScheme::none: return "none";
    case NormScheme::zscore_per_recording: return "zscore_per_recording";
    case NormScheme::zscore_per_epoch: return "zscore_per_epoch";
  }
  return "none";
}

namespace {

void zscore(std::span<double> x, const std::string& where) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (x.empty() || *lo == *hi) throw DegenerateSignal(where + ": constant signal cannot be z-scored");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  const double inv = 1.0 / std::sqrt(var);
  for (double& v : x) v = (v - mean) * inv;
}

}  // namespace

EpochSet normalize_recording(EpochSet es, NormScheme scheme) {
  switch (scheme) {
    case NormScheme::none:
      break;
    case NormScheme::zscore_per_recording:
      zscore(es.samples, "recording '" + es.subject_id + "'");
      break;
    case NormScheme::zscore_per_epoch:
      for (std::size_t i = 0; i < es.size(); ++i) {
        zscore(es.epoch(i), "epoch " + std::to_string(i) + " of '" + es.subject_id + "'");
      }
      break;
  }
  return es;
}

std::array<std::size_t, kNumStages> stage_histogram(const EpochSet& es) {
  std::array<std::size_t, kNumStages> h{};
  for (Stage s : es.labels) {
    if (index_of(s) < kNumStages) ++h[index_of(s)];
  }
  return h;
}

}  // namespace sstg::data
