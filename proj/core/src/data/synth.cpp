// SPDX-License-Identifier: Apache-2.0
#include "sstg/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "sstg/errors.hpp"
#include "sstg/util/rng.hpp"

namespace sstg::data {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<Stage> stage_sequence(std::size_t n, Rng& rng) {
  std::vector<Stage> seq;
  auto dwell = [&](Stage s, int lo, int hi) {
    const auto len = static_cast<std::size_t>(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))));
    seq.insert(seq.end(), len, s);
  };
  dwell(Stage::W, 3, 8);
  while (seq.size() < n) {
    dwell(Stage::N1, 2, 4);
    dwell(Stage::N2, 5, 10);
    dwell(Stage::N3, 4, 9);
    dwell(Stage::N2, 3, 6);
    dwell(Stage::REM, 4, 9);
    if (rng.uniform() < 0.5) dwell(Stage::W, 2, 4);
  }
  seq.resize(n);
  return seq;
}

// Kellet's pink filter, normalized to unit standard deviation.
std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = rng.normal();
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    out[i] = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
    b6 = w * 0.115926;
  }
  double mean = 0.0, var = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(n);
  for (double v : out) var += (v - mean) * (v - mean);
  const double inv = 1.0 / std::sqrt(var / static_cast<double>(n));
  for (double& v : out) v = (v - mean) * inv;
  return out;
}

struct Subject {
  double background;  // pink-noise std
  double gain;        // overall signature scale
  double alpha_center;
};

void add_tone(std::span<double> x, double rate, double freq, double amp, double phase) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += amp * std::sin(kTwoPi * freq * static_cast<double>(i) / rate + phase);
}

void add_theta(std::span<double> x, double rate, double gain, Rng& rng) {
  for (int k = 0; k < 3; ++k) add_tone(x, rate, rng.uniform(4.0, 7.0), gain * rng.uniform(4.0, 7.0), rng.uniform(0.0, kTwoPi));
}

void add_n2_events(std::span<double> x, double rate, double gain, Rng& rng, std::vector<EventInterval>& events) {
  const double len = static_cast<double>(x.size()) / rate;
  const double sp_dur = rng.uniform(0.5, 1.5);
  const double kc_dur = rng.uniform(0.6, 1.0);
  // Keep the two events at least 1 s apart and 1 s from the epoch edges.
  double sp_on, kc_on;
  do {
    sp_on = rng.uniform(1.0, len - 1.0 - sp_dur);
    kc_on = rng.uniform(1.0, len - 1.0 - kc_dur);
  } while (kc_on < sp_on + sp_dur + 1.0 && sp_on < kc_on + kc_dur + 1.0);

  const double sp_freq = rng.uniform(12.0, 14.0);
  const double sp_amp = gain * rng.uniform(35.0, 45.0);
  const double sp_phase = rng.uniform(0.0, kTwoPi);
  const double kc_amp = gain * rng.uniform(60.0, 90.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    if (t >= sp_on && t < sp_on + sp_dur) {
      const double u = (t - sp_on) / sp_dur;
      const double env = 0.5 - 0.5 * std::cos(kTwoPi * u);
      x[i] += sp_amp * env * std::sin(kTwoPi * sp_freq * (t - sp_on) + sp_phase);
    }
    if (t >= kc_on && t < kc_on + kc_dur) {
      // Sharp negative deflection followed by a slower positive one.
      const double u = (t - kc_on) / kc_dur;
      x[i] += u < 0.4 ? -kc_amp * std::sin(std::numbers::pi * u / 0.4)
                      : 0.6 * kc_amp * std::sin(std::numbers::pi * (u - 0.4) / 0.6);
    }
  }
  events.push_back({"spindle", sp_on, sp_on + sp_dur});
  events.push_back({"k_complex", kc_on, kc_on + kc_dur});
}

void add_signature(Stage s, std::span<double> x, double rate, const Subject& subj, Rng& rng,
                   std::vector<EventInterval>& events) {
  const double g = subj.gain;
  switch (s) {
    case Stage::W: {
      const double f = std::clamp(subj.alpha_center + rng.uniform(-0.7, 0.7), 8.0, 12.0);
      const double amp = g * rng.uniform(18.0, 24.0);
      const double phase = rng.uniform(0.0, kTwoPi);
      const double wander = rng.uniform(0.05, 0.15), wphase = rng.uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / rate;
        x[i] += amp * (1.0 + 0.2 * std::sin(kTwoPi * wander * t + wphase)) * std::sin(kTwoPi * f * t + phase);
      }
      break;
    }
    case Stage::N1:
      add_theta(x, rate, g, rng);
      break;
    case Stage::N2:
      add_n2_events(x, rate, g, rng, events);
      break;
    case Stage::N3:
      for (int k = 0; k < 3; ++k) add_tone(x, rate, rng.uniform(0.5, 2.0), g * rng.uniform(25.0, 35.0), rng.uniform(0.0, kTwoPi));
      break;
    case Stage::REM: {
      std::vector<double> tones(x.size(), 0.0);
      add_tone(tones, rate, rng.uniform(2.0, 4.0), g * rng.uniform(6.0, 9.0), rng.uniform(0.0, kTwoPi));
      add_tone(tones, rate, rng.uniform(4.0, 8.0), g * rng.uniform(4.0, 7.0), rng.uniform(0.0, kTwoPi));
      add_tone(tones, rate, rng.uniform(2.0, 8.0), g * rng.uniform(4.0, 7.0), rng.uniform(0.0, kTwoPi));
      const double fm = rng.uniform(0.2, 0.5), pm = rng.uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / rate;
        x[i] += (0.55 + 0.45 * std::sin(kTwoPi * fm * t + pm)) * tones[i];
      }
      break;
    }
    case Stage::EXCLUDED:
      break;
  }
}

}  // namespace

std::vector<EpochSet> synth_generate(std::size_t n_subjects, std::size_t epochs_per_subject, double sample_rate,
                                     std::uint64_t seed) {
  if (n_subjects == 0 || epochs_per_subject == 0) throw ConfigError("synthetic counts must be >= 1");
  const std::size_t l = epoch_samples_for(sample_rate);
  if (sample_rate <= 2.0 * 14.0) {
    throw ConfigError("synthetic sample rate must exceed 28 Hz to carry 12-14 Hz spindles");
  }
  std::vector<EpochSet> out;
  for (std::size_t s = 0; s < n_subjects; ++s) {
    Rng rng(mix(seed, s));
    Subject subj{rng.uniform(4.0, 6.0), rng.uniform(0.85, 1.15), rng.uniform(9.0, 11.0)};

    EpochSet es;
    char id[32];
    std::snprintf(id, sizeof id, "synth%02zu", s);
    es.subject_id = id;
    es.channel = "synthetic";
    es.sample_rate = sample_rate;
    es.epoch_samples = l;
    es.labels = stage_sequence(epochs_per_subject, rng);
    es.samples = pink_noise(epochs_per_subject * l, rng);
    for (double& v : es.samples) v *= subj.background;
    es.events.resize(epochs_per_subject);
    for (std::size_t e = 0; e < epochs_per_subject; ++e) {
      add_signature(es.labels[e], es.epoch(e), sample_rate, subj, rng, es.events[e]);
    }
    for (double& v : es.samples) v = static_cast<double>(static_cast<float>(v));
    out.push_back(std::move(es));
  }
  return out;
}

}  // namespace sstg::data
