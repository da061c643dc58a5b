// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "sstg/data/cache.hpp"
#include "sstg/data/edf.hpp"
#include "sstg/data/synth.hpp"
#include "sstg/data/windows.hpp"
#include "sstg/errors.hpp"
#include "sstg/explain/export.hpp"
#include "sstg/explain/gradcam.hpp"
#include "sstg/metrics/metrics.hpp"
#include "sstg/model/checkpoint.hpp"
#include "sstg/train/cross_validate.hpp"

namespace sstg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCacheExt = ".sepc";

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

fs::path prepare_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create " + c.out_dir.string() + ": " + ec.message());
  return c.out_dir;
}

/// Wall-clock times live only in this sidecar so every other output is
/// reproducible byte for byte.
void write_timing(const RunConfig& c, const std::string& command, double seconds, json extra = json::object()) {
  extra["command"] = command;
  extra["seconds"] = seconds;
  write_json(c.out_dir / "timing.json", extra);
}

json stage_counts(const std::array<std::size_t, data::kNumStages>& h) {
  json j = json::object();
  std::size_t total = 0;
  for (std::size_t k = 0; k < data::kNumStages; ++k) {
    j[std::string(data::stage_name(data::kStages[k]))] = h[k];
    total += h[k];
  }
  j["Total"] = total;
  return j;
}

json manifest_entry(const data::EpochSet& es, const std::string& file) {
  return {{"id", es.subject_id},
          {"file", file},
          {"channel", es.channel},
          {"sample_rate", es.sample_rate},
          {"epochs", stage_counts(data::stage_histogram(es))}};
}

void write_manifest(const RunConfig& c, const std::vector<data::EpochSet>& sets, json failed) {
  json subjects = json::array();
  std::array<std::size_t, data::kNumStages> total{};
  for (const auto& es : sets) {
    subjects.push_back(manifest_entry(es, es.subject_id + kCacheExt));
    const auto h = data::stage_histogram(es);
    for (std::size_t k = 0; k < data::kNumStages; ++k) total[k] += h[k];
  }
  write_json(c.out_dir / "manifest.json",
             {{"subjects", subjects}, {"total", stage_counts(total)}, {"failed", std::move(failed)}});
}

std::vector<data::EpochSet> load_caches(const RunConfig& c) {
  if (!fs::is_directory(c.data_dir)) throw IoError("data.dir '" + c.data_dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(c.data_dir))
    if (e.is_regular_file() && e.path().extension() == kCacheExt) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  const std::set<std::string> wanted(c.subjects.begin(), c.subjects.end());
  std::vector<data::EpochSet> sets;
  std::set<std::string> found;
  for (const auto& f : files) {
    auto es = data::read_epoch_set(f);
    if (!wanted.empty() && !wanted.count(es.subject_id)) continue;
    found.insert(es.subject_id);
    sets.push_back(data::normalize_recording(std::move(es), c.norm));
  }
  for (const auto& w : wanted)
    if (!found.count(w)) throw EmptyDataset("subject '" + w + "' has no cache in " + c.data_dir.string());
  if (sets.empty()) throw EmptyDataset("no epoch caches in " + c.data_dir.string());
  for (const auto& es : sets) {
    if (es.sample_rate != sets.front().sample_rate) {
      throw DataError("caches mix sample rates: " + sets.front().subject_id + " and " + es.subject_id);
    }
  }
  return sets;
}

model::StagerConfig model_for(const RunConfig& c, const std::vector<data::EpochSet>& sets) {
  auto m = c.model;
  m.sample_rate = sets.front().sample_rate;
  m.validate();
  return m;
}

std::vector<std::string> ids_of(const std::vector<data::EpochSet>& sets) {
  std::vector<std::string> out;
  for (const auto& es : sets) out.push_back(es.subject_id);
  return out;
}

void check_rate(model::Stager& m, const std::vector<data::EpochSet>& sets) {
  for (const auto& es : sets) {
    if (es.epoch_samples != m.config().epoch_samples()) {
      throw ShapeError("subject '" + es.subject_id + "' has " + std::to_string(es.epoch_samples) +
                       " samples per epoch; the checkpoint expects " + std::to_string(m.config().epoch_samples()));
    }
  }
}

/// Sleep-EDF pairs "SC4001E0-PSG.edf" with "SC4001EC-Hypnogram.edf": stems
/// before the first '-' agree on everything but their last two characters.
bool same_recording(const std::string& a, const std::string& b) {
  auto stem = [](const std::string& s) { return s.substr(0, s.find('-')); };
  const auto sa = stem(a), sb = stem(b);
  if (sa == sb) return true;
  if (sa.size() != sb.size() || sa.size() <= 2) return false;
  return sa.compare(0, sa.size() - 2, sb, 0, sb.size() - 2) == 0;
}

bool is_hypnogram(const fs::path& p) {
  std::string n = p.filename().string();
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return n.find("hypnogram") != std::string::npos;
}

const data::EpochSet& pick_subject(const RunConfig& c, const std::vector<data::EpochSet>& sets) {
  if (c.explain_subject.empty()) return sets.front();
  for (const auto& es : sets)
    if (es.subject_id == c.explain_subject) return es;
  throw EmptyDataset("explain.subject '" + c.explain_subject + "' not found in " + c.data_dir.string());
}

}  // namespace

void cmd_prepare(const RunConfig& c) {
  Stopwatch clock;
  if (!fs::is_directory(c.edf_dir)) throw IoError("data.edf_dir '" + c.edf_dir.string() + "' is not a directory");
  const std::string hyp_ext = c.hypnogram_format == "csv" ? ".csv" : ".edf";
  std::vector<fs::path> signals, hypnograms;
  for (const auto& e : fs::directory_iterator(c.edf_dir)) {
    if (!e.is_regular_file()) continue;
    const auto& p = e.path();
    if (is_hypnogram(p) && p.extension() == hyp_ext) {
      hypnograms.push_back(p);
    } else if (p.extension() == ".edf" && !is_hypnogram(p)) {
      signals.push_back(p);
    }
  }
  std::sort(signals.begin(), signals.end());
  std::sort(hypnograms.begin(), hypnograms.end());
  prepare_out(c);
  std::vector<data::EpochSet> done;
  json failed = json::array();
  for (const auto& sig : signals) {
    const std::string name = sig.filename().string();
    try {
      auto hyp = std::find_if(hypnograms.begin(), hypnograms.end(),
                              [&](const fs::path& h) { return same_recording(name, h.filename().string()); });
      if (hyp == hypnograms.end()) throw DataError("no hypnogram pairs with " + name);
      const auto rec = data::read_edf(sig);
      data::Hypnogram h;
      if (c.hypnogram_format == "csv") {
        const auto bytes = data::read_file(*hyp);
        h = data::parse_hypnogram_csv(std::string(bytes.begin(), bytes.end()));
      } else {
        h = data::parse_hypnogram_edf(data::read_edf(*hyp));
      }
      const std::string id = name.substr(0, name.find('-'));
      auto es = data::epochize(rec, c.channel, h, id);
      data::write_epoch_set(es, c.out_dir / (id + kCacheExt));
      if (h.unrecognized > 0) {
        std::cerr << name << ": " << h.unrecognized << " unrecognized annotation(s) treated as excluded\n";
      }
      done.push_back(std::move(es));
    } catch (const Error& e) {
      std::cerr << "skipping " << name << ": " << e.what() << '\n';
      failed.push_back({{"file", name}, {"error", e.what()}});
    }
  }
  write_manifest(c, done, failed);
  write_timing(c, "prepare", clock.seconds());
  if (done.empty()) throw EmptyDataset("no recording in " + c.edf_dir.string() + " could be prepared");
}

void cmd_synth(const RunConfig& c) {
  Stopwatch clock;
  prepare_out(c);
  const auto sets = data::synth_generate(c.synth_subjects, c.synth_epochs, c.synth_rate, c.synth_seed);
  for (const auto& es : sets) data::write_epoch_set(es, c.out_dir / (es.subject_id + kCacheExt));
  write_manifest(c, sets, json::array());
  write_timing(c, "synth", clock.seconds());
}

void cmd_train(const RunConfig& c) {
  const auto sets = load_caches(c);
  const auto mcfg = model_for(c, sets);
  prepare_out(c);
  Stopwatch clock;
  auto fit = train::fit(sets, c.train, mcfg);
  const double seconds = clock.seconds();
  model::save_checkpoint(fit.model, c.out_dir / "model.sstg");
  write_json(c.out_dir / "loss.json", {{"loss_history", fit.loss_history},
                                       {"windows_per_epoch", fit.windows_per_epoch},
                                       {"steps", fit.steps},
                                       {"subjects", ids_of(sets)},
                                       {"model", mcfg.to_json()},
                                       {"train", c.train.to_json()}});
  write_timing(c, "train", seconds,
               {{"windows_per_epoch", fit.windows_per_epoch}, {"seconds_per_epoch", seconds / c.train.epochs}});
}

void cmd_cv(const RunConfig& c) {
  const auto sets = load_caches(c);
  train::CvConfig cv;
  cv.k = c.cv_k;
  cv.seed = c.cv_seed;
  cv.jobs = c.cv_jobs;
  cv.train = c.train;
  cv.model = model_for(c, sets);
  prepare_out(c);
  if (c.cv_checkpoints) cv.checkpoint_dir = c.out_dir / "folds";
  Stopwatch clock;
  const auto result = train::cross_validate(sets, cv);
  auto j = result.to_json(false);
  j["model"] = cv.model.to_json();
  j["train"] = c.train.to_json();
  j["k"] = c.cv_k;
  write_json(c.out_dir / "cv.json", j);
  json folds = json::array();
  for (const auto& f : result.folds) folds.push_back({{"fold", f.fold}, {"seconds", f.seconds}});
  write_timing(c, "cv", clock.seconds(), {{"folds", folds}});
}

void cmd_eval(const RunConfig& c) {
  Stopwatch clock;
  auto model = model::load_checkpoint(c.checkpoint);
  const auto sets = load_caches(c);
  check_rate(model, sets);
  const auto ev = train::evaluate(model, sets);
  auto j = metrics::metrics_report(ev.confusion);
  j["checkpoint"] = c.checkpoint.filename().string();
  j["subjects"] = ids_of(sets);
  json preds = json::object();
  for (std::size_t i = 0; i < sets.size(); ++i) preds[sets[i].subject_id] = ev.predictions[i];
  j["predictions"] = preds;
  prepare_out(c);
  write_json(c.out_dir / "metrics.json", j);
  write_timing(c, "eval", clock.seconds());
}

void cmd_explain(const RunConfig& c) {
  Stopwatch clock;
  auto model = model::load_checkpoint(c.checkpoint);
  const auto sets = load_caches(c);
  const auto& es = pick_subject(c, sets);
  check_rate(model, {es});
  std::vector<std::size_t> epochs = c.explain_epochs;
  if (epochs.empty()) {
    epochs.resize(es.size());
    for (std::size_t i = 0; i < es.size(); ++i) epochs[i] = i;
  }
  prepare_out(c);
  const fs::path dir = c.out_dir / "heatmaps";
  fs::create_directories(dir);
  const data::WindowView view(es.size(), model.config().window_size, 1, data::EdgePolicy::replicate);
  json items = json::array();
  for (auto i : epochs) {
    if (i >= es.size()) {
      throw InvalidInput("explain.epochs: epoch " + std::to_string(i) + " is past the " +
                         std::to_string(es.size()) + " epochs of " + es.subject_id);
    }
    std::vector<double> v;
    for (auto j : view.indices(i)) {
      auto e = es.epoch(j);
      v.insert(v.end(), e.begin(), e.end());
    }
    const ad::Tensor window({model.config().window_size, 1, es.epoch_samples}, std::move(v));
    const auto h = explain::gradcam(model, window, c.explain_target, c.explain_score);
    const auto stem = es.subject_id + "_e" + std::to_string(i);
    explain::render_heatmap(h, es.epoch(i), dir / stem);
    json item{{"epoch", i},
              {"label", data::stage_name(es.labels[i])},
              {"target", data::stage_name(data::kStages[h.target])},
              {"predicted", data::stage_name(data::kStages[h.predicted])},
              {"raw_max", h.raw_max},
              {"all_zero", h.all_zero},
              {"csv", "heatmaps/" + stem + ".csv"},
              {"svg", "heatmaps/" + stem + ".svg"}};
    if (!es.events.empty()) {
      json events = json::array();
      for (const auto& ev : es.events[i]) {
        events.push_back({{"kind", ev.kind},
                          {"start", ev.start},
                          {"end", ev.end},
                          {"mass_within_0_5s", explain::mass_within(h, es.sample_rate, ev.start - 0.5, ev.end + 0.5)}});
      }
      item["events"] = events;
    }
    items.push_back(item);
  }
  write_json(c.out_dir / "explain.json", {{"subject", es.subject_id},
                                          {"score", c.explain_score == model::ScoreKind::logit ? "logit" : "log_prob"},
                                          {"heatmaps", items}});
  write_timing(c, "explain", clock.seconds());
}

void cmd_features(const RunConfig& c) {
  Stopwatch clock;
  auto model = model::load_checkpoint(c.checkpoint);
  const auto sets = load_caches(c);
  check_rate(model, sets);
  prepare_out(c);
  for (const auto& es : sets) {
    if (!c.explain_subject.empty() && es.subject_id != c.explain_subject) continue;
    explain::write_features_csv(explain::export_features(model, es), c.out_dir / ("features_" + es.subject_id + ".csv"));
  }
  write_timing(c, "features", clock.seconds());
}

}  // namespace sstg::cli
