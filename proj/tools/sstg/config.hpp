// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sstg/data/epochs.hpp"
#include "sstg/model/stager.hpp"
#include "sstg/train/trainer.hpp"

namespace sstg::cli {

/// One configuration key. Keys are "section.name"; the config file writes
/// them as `name = value` under `[section]`, flags as `--section.name`.
struct KeySpec {
  std::string key;
  std::string help;
  std::string fallback;              // default, as text
  std::vector<std::string> samples;  // two valid non-default values, for tests
};

const std::vector<KeySpec>& key_table();
const KeySpec* find_key(const std::string& key);

using Values = std::map<std::string, std::string>;

/// Reads an INI file; unknown sections or keys throw ConfigError naming them.
Values read_config_file(const std::filesystem::path& path);
Values parse_config_text(const std::string& text);
std::string format_config(const Values& values);

/// defaults < file < flags.
Values layer(const Values& file, const Values& flags);

struct RunConfig {
  // data
  std::filesystem::path data_dir;
  std::filesystem::path edf_dir;
  std::string channel;
  std::string hypnogram_format;
  std::vector<std::string> subjects;
  data::NormScheme norm = data::NormScheme::zscore_per_recording;
  // output
  std::filesystem::path out_dir;
  std::filesystem::path checkpoint;
  // synth
  std::size_t synth_subjects = 0;
  std::size_t synth_epochs = 0;
  double synth_rate = 0.0;
  std::uint64_t synth_seed = 0;
  // model / train
  model::StagerConfig model;
  train::TrainConfig train;
  // cv
  std::size_t cv_k = 0;
  std::uint64_t cv_seed = 0;
  std::size_t cv_jobs = 1;
  bool cv_checkpoints = false;
  // explain
  std::string explain_subject;
  std::vector<std::size_t> explain_epochs;
  std::optional<std::size_t> explain_target;
  model::ScoreKind explain_score = model::ScoreKind::log_prob;

  Values values;  // the resolved text of every key
};

/// Validates every key before any work starts; throws ConfigError.
RunConfig resolve(const Values& layered);

}  // namespace sstg::cli
