// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "sstg/errors.hpp"

namespace sstg::cli {

namespace {

struct Command {
  const char* name;
  const char* help;
  void (*fn)(const RunConfig&);
};

constexpr Command kCommands[] = {
    {"prepare", "EDF recordings + hypnograms -> epoch caches and manifest.json", cmd_prepare},
    {"synth", "write synthetic epoch caches and manifest.json", cmd_synth},
    {"train", "train on every cache -> model.sstg and loss.json", cmd_train},
    {"cv", "subject-wise k-fold cross-validation -> cv.json", cmd_cv},
    {"eval", "score a checkpoint on caches (stride 1, replicate edges) -> metrics.json", cmd_eval},
    {"explain", "GradCAM heatmaps (CSV + SVG) for chosen epochs -> explain.json", cmd_explain},
    {"features", "per-epoch extractor features -> features_<subject>.csv", cmd_features},
};

// Short spellings for the most common keys.
const std::pair<const char*, const char*> kAliases[] = {
    {"--edf-dir", "data.edf_dir"},   {"--channel", "data.channel"}, {"--hypnogram-format", "data.hypnogram_format"},
    {"--data", "data.dir"},          {"--out", "output.dir"},       {"--checkpoint", "output.checkpoint"},
    {"--jobs", "cv.jobs"},           {"--k", "cv.k"},               {"--seed", "model.seed"},
    {"--epochs", "explain.epochs"},
};

std::string key_footer() {
  std::string s = "Config keys (file: [section] name = value; flag: --section.name):\n";
  for (const auto& k : key_table()) s += "  " + k.key + " (default '" + k.fallback + "'): " + k.help + "\n";
  return s;
}

}  // namespace

std::variant<Invocation, int> parse_invocation(int argc, const char* const* argv) {
  CLI::App app{"Single-channel EEG sleep staging: SE-ResNet features + BiLSTM over epoch windows", "sstg"};
  app.require_subcommand(1);
  app.footer(key_footer());
  app.set_version_flag("--version", "sstg 0.1.0");

  std::string config_file;
  std::map<std::string, std::string> raw;
  for (const auto& cmd : kCommands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->footer(key_footer());
    sub->add_option("--config", config_file, "INI config file; flags override it")->check(CLI::ExistingFile);
    for (const auto& k : key_table()) sub->add_option("--" + k.key, raw[k.key], k.help)->default_str(k.fallback);
    for (const auto& [flag, key] : kAliases) {
      sub->add_option(flag, raw[std::string(key) + "#alias"], std::string("same as --") + key);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto* sub = app.get_subcommands().front();
  Values flags;
  for (const auto& k : key_table())
    if (sub->count("--" + k.key) > 0) flags[k.key] = raw[k.key];
  for (const auto& [flag, key] : kAliases) {
    if (sub->count(flag) == 0) continue;
    if (flags.count(key)) throw ConfigError(std::string(flag) + " and --" + key + " both given");
    flags[key] = raw[std::string(key) + "#alias"];
  }
  Values file;
  if (!config_file.empty()) file = read_config_file(config_file);
  return Invocation{sub->get_name(), layer(file, flags)};
}

int run(int argc, char** argv) {
  try {
    auto parsed = parse_invocation(argc, argv);
    if (const int* code = std::get_if<int>(&parsed)) return *code;
    const auto& inv = std::get<Invocation>(parsed);
    const RunConfig cfg = resolve(inv.values);
    for (const auto& cmd : kCommands)
      if (inv.command == cmd.name) cmd.fn(cfg);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const InvalidInput& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace sstg::cli
