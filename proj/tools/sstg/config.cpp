// SPDX-License-Identifier: Apache-2.0
#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sstg/errors.hpp"

namespace sstg::cli {

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table{
      {"data.dir", "directory of epoch caches (*.sepc) read by train/cv/eval/explain/features", "data", {"a", "b/c"}},
      {"data.edf_dir", "directory of EDF recordings and hypnograms read by prepare", "edf", {"x", "y/z"}},
      {"data.channel", "EEG channel label to extract", "EEG Fpz-Cz", {"EEG C4-A1", "EEG Pz-Oz"}},
      {"data.hypnogram_format", "hypnogram files: edf (annotation channel) or csv", "edf", {"csv", "edf"}},
      {"data.subjects", "comma-separated subject ids to use; empty uses every cache", "", {"s1", "s1,s2"}},
      {"data.norm", "per-recording normalization: none, zscore_per_recording, zscore_per_epoch",
       "zscore_per_recording", {"none", "zscore_per_epoch"}},
      {"output.dir", "directory for every artifact a command writes", "out", {"o1", "o2/run"}},
      {"output.checkpoint", "checkpoint read by eval/explain/features; empty means <output.dir>/model.sstg", "",
       {"m.sstg", "ck/m2.sstg"}},
      {"synth.subjects", "synthetic subjects to generate", "8", {"2", "4"}},
      {"synth.epochs", "30 s epochs per synthetic subject", "120", {"20", "40"}},
      {"synth.rate", "synthetic sample rate in Hz (above 28 to carry 14 Hz spindles)", "32", {"100", "50"}},
      {"synth.seed", "synthetic generator seed", "7", {"1", "2"}},
      {"model.variant", "feature extractor: se_resnet_18 or se_resnet_34", "se_resnet_18", {"se_resnet_34", "se_resnet_18"}},
      {"model.width", "channel width multiplier (widths 64,128,256,512 scaled)", "1", {"0.5", "0.25"}},
      {"model.reduction", "squeeze-and-excitation reduction ratio", "16", {"4", "8"}},
      {"model.use_se", "enable squeeze-and-excitation", "true", {"false", "0"}},
      {"model.window", "epochs per input window (odd)", "9", {"3", "5"}},
      {"model.hidden", "LSTM hidden units per direction", "128", {"8", "16"}},
      {"model.depth", "stacked bidirectional LSTM layers", "3", {"1", "2"}},
      {"model.head", "comma-separated head widths; the last is 5", "5", {"16,5", "32,16,5"}},
      {"model.seed", "parameter initialization seed", "0", {"1", "2"}},
      {"train.epochs", "training epochs", "45", {"1", "3"}},
      {"train.batch", "windows per optimizer step", "128", {"16", "32"}},
      {"train.lr", "Adam learning rate", "0.001", {"0.01", "0.0005"}},
      {"train.stride", "training window stride in epochs", "4", {"1", "2"}},
      {"train.seed", "shuffle seed", "0", {"1", "2"}},
      {"train.shuffle", "shuffle windows every epoch", "true", {"false", "0"}},
      {"cv.k", "cross-validation folds over subjects", "20", {"2", "4"}},
      {"cv.seed", "subject split seed; fold f trains with train.seed + f", "0", {"1", "2"}},
      {"cv.jobs", "folds trained in parallel", "1", {"2", "3"}},
      {"cv.checkpoints", "write one checkpoint per fold", "false", {"true", "1"}},
      {"explain.subject", "subject whose epochs explain/features read; empty takes the first cache", "", {"s1", "s2"}},
      {"explain.epochs", "comma-separated epoch indices to explain; empty explains every epoch", "", {"0", "1,2"}},
      {"explain.target", "class to explain: predicted, W, N1, N2, N3 or REM", "predicted", {"N2", "REM"}},
      {"explain.score", "differentiated output: log_prob or logit", "log_prob", {"logit", "log_prob"}},
  };
  return table;
}

const KeySpec* find_key(const std::string& key) {
  for (const auto& k : key_table())
    if (k.key == key) return &k;
  return nullptr;
}

Values parse_config_text(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  Values out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' is outside any [section]");
    for (const auto& [name, value] : body) {
      const std::string key = section + "." + name;
      if (!find_key(key)) throw ConfigError("unknown config key '" + key + "'");
      out[key] = value.get_value<std::string>();
    }
  }
  return out;
}

Values read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string format_config(const Values& values) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : key_table()) {
    auto it = values.find(k.key);
    if (it == values.end()) continue;
    const auto dot = k.key.find('.');
    if (k.key.substr(0, dot) != section) {
      if (!section.empty()) out << '\n';
      section = k.key.substr(0, dot);
      out << '[' << section << "]\n";
    }
    out << k.key.substr(dot + 1) << " = " << it->second << '\n';
  }
  return out.str();
}

Values layer(const Values& file, const Values& flags) {
  Values out;
  for (const auto& k : key_table()) out[k.key] = k.fallback;
  for (const auto* src : {&file, &flags}) {
    for (const auto& [key, value] : *src) {
      if (!find_key(key)) throw ConfigError("unknown config key '" + key + "'");
      out[key] = value;
    }
  }
  return out;
}

namespace {

class Reader {
 public:
  explicit Reader(const Values& v) : v_(v) {}

  const std::string& text(const std::string& key) const { return v_.at(key); }

  template <typename T>
  T number(const std::string& key, T lo) const {
    const auto& s = text(key);
    T out{};
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size()) fail(key, "expected a number");
    if (out < lo) fail(key, "must be at least " + std::to_string(lo));
    return out;
  }

  bool flag(const std::string& key) const {
    std::string s = text(key);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    fail(key, "expected true or false");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text(key));
    while (std::getline(in, item, ',')) {
      const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
      if (b == std::string::npos) fail(key, "empty list item");
      out.push_back(item.substr(b, e - b + 1));
    }
    return out;
  }

  std::vector<std::size_t> sizes(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& s : list(key)) {
      std::size_t v = 0;
      auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || end != s.data() + s.size()) fail(key, "expected comma-separated integers");
      out.push_back(v);
    }
    return out;
  }

  template <typename F>
  auto checked(const std::string& key, F&& f) const {
    try {
      return f(text(key));
    } catch (const ConfigError& e) {
      fail(key, e.what());
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(key + " = '" + text(key) + "': " + why);
  }

 private:
  const Values& v_;
};

std::size_t stage_index(const std::string& s) {
  const auto st = data::map_stage_label(s);
  if (st == data::Stage::EXCLUDED) throw ConfigError("not a sleep stage");
  return data::index_of(st);
}

}  // namespace

RunConfig resolve(const Values& layered) {
  const Values v = layer({}, layered);
  Reader r(v);
  RunConfig c;
  c.values = v;

  c.data_dir = r.text("data.dir");
  c.edf_dir = r.text("data.edf_dir");
  c.channel = r.text("data.channel");
  if (c.channel.empty()) r.fail("data.channel", "must not be empty");
  c.hypnogram_format = r.text("data.hypnogram_format");
  if (c.hypnogram_format != "edf" && c.hypnogram_format != "csv") r.fail("data.hypnogram_format", "expected edf or csv");
  c.subjects = r.list("data.subjects");
  c.norm = r.checked("data.norm", data::norm_scheme_from_string);
  c.out_dir = r.text("output.dir");
  if (c.out_dir.empty()) r.fail("output.dir", "must not be empty");
  c.checkpoint = r.text("output.checkpoint");
  if (c.checkpoint.empty()) c.checkpoint = c.out_dir / "model.sstg";

  c.synth_subjects = r.number<std::size_t>("synth.subjects", 1);
  c.synth_epochs = r.number<std::size_t>("synth.epochs", 1);
  c.synth_rate = r.number<double>("synth.rate", 1.0);
  if (c.synth_rate <= 28.0) r.fail("synth.rate", "must exceed 28 Hz");
  r.checked("synth.rate", [&](const std::string&) { return data::epoch_samples_for(c.synth_rate); });
  c.synth_seed = r.number<std::uint64_t>("synth.seed", 0);

  auto& m = c.model;
  const auto variant = r.checked("model.variant", nn::variant_from_string);
  const double width = r.number<double>("model.width", 0.0);
  const auto reduction = r.number<std::size_t>("model.reduction", 1);
  m.extractor = nn::FeatureExtractorConfig::for_variant(variant, width, reduction);
  m.extractor.use_se = r.flag("model.use_se");
  m.window_size = r.number<std::size_t>("model.window", 1);
  m.lstm_hidden = r.number<std::size_t>("model.hidden", 1);
  m.lstm_depth = r.number<std::size_t>("model.depth", 1);
  m.head = r.sizes("model.head");
  m.seed = r.number<std::uint64_t>("model.seed", 0);

  auto& t = c.train;
  t.epochs = r.number<std::size_t>("train.epochs", 1);
  t.batch_size = r.number<std::size_t>("train.batch", 1);
  t.lr = r.number<double>("train.lr", 0.0);
  t.stride_train = r.number<std::size_t>("train.stride", 1);
  t.seed = r.number<std::uint64_t>("train.seed", 0);
  t.shuffle = r.flag("train.shuffle");
  m.stride_train = t.stride_train;
  t.validate();
  m.validate();

  c.cv_k = r.number<std::size_t>("cv.k", 2);
  c.cv_seed = r.number<std::uint64_t>("cv.seed", 0);
  c.cv_jobs = r.number<std::size_t>("cv.jobs", 1);
  c.cv_checkpoints = r.flag("cv.checkpoints");

  c.explain_subject = r.text("explain.subject");
  c.explain_epochs = r.sizes("explain.epochs");
  if (r.text("explain.target") != "predicted") c.explain_target = r.checked("explain.target", stage_index);
  const auto& score = r.text("explain.score");
  if (score == "logit") {
    c.explain_score = model::ScoreKind::logit;
  } else if (score != "log_prob") {
    r.fail("explain.score", "expected log_prob or logit");
  }
  return c;
}

}  // namespace sstg::cli
