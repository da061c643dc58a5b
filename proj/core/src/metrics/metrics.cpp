// SPDX-License-Identifier: Apache-2.0
#include "sstg/metrics/metrics.hpp"

#include <nlohmann/json.hpp>

#include "sstg/errors.hpp"

namespace sstg::metrics {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

constexpr const char* kNames[K] = {"W", "N1", "N2", "N3", "REM"};

}  // namespace

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= K || predicted >= K) throw InvalidLabel("stage index out of range");
  ++counts[truth][predicted];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts)
    for (auto v : row) n += v;
  return n;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t n = 0;
  for (std::size_t c = 0; c < K; ++c) n += counts[c][c];
  return n;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::uint64_t n = 0;
  for (auto v : counts[c]) n += v;
  return n;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::uint64_t n = 0;
  for (const auto& row : counts) n += row[c];
  return n;
}

std::array<std::array<double, K>, K> ConfusionMatrix::row_normalized() const {
  std::array<std::array<double, K>, K> out{};
  for (std::size_t r = 0; r < K; ++r) {
    const double s = static_cast<double>(row_sum(r));
    for (std::size_t c = 0; c < K; ++c) out[r][c] = ratio(static_cast<double>(counts[r][c]), s);
  }
  return out;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t r = 0; r < K; ++r)
    for (std::size_t c = 0; c < K; ++c) counts[r][c] += other.counts[r][c];
  return *this;
}

ConfusionMatrix confusion_from(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  if (preds.size() != labels.size()) {
    throw InvalidInput("confusion_from: " + std::to_string(preds.size()) + " predictions vs " +
                       std::to_string(labels.size()) + " labels");
  }
  if (preds.empty()) throw InvalidInput("confusion_from: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) cm.add(labels[i], preds[i]);
  return cm;
}

OneVsRest one_vs_rest(const ConfusionMatrix& cm, std::size_t c) {
  OneVsRest o;
  o.tp = cm.counts[c][c];
  o.fn = cm.row_sum(c) - o.tp;
  o.fp = cm.col_sum(c) - o.tp;
  o.tn = cm.total() - o.tp - o.fn - o.fp;
  return o;
}

ClassMetrics class_prf(const ConfusionMatrix& cm, std::size_t c) {
  const auto o = one_vs_rest(cm, c);
  const double tp = static_cast<double>(o.tp), tn = static_cast<double>(o.tn);
  const double fp = static_cast<double>(o.fp), fn = static_cast<double>(o.fn);
  ClassMetrics m;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  m.sensitivity = m.recall;
  m.specificity = ratio(tn, tn + fp);
  m.specificity_printed = ratio(tn, tp + fn);
  m.support = cm.row_sum(c);
  m.present = cm.row_sum(c) + cm.col_sum(c) > 0;
  return m;
}

double kappa_multiclass(const ConfusionMatrix& cm) {
  const std::uint64_t n = cm.total();
  if (n == 0) throw InvalidInput("kappa of an empty confusion matrix");
  std::uint64_t chance = 0;
  for (std::size_t c = 0; c < K; ++c) chance += cm.row_sum(c) * cm.col_sum(c);
  const double total = static_cast<double>(n);
  const double po = static_cast<double>(cm.trace()) / total;
  const double pe = static_cast<double>(chance) / (total * total);
  if (chance == n * n) {
    if (cm.trace() == n) return 1.0;
    throw DegenerateDistribution("kappa undefined: chance agreement is 1 but observed agreement is not");
  }
  return (po - pe) / (1.0 - pe);
}

double kappa_binary_closed_form(double tp, double tn, double fp, double fn) {
  return 2.0 * (tp * tn - fn * fp) / ((tp + fp) * (fp + tn) + (tp + fn) * (fn + tn));
}

OverallMetrics overall_metrics(const ConfusionMatrix& cm) {
  const std::uint64_t n = cm.total();
  if (n == 0) throw InvalidInput("metrics of an empty confusion matrix");
  OverallMetrics m;
  m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(n);
  double f1 = 0.0, sens = 0.0, spec = 0.0, spec_printed = 0.0;
  std::size_t present = 0;
  OneVsRest pooled;
  for (std::size_t c = 0; c < K; ++c) {
    const auto cls = class_prf(cm, c);
    const auto o = one_vs_rest(cm, c);
    pooled.tp += o.tp;
    pooled.tn += o.tn;
    pooled.fp += o.fp;
    pooled.fn += o.fn;
    m.per_class_f1[c] = cls.f1;
    m.present[c] = cls.present;
    if (!cls.present) continue;
    ++present;
    f1 += cls.f1;
    sens += cls.sensitivity;
    spec += cls.specificity;
    spec_printed += cls.specificity_printed;
  }
  const double p = static_cast<double>(present);
  m.mf1 = f1 / p;
  m.macro_sensitivity = sens / p;
  m.macro_specificity = spec / p;
  m.macro_specificity_printed = spec_printed / p;
  m.micro_sensitivity = ratio(static_cast<double>(pooled.tp), static_cast<double>(pooled.tp + pooled.fn));
  m.micro_specificity = ratio(static_cast<double>(pooled.tn), static_cast<double>(pooled.tn + pooled.fp));
  m.kappa = kappa_multiclass(cm);
  return m;
}

nlohmann::json to_json(const ConfusionMatrix& cm) { return cm.counts; }

nlohmann::json metrics_report(const ConfusionMatrix& cm) {
  const auto m = overall_metrics(cm);
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t c = 0; c < K; ++c) {
    const auto cls = class_prf(cm, c);
    per_class[kNames[c]] = {{"precision", cls.precision},
                            {"recall", cls.recall},
                            {"f1", cls.f1},
                            {"sensitivity", cls.sensitivity},
                            {"specificity", cls.specificity},
                            {"specificity_printed", cls.specificity_printed},
                            {"support", cls.support},
                            {"present", cls.present}};
  }
  return {{"overall",
           {{"accuracy", m.accuracy},
            {"mf1", m.mf1},
            {"kappa", m.kappa},
            {"macro_sensitivity", m.macro_sensitivity},
            {"macro_specificity", m.macro_specificity},
            {"macro_specificity_printed", m.macro_specificity_printed},
            {"micro_sensitivity", m.micro_sensitivity},
            {"micro_specificity", m.micro_specificity},
            {"total", cm.total()}}},
          {"per_class", per_class},
          {"class_order", {"W", "N1", "N2", "N3", "REM"}},
          {"confusion", {{"raw", cm.counts}, {"row_normalized", cm.row_normalized()}}}};
}

}  // namespace sstg::metrics
