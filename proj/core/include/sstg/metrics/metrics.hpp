// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>

#include <nlohmann/json_fwd.hpp>

namespace sstg::metrics {

inline constexpr std::size_t K = 5;  // W, N1, N2, N3, REM

/// Rows are true stages, columns predicted stages.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, K>, K> counts{};

  void add(std::size_t truth, std::size_t predicted);
  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t col_sum(std::size_t c) const;
  /// Each row divided by its sum; empty rows stay zero.
  std::array<std::array<double, K>, K> row_normalized() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws InvalidInput on empty or mismatched input, InvalidLabel on an index ≥ 5.
ConfusionMatrix confusion_from(std::span<const std::size_t> preds, std::span<const std::size_t> labels);

struct OneVsRest {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};
OneVsRest one_vs_rest(const ConfusionMatrix& cm, std::size_t c);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;          // TN / (TN + FP)
  double specificity_printed = 0.0;  // TN / (TP + FN), kept for audit
  std::uint64_t support = 0;         // true count
  bool present = false;              // true or predicted count > 0
};

/// Any 0/0 ratio is 0.
ClassMetrics class_prf(const ConfusionMatrix& cm, std::size_t c);

struct OverallMetrics {
  double accuracy = 0.0;
  double mf1 = 0.0;
  double kappa = 0.0;
  double macro_sensitivity = 0.0;
  double macro_specificity = 0.0;
  double macro_specificity_printed = 0.0;
  double micro_sensitivity = 0.0;
  double micro_specificity = 0.0;
  std::array<double, K> per_class_f1{};
  std::array<bool, K> present{};
};

/// Macro averages run over present classes only. Throws InvalidInput on an
/// empty matrix.
OverallMetrics overall_metrics(const ConfusionMatrix& cm);

/// (p_o - p_e) / (1 - p_e). Returns 1 for p_e == p_o == 1; throws
/// DegenerateDistribution when p_e == 1 and p_o < 1.
double kappa_multiclass(const ConfusionMatrix& cm);

/// 2(TP·TN − FN·FP) / ((TP+FP)(FP+TN) + (TP+FN)(FN+TN)).
double kappa_binary_closed_form(double tp, double tn, double fp, double fn);

/// Overall block, per-class block, raw and row-normalized matrices.
nlohmann::json metrics_report(const ConfusionMatrix& cm);
nlohmann::json to_json(const ConfusionMatrix& cm);

}  // namespace sstg::metrics
