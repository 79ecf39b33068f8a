#pragma once

// Binary classification metrics; class 1 is the positive class.

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace ebmorph {

struct ConfusionCounts {
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tp = 0;

  std::uint64_t total() const { return tn + fp + fn + tp; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct EvalReport {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;
};

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> truths);

// Ratios with an empty denominator are reported as 0.
EvalReport report(const ConfusionCounts& c);

// Mann-Whitney rank statistic with midranks for ties.
double auc(std::span<const double> scores, std::span<const int> truths);

std::string to_json(const EvalReport& r, const std::string& model_name = "");
// One header line and one row in the column order Accuracy, Precision,
// Recall, F1, TN, FP, FN, TP, AUC.
std::string to_table(const EvalReport& r, const std::string& model_name);

}  // namespace ebmorph
