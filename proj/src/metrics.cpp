#include "ebmorph/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <vector>

#include "json.hpp"

#include "ebmorph/error.hpp"

namespace ebmorph {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_labels(std::span<const int> labels) {
  for (int v : labels) {
    if (v != 0 && v != 1) throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1");
  }
}

}  // namespace

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> truths) {
  if (predictions.size() != truths.size()) {
    throw Error(ErrorKind::LengthMismatch, "predictions and truths differ in length");
  }
  check_labels(predictions);
  check_labels(truths);
  ConfusionCounts c;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const bool p = predictions[i] == 1, t = truths[i] == 1;
    if (t) {
      (p ? c.tp : c.fn) += 1;
    } else {
      (p ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

EvalReport report(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(ErrorKind::EmptyCounts, "no samples");
  EvalReport r;
  r.counts = c;
  r.accuracy = ratio(c.tn + c.tp, c.total());
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  const double s = r.precision + r.recall;
  r.f1 = s == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / s;
  return r;
}

double auc(std::span<const double> scores, std::span<const int> truths) {
  if (scores.size() != truths.size()) {
    throw Error(ErrorKind::LengthMismatch, "scores and truths differ in length");
  }
  check_labels(truths);
  const auto n_pos = static_cast<std::size_t>(std::count(truths.begin(), truths.end(), 1));
  const std::size_t n_neg = truths.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::SingleClass, "AUC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // ranks i+1 .. j share their midrank
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (truths[order[k]] == 1) pos_rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::string to_json(const EvalReport& r, const std::string& model_name) {
  nlohmann::ordered_json j;
  if (!model_name.empty()) j["model"] = model_name;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["tn"] = r.counts.tn;
  j["fp"] = r.counts.fp;
  j["fn"] = r.counts.fn;
  j["tp"] = r.counts.tp;
  j["auc"] = r.auc ? nlohmann::ordered_json(*r.auc) : nlohmann::ordered_json(nullptr);
  return j.dump(2) + "\n";
}

std::string to_table(const EvalReport& r, const std::string& model_name) {
  char auc_text[16] = "-";
  if (r.auc) std::snprintf(auc_text, sizeof auc_text, "%.2f", *r.auc);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-18s %8s %9s %7s %5s %6s %6s %6s %6s %5s\n"
                "%-18s %8.2f %9.2f %7.2f %5.2f %6llu %6llu %6llu %6llu %5s\n",
                "Model", "Accuracy", "Precision", "Recall", "F1", "TN", "FP", "FN", "TP", "AUC",
                model_name.c_str(), r.accuracy, r.precision, r.recall, r.f1,
                static_cast<unsigned long long>(r.counts.tn),
                static_cast<unsigned long long>(r.counts.fp),
                static_cast<unsigned long long>(r.counts.fn),
                static_cast<unsigned long long>(r.counts.tp), auc_text);
  return buf;
}

}  // namespace ebmorph
