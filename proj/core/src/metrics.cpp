#include "wdcgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wdcgan/error.hpp"

namespace wdcgan::metrics {

void PredictionSet::validate() const {
  if (entries.empty()) throw Error(ErrorKind::invalid_argument, "metric of an empty prediction set");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!(e.score >= 0.0 && e.score <= 1.0))
      throw Error(ErrorKind::invalid_argument, "score " + std::to_string(e.score) + " at entry " + std::to_string(i) +
                                                   " lies outside [0, 1]");
    if (e.label != 0 && e.label != 1)
      throw Error(ErrorKind::invalid_argument, "label at entry " + std::to_string(i) + " is not 0 or 1");
  }
}

double mae(const PredictionSet& p) {
  p.validate();
  double total = 0.0;
  for (const auto& e : p.entries) total += std::abs(e.score - static_cast<double>(e.label));
  return total / static_cast<double>(p.size());
}

double classification_accuracy(const PredictionSet& p) {
  p.validate();
  std::size_t correct = 0;
  for (const auto& e : p.entries) {
    const int predicted = e.score >= p.threshold ? 1 : 0;
    if (predicted == e.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(p.size());
}

double average_precision(const PredictionSet& p) {
  p.validate();
  const auto positives = static_cast<std::size_t>(
      std::count_if(p.entries.begin(), p.entries.end(), [](const Prediction& e) { return e.label == 1; }));
  if (positives == 0) throw Error(ErrorKind::undefined_metric, "average precision needs at least one positive label");

  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.entries[a].score > p.entries[b].score; });

  double ap = 0.0;
  double previous_recall = 0.0;
  std::size_t tp = 0;
  for (std::size_t n = 1; n <= order.size(); ++n) {
    if (p.entries[order[n - 1]].label == 1) ++tp;
    const double precision = static_cast<double>(tp) / static_cast<double>(n);
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    ap += (recall - previous_recall) * precision;
    previous_recall = recall;
  }
  return ap;
}

}  // namespace wdcgan::metrics
