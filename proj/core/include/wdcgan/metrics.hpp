#pragma once

// Detection metrics over scored, labelled windows.

#include <cstddef>
#include <vector>

namespace wdcgan::metrics {

struct Prediction {
  double score = 0.0;  // in [0, 1]
  int label = 0;       // 0 undamaged, 1 damaged
};

struct PredictionSet {
  std::vector<Prediction> entries;
  double threshold = 0.5;

  std::size_t size() const noexcept { return entries.size(); }
  void validate() const;
};

/// Mean |score - label|.
double mae(const PredictionSet& p);

/// Fraction of entries whose thresholded score (score >= threshold means 1) equals the label.
double classification_accuracy(const PredictionSet& p);

/// Sum over ranked cutoffs of (recall(n) - recall(n-1)) * precision(n), ranking
/// by descending score with ties kept in input order.
double average_precision(const PredictionSet& p);

}  // namespace wdcgan::metrics
