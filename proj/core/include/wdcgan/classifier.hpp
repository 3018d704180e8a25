#pragma once

// Binary damage classifier: the critic body without dropout plus a sigmoid,
// trained with cross-entropy on labelled windows.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wdcgan/gan.hpp"
#include "wdcgan/metrics.hpp"
#include "wdcgan/network.hpp"
#include "wdcgan/signal.hpp"

namespace wdcgan::classifier {

struct ClassifierConfig {
  double learning_rate = 8e-4;
  std::size_t batch_size = 30;
  std::size_t epochs = 300;
  std::uint64_t seed = 0;

  gan::Architecture arch;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 1e-2;
  double init_std = 0.02;

  /// 8e-4 for scenarios 0-2, 3.5e-3 for 3-5; other fields default.
  static ClassifierConfig for_scenario(int scenario_id);
  static double learning_rate_for(int scenario_id);
  void validate() const;
};

nn::NetworkSpec build_classifier(std::size_t window_len, const gan::Architecture& arch = {});

struct TrainedClassifier {
  nn::Network network;
  std::vector<double> loss_history;  // mean minibatch loss per epoch
  std::vector<std::string> warnings;
};

using ClassifierEpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Labels come from the window condition (damaged = 1).
TrainedClassifier train_classifier(const ClassifierConfig& cfg, std::span<const signal::Window> train_set,
                                   const ClassifierEpochCallback& on_epoch = {});

/// Mean binary cross-entropy of the classifier on labelled windows, computed from logits.
double bce_loss(nn::Network& classifier, std::span<const signal::Window> windows);

metrics::PredictionSet predict(nn::Network& classifier, std::span<const signal::Window> windows,
                               double threshold = 0.5);

}  // namespace wdcgan::classifier
