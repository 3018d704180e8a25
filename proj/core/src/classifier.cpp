#include "wdcgan/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wdcgan/error.hpp"
#include "wdcgan/ops.hpp"
#include "wdcgan/optim.hpp"
#include "wdcgan/rng.hpp"

namespace wdcgan::classifier {

using nn::Mode;
using nn::Tensor;

double ClassifierConfig::learning_rate_for(int scenario_id) {
  if (scenario_id < 0 || scenario_id > 5)
    throw Error(ErrorKind::invalid_argument, "scenario id " + std::to_string(scenario_id) + " is outside 0..5");
  return scenario_id <= 2 ? 8e-4 : 3.5e-3;
}

ClassifierConfig ClassifierConfig::for_scenario(int scenario_id) {
  ClassifierConfig cfg;
  cfg.learning_rate = learning_rate_for(scenario_id);
  return cfg;
}

void ClassifierConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::invalid_argument, "classifier learning rate must be > 0");
  if (batch_size == 0) throw Error(ErrorKind::invalid_argument, "classifier batch size must be >= 1");
  if (epochs == 0) throw Error(ErrorKind::invalid_argument, "classifier epochs must be >= 1");
  arch.validate();
}

nn::NetworkSpec build_classifier(std::size_t window_len, const gan::Architecture& arch) {
  nn::NetworkSpec spec = gan::build_critic_spec(window_len, arch, false);
  spec.layers.push_back(nn::LayerSpec::sigmoid());
  return spec;
}

namespace {

// Mean of softplus(z) - y z over the batch, which is the cross-entropy of
// sigmoid(z) against y without forming the probability.
Tensor logit_bce(nn::Network& net, const Tensor& x, const Tensor& y, Mode mode) {
  const std::size_t body = net.spec().layers.size() - 1;
  const Tensor z = net.forward(x, mode, 0, 0, body);
  return nn::mean(nn::sub(nn::softplus(z), nn::mul(y, z)));
}

Tensor labels_tensor(std::span<const signal::Window> windows, std::span<const std::size_t> idx) {
  std::vector<double> y;
  y.reserve(idx.size());
  for (std::size_t i : idx) y.push_back(windows[i].condition == signal::Condition::damaged ? 1.0 : 0.0);
  return Tensor::from_values({idx.size(), 1, 1}, std::move(y));
}

void check_classifier(const nn::Network& net) {
  const auto& layers = net.spec().layers;
  if (layers.empty() || layers.back().kind != nn::LayerKind::sigmoid)
    throw Error(ErrorKind::invalid_argument, "classifier network must end in a sigmoid");
}

}  // namespace

TrainedClassifier train_classifier(const ClassifierConfig& cfg, std::span<const signal::Window> train_set,
                                   const ClassifierEpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw Error(ErrorKind::insufficient_data, "classifier training set is empty");
  const std::size_t window_len = train_set.front().size();
  std::size_t damaged = 0;
  for (const auto& w : train_set) {
    if (w.size() != window_len) throw Error(ErrorKind::shape, "classifier training windows must have equal length");
    if (w.condition == signal::Condition::damaged) ++damaged;
  }

  TrainedClassifier out{nn::Network(build_classifier(window_len, cfg.arch), derive_seed(cfg.seed, "init-classifier"),
                                    cfg.init_std),
                        {},
                        {}};
  if (damaged == 0 || damaged == train_set.size())
    out.warnings.push_back("training set holds a single class (" + std::to_string(train_set.size()) + " windows)");

  const auto params = out.network.params().trainable();
  nn::AdamW opt(params, {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay});

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(cfg.seed, "classifier-shuffle"));
  const std::size_t batch = std::min(cfg.batch_size, train_set.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Tensor x = gan::windows_to_tensor(train_set, idx);
      const Tensor loss = logit_bce(out.network, x, labels_tensor(train_set, idx), Mode::train);
      if (!std::isfinite(loss.item()))
        throw Error(ErrorKind::diverged, "classifier loss became non-finite in epoch " + std::to_string(epoch));
      opt.step(nn::grad(loss, params));
      total += loss.item();
      ++batches;
    }
    const double mean_loss = total / static_cast<double>(batches);
    out.loss_history.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch, mean_loss);
  }
  return out;
}

double bce_loss(nn::Network& classifier, std::span<const signal::Window> windows) {
  check_classifier(classifier);
  if (windows.empty()) throw Error(ErrorKind::invalid_argument, "loss of an empty window set");
  std::vector<std::size_t> all(windows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  nn::NoGradGuard no_grad;
  return logit_bce(classifier, gan::windows_to_tensor(windows, all), labels_tensor(windows, all), Mode::eval).item();
}

metrics::PredictionSet predict(nn::Network& classifier, std::span<const signal::Window> windows, double threshold) {
  check_classifier(classifier);
  metrics::PredictionSet p;
  p.threshold = threshold;
  if (windows.empty()) return p;
  nn::NoGradGuard no_grad;
  constexpr std::size_t kChunk = 64;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < windows.size(); start += kChunk) {
    const std::size_t end = std::min(windows.size(), start + kChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor scores = classifier.forward(gan::windows_to_tensor(windows, idx), Mode::eval);
    if (scores.shape().channels != 1 || scores.shape().length != 1)
      throw Error(ErrorKind::shape, "classifier emits " + scores.shape().str() + " instead of one score per window");
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int label = windows[idx[i]].condition == signal::Condition::damaged ? 1 : 0;
      p.entries.push_back({scores.values()[i], label});
    }
  }
  return p;
}

}  // namespace wdcgan::classifier
