#include "wdcgan/optim.hpp"

#include <cmath>
#include <string>

#include "wdcgan/error.hpp"

namespace wdcgan::nn {

void adamw_step(OptimizerState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size())
    throw Error(ErrorKind::shape, "adamw: " + std::to_string(params.size()) + " parameters but " +
                                      std::to_string(grads.size()) + " gradients");
  if (state.first_moment.empty() && state.step == 0) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw Error(ErrorKind::shape, "adamw: optimizer state does not match the parameter count");

  const auto& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  const double decay = 1.0 - o.lr * o.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    params[i] = params[i] * decay - o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
  }
}

AdamW::AdamW(std::vector<Tensor> params, AdamWOptions options) : params_(std::move(params)), options_(options) {
  states_.resize(params_.size());
  for (auto& s : states_) s.options = options_;
}

void AdamW::step(std::span<const Tensor> grads) {
  if (grads.size() != params_.size())
    throw Error(ErrorKind::shape, "adamw: " + std::to_string(grads.size()) + " gradients for " +
                                      std::to_string(params_.size()) + " parameter tensors");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (grads[i].shape() != params_[i].shape())
      throw Error(ErrorKind::shape, "adamw: gradient " + grads[i].shape().str() + " for parameter " +
                                        params_[i].shape().str());
    adamw_step(states_[i], params_[i].mutable_values(), grads[i].values());
  }
  ++steps_;
}

void AdamW::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto g = params_[i].grad();
    std::vector<double> zero;
    if (g.empty()) {
      zero.assign(params_[i].numel(), 0.0);
      g = zero;
    }
    adamw_step(states_[i], params_[i].mutable_values(), g);
  }
  ++steps_;
}

}  // namespace wdcgan::nn
