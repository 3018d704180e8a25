#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wdcgan/tensor.hpp"

namespace wdcgan::nn {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

struct OptimizerState {
  AdamWOptions options;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam step with decoupled weight decay:
///   p <- p * (1 - lr * wd) - lr * m_hat / (sqrt(v_hat) + eps)
void adamw_step(OptimizerState& state, std::span<double> params, std::span<const double> grads);

/// AdamW over a fixed list of parameter tensors.
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::vector<Tensor> params, AdamWOptions options);

  // grads[i] pairs with the i-th parameter.
  void step(std::span<const Tensor> grads);
  // Uses the gradient slots filled by backward().
  void step();

  std::uint64_t step_count() const noexcept { return steps_; }
  const AdamWOptions& options() const noexcept { return options_; }
  const std::vector<OptimizerState>& states() const noexcept { return states_; }
  std::span<const Tensor> params() const noexcept { return params_; }

 private:
  std::vector<Tensor> params_;
  std::vector<OptimizerState> states_;
  AdamWOptions options_;
  std::uint64_t steps_ = 0;
};

}  // namespace wdcgan::nn
