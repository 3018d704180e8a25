#pragma once

// Rank-3 (batch, channels, length) tensors with reverse-mode differentiation.
//
// Every differentiable op records its inputs and a backward rule that is itself
// written in terms of differentiable ops. Calling grad() with create_graph=true
// therefore yields gradients that are graph nodes, and expressions built from
// them (the gradient penalty) can be differentiated again.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wdcgan::nn {

struct Shape {
  std::size_t batch = 1;
  std::size_t channels = 1;
  std::size_t length = 1;

  constexpr std::size_t numel() const noexcept { return batch * channels * length; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;
  std::string str() const;
};

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const { return shape().numel(); }

  std::span<const double> values() const;
  // Writable storage; only for leaves (parameters, inputs) that no op has consumed yet.
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t b, std::size_t c, std::size_t l) const;

  bool requires_grad() const;
  bool is_leaf() const;
  void set_requires_grad(bool flag);

  // Gradient slot filled by backward(); empty until then.
  std::span<const double> grad() const;
  void zero_grad();

  // New leaf holding a copy of the values, cut off from the graph.
  Tensor detach() const;

  const void* id() const noexcept { return node_.get(); }

 private:
  friend struct detail::Node;
  friend class TensorAccess;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// While alive, ops do not record history.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

/// Gradients of `output` with respect to each of `inputs`. Inputs the output
/// does not depend on receive zeros. With create_graph the results are
/// differentiable graph nodes. grad_output defaults to ones.
std::vector<Tensor> grad(const Tensor& output, std::span<const Tensor> inputs, bool create_graph = false,
                         const Tensor& grad_output = {});

/// Accumulates d(output)/d(leaf) into the gradient slot of every reachable
/// leaf that requires grad. The output must hold a single value.
void backward(const Tensor& output);

}  // namespace wdcgan::nn
