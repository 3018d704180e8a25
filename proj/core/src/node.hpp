#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "wdcgan/tensor.hpp"

namespace wdcgan::nn {

namespace detail {

// Backward rule: gradient of the node's inputs given the gradient of its
// output. `self` is the node's own output (used by rules such as tanh).
// Entries of `needs` that are false may be returned as undefined tensors.
using BackwardFn =
    std::function<std::vector<Tensor>(const Tensor& self, const Tensor& grad, const std::vector<bool>& needs)>;

struct Node : std::enable_shared_from_this<Node> {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;
  std::vector<Tensor> inputs;
  BackwardFn backward;
  const char* op = "leaf";
};

}  // namespace detail

// Internal access to the node behind a Tensor.
class TensorAccess {
 public:
  static detail::Node* node(const Tensor& t) { return t.node_.get(); }
  static Tensor wrap(std::shared_ptr<detail::Node> n) { return Tensor(std::move(n)); }
  static Tensor self(detail::Node& n) { return Tensor(n.shared_from_this()); }
};

// Creates the output of an op. History is recorded only when grad mode is on
// and some input requires grad.
Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs, detail::BackwardFn backward,
                   const char* op);

}  // namespace wdcgan::nn
