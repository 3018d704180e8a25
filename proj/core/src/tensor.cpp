#include "wdcgan/tensor.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "node.hpp"
#include "wdcgan/error.hpp"
#include "wdcgan/ops.hpp"

namespace wdcgan::nn {

namespace {
thread_local bool g_grad_enabled = true;

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != shape.numel())
    throw Error(ErrorKind::shape, "value count " + std::to_string(values.size()) + " does not match shape " + shape.str());
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

const detail::Node& checked(const Tensor& t) {
  const auto* n = TensorAccess::node(t);
  if (n == nullptr) throw Error(ErrorKind::invalid_argument, "use of an undefined tensor");
  return *n;
}
}  // namespace

std::string Shape::str() const {
  return "(" + std::to_string(batch) + ", " + std::to_string(channels) + ", " + std::to_string(length) + ")";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(shape, 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  return Tensor(make_leaf(shape, std::vector<double>(shape.numel(), value), requires_grad));
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(make_leaf(shape, std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return full(Shape{}, value, requires_grad); }

const Shape& Tensor::shape() const { return checked(*this).shape; }

std::span<const double> Tensor::values() const { return checked(*this).values; }

std::span<double> Tensor::mutable_values() {
  checked(*this);
  if (node_->backward) throw Error(ErrorKind::invalid_argument, "cannot write into the output of an op");
  return node_->values;
}

double Tensor::item() const {
  const auto& n = checked(*this);
  if (n.values.size() != 1) throw Error(ErrorKind::invalid_argument, "item() on a tensor of shape " + n.shape.str());
  return n.values.front();
}

double Tensor::at(std::size_t b, std::size_t c, std::size_t l) const {
  const auto& n = checked(*this);
  return n.values[(b * n.shape.channels + c) * n.shape.length + l];
}

bool Tensor::requires_grad() const { return checked(*this).requires_grad; }

bool Tensor::is_leaf() const { return !checked(*this).backward; }

void Tensor::set_requires_grad(bool flag) {
  checked(*this);
  if (node_->backward) throw Error(ErrorKind::invalid_argument, "requires_grad can only be set on leaves");
  node_->requires_grad = flag;
}

std::span<const double> Tensor::grad() const { return checked(*this).grad; }

void Tensor::zero_grad() {
  checked(*this);
  node_->grad.assign(node_->values.size(), 0.0);
}

Tensor Tensor::detach() const {
  const auto& n = checked(*this);
  return Tensor(make_leaf(n.shape, n.values, false));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() noexcept { return g_grad_enabled; }

Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs, detail::BackwardFn backward,
                   const char* op) {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->values = std::move(values);
  node->op = op;
  if (g_grad_enabled) {
    const bool any = std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.defined() && t.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->inputs = std::move(inputs);
      node->backward = std::move(backward);
    }
  }
  return TensorAccess::wrap(std::move(node));
}

namespace {

// Post-order over the nodes that require grad; children precede parents.
std::vector<detail::Node*> topo_order(detail::Node* root) {
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  if (!root->requires_grad) return order;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = TensorAccess::node(node->inputs[next++]);
      if (child != nullptr && child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

std::vector<Tensor> grad(const Tensor& output, std::span<const Tensor> inputs, bool create_graph,
                         const Tensor& grad_output) {
  detail::Node* root = TensorAccess::node(output);
  if (root == nullptr) throw Error(ErrorKind::invalid_argument, "grad() of an undefined tensor");

  std::unordered_set<const detail::Node*> targets;
  for (const auto& t : inputs) targets.insert(&checked(t));

  const auto order = topo_order(root);
  std::unordered_set<const detail::Node*> needed;
  for (detail::Node* n : order) {
    bool need = targets.count(n) > 0;
    for (const auto& in : n->inputs) need = need || needed.count(TensorAccess::node(in)) > 0;
    if (need) needed.insert(n);
  }

  std::unique_ptr<NoGradGuard> guard;
  if (!create_graph) guard = std::make_unique<NoGradGuard>();

  std::unordered_map<const detail::Node*, Tensor> grads;
  if (needed.count(root)) {
    Tensor seed = grad_output.defined() ? grad_output : Tensor::full(root->shape, 1.0);
    if (seed.shape() != root->shape)
      throw Error(ErrorKind::shape, "grad_output shape " + seed.shape().str() + " != output shape " + root->shape.str());
    grads.emplace(root, seed);
  }

  std::unordered_map<const detail::Node*, Tensor> result;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    auto found = grads.find(n);
    if (found == grads.end()) continue;
    Tensor g = std::move(found->second);
    grads.erase(found);
    if (targets.count(n)) result.emplace(n, g);
    if (!n->backward) continue;

    std::vector<bool> needs(n->inputs.size(), false);
    bool any = false;
    for (std::size_t i = 0; i < n->inputs.size(); ++i) {
      const detail::Node* in = TensorAccess::node(n->inputs[i]);
      needs[i] = in != nullptr && in->requires_grad && needed.count(in) > 0;
      any = any || needs[i];
    }
    if (!any) continue;
    const auto input_grads = n->backward(TensorAccess::self(*n), g, needs);
    for (std::size_t i = 0; i < n->inputs.size(); ++i) {
      if (!needs[i] || !input_grads[i].defined()) continue;
      const detail::Node* in = TensorAccess::node(n->inputs[i]);
      auto slot = grads.find(in);
      if (slot == grads.end()) {
        grads.emplace(in, input_grads[i]);
      } else {
        slot->second = add(slot->second, input_grads[i]);
      }
    }
  }

  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const auto& t : inputs) {
    auto found = result.find(&checked(t));
    out.push_back(found != result.end() ? found->second : Tensor::zeros(t.shape()));
  }
  return out;
}

void backward(const Tensor& output) {
  const auto& root = checked(output);
  if (root.values.size() != 1)
    throw Error(ErrorKind::invalid_argument, "backward() needs a scalar output, got shape " + root.shape.str());
  std::vector<Tensor> leaves;
  for (detail::Node* n : topo_order(TensorAccess::node(output))) {
    if (!n->backward) leaves.push_back(TensorAccess::self(*n));
  }
  const auto grads = grad(output, leaves, false);
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    detail::Node* leaf = TensorAccess::node(leaves[i]);
    if (leaf->grad.size() != leaf->values.size()) leaf->grad.assign(leaf->values.size(), 0.0);
    const auto g = grads[i].values();
    for (std::size_t k = 0; k < g.size(); ++k) leaf->grad[k] += g[k];
  }
}

}  // namespace wdcgan::nn
