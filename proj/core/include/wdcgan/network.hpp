#pragma once

// Sequential 1-D convolutional networks: layer descriptions, parameter
// storage, and evaluation.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wdcgan/tensor.hpp"

namespace wdcgan::nn {

enum class Mode { train, eval };

enum class LayerKind { conv1d, tconv1d, batch_norm, instance_norm, relu, leaky_relu, tanh, sigmoid, dropout };

std::string_view to_string(LayerKind kind) noexcept;

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  // conv1d / tconv1d
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  // batch_norm / instance_norm use `channels`
  std::size_t channels = 0;
  double eps = 1e-5;
  double momentum = 0.1;
  bool affine = true;
  // leaky_relu
  double slope = 0.2;
  // dropout
  double p = 0.0;

  static LayerSpec conv1d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride = 1,
                          std::size_t padding = 0);
  static LayerSpec tconv1d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride = 1,
                           std::size_t padding = 0);
  static LayerSpec batch_norm(std::size_t channels, double eps = 1e-5, double momentum = 0.1);
  static LayerSpec instance_norm(std::size_t channels, double eps = 1e-5);
  static LayerSpec relu();
  static LayerSpec leaky_relu(double slope = 0.2);
  static LayerSpec tanh();
  static LayerSpec sigmoid();
  static LayerSpec dropout(double p);

  void validate() const;
  Shape output_shape(const Shape& input) const;
  // Trainable tensors in storage order: conv {weight, bias}; norms {gamma, beta} when affine.
  std::vector<Shape> parameter_shapes() const;
  // Non-trainable state: batch norm {running_mean, running_var}.
  std::vector<Shape> buffer_shapes() const;
  bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;

  void validate() const;
  /// Propagates a shape through all layers; shape errors name the layer index.
  Shape output_shape(const Shape& input) const;
  std::size_t parameter_count() const;
  bool operator==(const NetworkSpec&) const = default;
};

/// Parameters and buffers for one NetworkSpec, grouped per layer. Trainable
/// parameters are leaf tensors that require grad.
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(const NetworkSpec& spec);

  std::size_t layer_count() const noexcept { return params_.size(); }
  std::span<Tensor> layer_params(std::size_t layer) { return params_.at(layer); }
  std::span<const Tensor> layer_params(std::size_t layer) const { return params_.at(layer); }
  std::vector<std::vector<double>>& layer_buffers(std::size_t layer) { return buffers_.at(layer); }
  const std::vector<std::vector<double>>& layer_buffers(std::size_t layer) const { return buffers_.at(layer); }

  /// All trainable tensors in layer order.
  std::vector<Tensor> trainable() const;
  std::size_t size() const;

  /// Flat copy of every trainable value followed by nothing else, in layer order.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  void zero_grad();
  ParamStore clone() const;

 private:
  std::vector<std::vector<Tensor>> params_;
  std::vector<std::vector<std::vector<double>>> buffers_;
};

class Network {
 public:
  Network() = default;
  /// Conv weights ~ N(0, init_std) from init_seed; biases 0; norm scale 1, shift 0.
  explicit Network(NetworkSpec spec, std::uint64_t init_seed = 0, double init_std = 0.02);
  Network(NetworkSpec spec, ParamStore params);

  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network clone() const;

  const NetworkSpec& spec() const noexcept { return spec_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  /// Evaluates layers [first, last). Dropout is active only in train mode;
  /// norms use batch statistics in train mode, and batch norm then updates its
  /// running averages. The seed drives dropout masks only.
  Tensor forward(const Tensor& input, Mode mode, std::uint64_t seed = 0, std::size_t first = 0,
                 std::size_t last = static_cast<std::size_t>(-1));

 private:
  NetworkSpec spec_;
  ParamStore params_;
};

/// Per-batch-element gradient of the network output with respect to its input.
/// The network must emit one value per batch element. The result is a graph
/// node, so functions of it remain differentiable in the network parameters.
Tensor input_gradient(Network& net, const Tensor& input, Mode mode, std::uint64_t seed = 0);

}  // namespace wdcgan::nn
