#include "wdcgan/network.hpp"

#include <algorithm>
#include <random>

#include "wdcgan/error.hpp"
#include "wdcgan/ops.hpp"
#include "wdcgan/rng.hpp"

namespace wdcgan::nn {

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::tconv1d: return "tconv1d";
    case LayerKind::batch_norm: return "batch_norm";
    case LayerKind::instance_norm: return "instance_norm";
    case LayerKind::relu: return "relu";
    case LayerKind::leaky_relu: return "leaky_relu";
    case LayerKind::tanh: return "tanh";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::dropout: return "dropout";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv1d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                            std::size_t padding) {
  LayerSpec s;
  s.kind = LayerKind::conv1d;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::tconv1d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                             std::size_t padding) {
  LayerSpec s = conv1d(in, out, kernel, stride, padding);
  s.kind = LayerKind::tconv1d;
  return s;
}

LayerSpec LayerSpec::batch_norm(std::size_t channels, double eps, double momentum) {
  LayerSpec s;
  s.kind = LayerKind::batch_norm;
  s.channels = channels;
  s.eps = eps;
  s.momentum = momentum;
  return s;
}

LayerSpec LayerSpec::instance_norm(std::size_t channels, double eps) {
  LayerSpec s;
  s.kind = LayerKind::instance_norm;
  s.channels = channels;
  s.eps = eps;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::leaky_relu(double slope) {
  LayerSpec s;
  s.kind = LayerKind::leaky_relu;
  s.slope = slope;
  return s;
}

LayerSpec LayerSpec::tanh() {
  LayerSpec s;
  s.kind = LayerKind::tanh;
  return s;
}

LayerSpec LayerSpec::sigmoid() {
  LayerSpec s;
  s.kind = LayerKind::sigmoid;
  return s;
}

LayerSpec LayerSpec::dropout(double p) {
  LayerSpec s;
  s.kind = LayerKind::dropout;
  s.p = p;
  return s;
}

void LayerSpec::validate() const {
  const std::string name(to_string(kind));
  switch (kind) {
    case LayerKind::conv1d:
    case LayerKind::tconv1d:
      if (in_channels == 0 || out_channels == 0) throw Error(ErrorKind::invalid_argument, name + ": channels must be >= 1");
      if (kernel == 0 || stride == 0) throw Error(ErrorKind::invalid_argument, name + ": kernel and stride must be >= 1");
      break;
    case LayerKind::batch_norm:
    case LayerKind::instance_norm:
      if (channels == 0) throw Error(ErrorKind::invalid_argument, name + ": channels must be >= 1");
      if (!(eps >= 0.0)) throw Error(ErrorKind::invalid_argument, name + ": eps must be >= 0");
      if (!(momentum >= 0.0 && momentum <= 1.0)) throw Error(ErrorKind::invalid_argument, name + ": momentum must be in [0,1]");
      break;
    case LayerKind::dropout:
      if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorKind::invalid_argument, "dropout: p must be in [0, 1)");
      break;
    default:
      break;
  }
}

Shape LayerSpec::output_shape(const Shape& input) const {
  validate();
  const ConvGeometry geo{stride, padding};
  switch (kind) {
    case LayerKind::conv1d:
      if (input.channels != in_channels)
        throw Error(ErrorKind::shape, "conv1d expects " + std::to_string(in_channels) + " input channels, got " +
                                          std::to_string(input.channels));
      return {input.batch, out_channels, conv1d_output_length(input.length, kernel, geo)};
    case LayerKind::tconv1d: {
      if (input.channels != in_channels)
        throw Error(ErrorKind::shape, "tconv1d expects " + std::to_string(in_channels) + " input channels, got " +
                                          std::to_string(input.channels));
      const std::size_t len = conv1d_transpose_output_length(input.length, kernel, geo);
      if (conv1d_output_length(len, kernel, geo) != input.length)
        throw Error(ErrorKind::shape, "tconv1d output length is not exactly invertible");
      return {input.batch, out_channels, len};
    }
    case LayerKind::batch_norm:
    case LayerKind::instance_norm:
      if (input.channels != channels)
        throw Error(ErrorKind::shape, std::string(to_string(kind)) + " expects " + std::to_string(channels) +
                                          " channels, got " + std::to_string(input.channels));
      return input;
    default:
      return input;
  }
}

std::vector<Shape> LayerSpec::parameter_shapes() const {
  switch (kind) {
    case LayerKind::conv1d: return {{out_channels, in_channels, kernel}, {1, out_channels, 1}};
    // Transposed-conv weights are stored (in, out, K): the adjoint of a conv from out to in channels.
    case LayerKind::tconv1d: return {{in_channels, out_channels, kernel}, {1, out_channels, 1}};
    case LayerKind::batch_norm:
    case LayerKind::instance_norm:
      if (affine) return {{1, channels, 1}, {1, channels, 1}};
      return {};
    default: return {};
  }
}

std::vector<Shape> LayerSpec::buffer_shapes() const {
  if (kind == LayerKind::batch_norm) return {{1, channels, 1}, {1, channels, 1}};
  return {};
}

void NetworkSpec::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      layers[i].validate();
    } catch (const Error& e) {
      throw Error(e.kind(), "layer " + std::to_string(i) + ": " + e.what());
    }
  }
}

Shape NetworkSpec::output_shape(const Shape& input) const {
  Shape s = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      s = layers[i].output_shape(s);
    } catch (const Error& e) {
      throw Error(e.kind(), "layer " + std::to_string(i) + " (" + std::string(to_string(layers[i].kind)) + "): " + e.what());
    }
  }
  return s;
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers)
    for (const auto& s : l.parameter_shapes()) n += s.numel();
  return n;
}

ParamStore::ParamStore(const NetworkSpec& spec) {
  spec.validate();
  for (const auto& layer : spec.layers) {
    std::vector<Tensor> ps;
    for (const auto& s : layer.parameter_shapes()) ps.push_back(Tensor::zeros(s, true));
    params_.push_back(std::move(ps));
    std::vector<std::vector<double>> bs;
    for (const auto& s : layer.buffer_shapes()) bs.emplace_back(s.numel(), 0.0);
    buffers_.push_back(std::move(bs));
  }
}

std::vector<Tensor> ParamStore::trainable() const {
  std::vector<Tensor> out;
  for (const auto& layer : params_) out.insert(out.end(), layer.begin(), layer.end());
  return out;
}

std::size_t ParamStore::size() const {
  std::size_t n = 0;
  for (const auto& layer : params_)
    for (const auto& t : layer) n += t.numel();
  return n;
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const auto& layer : params_)
    for (const auto& t : layer) flat.insert(flat.end(), t.values().begin(), t.values().end());
  return flat;
}

void ParamStore::assign(std::span<const double> flat) {
  if (flat.size() != size())
    throw Error(ErrorKind::shape, "parameter vector of size " + std::to_string(flat.size()) + ", expected " +
                                      std::to_string(size()));
  std::size_t pos = 0;
  for (auto& layer : params_)
    for (auto& t : layer) {
      auto dst = t.mutable_values();
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), dst.size(), dst.begin());
      pos += dst.size();
    }
}

void ParamStore::zero_grad() {
  for (auto& layer : params_)
    for (auto& t : layer) t.zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  out.buffers_ = buffers_;
  for (const auto& layer : params_) {
    std::vector<Tensor> ps;
    for (const auto& t : layer) {
      Tensor c = t.detach();
      c.set_requires_grad(true);
      ps.push_back(std::move(c));
    }
    out.params_.push_back(std::move(ps));
  }
  return out;
}

Network::Network(NetworkSpec spec, std::uint64_t init_seed, double init_std)
    : spec_(std::move(spec)), params_(spec_) {
  Rng rng(init_seed);
  std::normal_distribution<double> normal(0.0, init_std);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& layer = spec_.layers[i];
    auto ps = params_.layer_params(i);
    if (layer.kind == LayerKind::conv1d || layer.kind == LayerKind::tconv1d) {
      for (double& w : ps[0].mutable_values()) w = normal(rng);
    } else if ((layer.kind == LayerKind::batch_norm || layer.kind == LayerKind::instance_norm) && layer.affine) {
      auto gamma = ps[0].mutable_values();
      std::fill(gamma.begin(), gamma.end(), 1.0);
    }
    if (layer.kind == LayerKind::batch_norm) {
      auto& bufs = params_.layer_buffers(i);
      std::fill(bufs[1].begin(), bufs[1].end(), 1.0);
    }
  }
}

Network::Network(NetworkSpec spec, ParamStore params) : spec_(std::move(spec)), params_(std::move(params)) {
  ParamStore reference(spec_);
  if (reference.layer_count() != params_.layer_count())
    throw Error(ErrorKind::shape, "parameter store does not match the network layers");
  for (std::size_t i = 0; i < reference.layer_count(); ++i) {
    const auto want = reference.layer_params(i);
    const auto have = params_.layer_params(i);
    if (want.size() != have.size()) throw Error(ErrorKind::shape, "layer " + std::to_string(i) + " parameter count mismatch");
    for (std::size_t k = 0; k < want.size(); ++k)
      if (want[k].shape() != have[k].shape())
        throw Error(ErrorKind::shape, "layer " + std::to_string(i) + " parameter shape mismatch");
  }
}

Network Network::clone() const { return Network(spec_, params_.clone()); }

namespace {

// Normalizes over `stat_shape`-sized groups: batch norm reduces over (batch, length)
// per channel, instance norm over length per (batch, channel).
Tensor normalize(const Tensor& x, const Shape& stat_shape, double eps) {
  const double count = static_cast<double>(x.numel() / stat_shape.numel());
  const Tensor mu = mul_scalar(sum_to(x, stat_shape), 1.0 / count);
  const Tensor centered = sub(x, mu);
  const Tensor var = mul_scalar(sum_to(mul(centered, centered), stat_shape), 1.0 / count);
  return mul(centered, pow_scalar(add_scalar(var, eps), -0.5));
}

Tensor apply_affine(const Tensor& x, std::span<const Tensor> ps) {
  if (ps.empty()) return x;
  return add(mul(x, ps[0]), ps[1]);
}

}  // namespace

Tensor Network::forward(const Tensor& input, Mode mode, std::uint64_t seed, std::size_t first, std::size_t last) {
  last = std::min(last, spec_.layers.size());
  Tensor x = input;
  for (std::size_t i = first; i < last; ++i) {
    const auto& layer = spec_.layers[i];
    Shape expected;
    try {
      expected = layer.output_shape(x.shape());
    } catch (const Error& e) {
      throw Error(e.kind(), "layer " + std::to_string(i) + " (" + std::string(to_string(layer.kind)) + "): " + e.what());
    }
    auto ps = params_.layer_params(i);
    const ConvGeometry geo{layer.stride, layer.padding};
    switch (layer.kind) {
      case LayerKind::conv1d:
        x = add_bias(conv1d(x, ps[0], geo), ps[1]);
        break;
      case LayerKind::tconv1d:
        x = add_bias(conv1d_transpose(x, ps[0], geo, expected.length), ps[1]);
        break;
      case LayerKind::batch_norm: {
        const Shape stat{1, layer.channels, 1};
        auto& bufs = params_.layer_buffers(i);
        if (mode == Mode::train) {
          const std::size_t n = x.numel() / layer.channels;
          {
            NoGradGuard no_grad;
            const Tensor mu = mul_scalar(sum_to(x, stat), 1.0 / static_cast<double>(n));
            const Tensor c = sub(x, mu);
            const Tensor var = mul_scalar(sum_to(mul(c, c), stat), 1.0 / static_cast<double>(n));
            const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
            for (std::size_t ch = 0; ch < layer.channels; ++ch) {
              bufs[0][ch] = (1.0 - layer.momentum) * bufs[0][ch] + layer.momentum * mu.values()[ch];
              bufs[1][ch] = (1.0 - layer.momentum) * bufs[1][ch] + layer.momentum * var.values()[ch] * unbias;
            }
          }
          x = apply_affine(normalize(x, stat, layer.eps), ps);
        } else {
          std::vector<double> shift(layer.channels), scale(layer.channels);
          for (std::size_t ch = 0; ch < layer.channels; ++ch) {
            shift[ch] = -bufs[0][ch];
            scale[ch] = 1.0 / std::sqrt(bufs[1][ch] + layer.eps);
          }
          x = mul(add(x, Tensor::from_values(stat, shift)), Tensor::from_values(stat, scale));
          x = apply_affine(x, ps);
        }
        break;
      }
      case LayerKind::instance_norm:
        x = apply_affine(normalize(x, {x.shape().batch, layer.channels, 1}, layer.eps), ps);
        break;
      case LayerKind::relu:
        x = relu(x);
        break;
      case LayerKind::leaky_relu:
        x = leaky_relu(x, layer.slope);
        break;
      case LayerKind::tanh:
        x = tanh(x);
        break;
      case LayerKind::sigmoid:
        x = sigmoid(x);
        break;
      case LayerKind::dropout:
        if (mode == Mode::train && layer.p > 0.0) {
          Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
          std::bernoulli_distribution keep(1.0 - layer.p);
          const double scale = 1.0 / (1.0 - layer.p);
          std::vector<double> mask(x.numel());
          for (double& m : mask) m = keep(rng) ? scale : 0.0;
          x = mul(x, Tensor::from_values(x.shape(), std::move(mask)));
        }
        break;
    }
  }
  return x;
}

Tensor input_gradient(Network& net, const Tensor& input, Mode mode, std::uint64_t seed) {
  Tensor x = input;
  if (!x.requires_grad()) {
    x = input.detach();
    x.set_requires_grad(true);
  }
  const Tensor out = net.forward(x, mode, seed);
  if (out.shape().channels != 1 || out.shape().length != 1)
    throw Error(ErrorKind::shape, "input_gradient needs one output per batch element, got " + out.shape().str());
  const Tensor xs[] = {x};
  return grad(sum(out), xs, true)[0];
}

}  // namespace wdcgan::nn
