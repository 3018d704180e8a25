#include "wdcgan/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "conv_kernels.hpp"
#include "node.hpp"
#include "wdcgan/error.hpp"

namespace wdcgan::nn {

namespace {

struct Strides {
  std::size_t b, c, l;
};

// Strides for reading `s` as if it had shape `out` (0 along broadcast axes).
Strides broadcast_strides(const Shape& s) {
  const std::size_t zero = 0;
  return {s.batch == 1 ? zero : s.channels * s.length, s.channels == 1 ? zero : s.length, s.length == 1 ? zero : 1};
}

template <class F>
std::vector<double> zip(const Tensor& a, const Tensor& b, const Shape& out, F f) {
  std::vector<double> y(out.numel());
  const auto av = a.values();
  const auto bv = b.values();
  if (a.shape() == out && b.shape() == out) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(av[i], bv[i]);
    return y;
  }
  const Strides sa = broadcast_strides(a.shape());
  const Strides sb = broadcast_strides(b.shape());
  std::size_t i = 0;
  for (std::size_t n = 0; n < out.batch; ++n)
    for (std::size_t c = 0; c < out.channels; ++c) {
      const std::size_t ia = n * sa.b + c * sa.c;
      const std::size_t ib = n * sb.b + c * sb.c;
      for (std::size_t l = 0; l < out.length; ++l) y[i++] = f(av[ia + l * sa.l], bv[ib + l * sb.l]);
    }
  return y;
}

template <class F>
std::vector<double> map(const Tensor& x, F f) {
  const auto xv = x.values();
  std::vector<double> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return y;
}

Tensor reduce_like(const Tensor& g, const Shape& shape) { return g.shape() == shape ? g : sum_to(g, shape); }

bool fits(std::size_t from, std::size_t to) { return to == from || to == 1; }

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const auto axis = [&](std::size_t x, std::size_t y, const char* name) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw Error(ErrorKind::shape, std::string("cannot broadcast ") + a.str() + " with " + b.str() + " along " + name);
  };
  return {axis(a.batch, b.batch, "batch"), axis(a.channels, b.channels, "channels"), axis(a.length, b.length, "length")};
}

Tensor add(const Tensor& a, const Tensor& b) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  const Shape sa = a.shape(), sb = b.shape();
  return make_result(out, zip(a, b, out, [](double x, double y) { return x + y; }), {a, b},
                     [sa, sb](const Tensor&, const Tensor& g, const std::vector<bool>& needs) {
                       std::vector<Tensor> r(2);
                       if (needs[0]) r[0] = reduce_like(g, sa);
                       if (needs[1]) r[1] = reduce_like(g, sb);
                       return r;
                     },
                     "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  const Shape sa = a.shape(), sb = b.shape();
  return make_result(out, zip(a, b, out, [](double x, double y) { return x - y; }), {a, b},
                     [sa, sb](const Tensor&, const Tensor& g, const std::vector<bool>& needs) {
                       std::vector<Tensor> r(2);
                       if (needs[0]) r[0] = reduce_like(g, sa);
                       if (needs[1]) r[1] = reduce_like(neg(g), sb);
                       return r;
                     },
                     "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  return make_result(out, zip(a, b, out, [](double x, double y) { return x * y; }), {a, b},
                     [a, b](const Tensor&, const Tensor& g, const std::vector<bool>& needs) {
                       std::vector<Tensor> r(2);
                       if (needs[0]) r[0] = reduce_like(mul(g, b), a.shape());
                       if (needs[1]) r[1] = reduce_like(mul(g, a), b.shape());
                       return r;
                     },
                     "mul");
}

Tensor safe_div(const Tensor& a, const Tensor& b) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  return make_result(out, zip(a, b, out, [](double x, double y) { return y == 0.0 ? 0.0 : x / y; }), {a, b},
                     [a, b](const Tensor& self, const Tensor& g, const std::vector<bool>& needs) {
                       std::vector<Tensor> r(2);
                       if (needs[0]) r[0] = reduce_like(safe_div(g, b), a.shape());
                       // d(a/b)/db = -(a/b)/b
                       if (needs[1]) r[1] = reduce_like(neg(safe_div(mul(g, self), b)), b.shape());
                       return r;
                     },
                     "safe_div");
}

Tensor neg(const Tensor& x) { return mul_scalar(x, -1.0); }

Tensor add_scalar(const Tensor& x, double c) {
  return make_result(x.shape(), map(x, [c](double v) { return v + c; }), {x},
                     [](const Tensor&, const Tensor& g, const std::vector<bool>&) { return std::vector<Tensor>{g}; },
                     "add_scalar");
}

Tensor mul_scalar(const Tensor& x, double c) {
  return make_result(x.shape(), map(x, [c](double v) { return v * c; }), {x},
                     [c](const Tensor&, const Tensor& g, const std::vector<bool>&) {
                       return std::vector<Tensor>{mul_scalar(g, c)};
                     },
                     "mul_scalar");
}

Tensor pow_scalar(const Tensor& x, double exponent) {
  return make_result(x.shape(), map(x, [exponent](double v) { return std::pow(v, exponent); }), {x},
                     [x, exponent](const Tensor&, const Tensor& g, const std::vector<bool>&) {
                       return std::vector<Tensor>{mul(g, mul_scalar(pow_scalar(x, exponent - 1.0), exponent))};
                     },
                     "pow");
}

Tensor sqrt(const Tensor& x) {
  return make_result(x.shape(), map(x, [](double v) { return std::sqrt(v); }), {x},
                     [](const Tensor& self, const Tensor& g, const std::vector<bool>&) {
                       return std::vector<Tensor>{safe_div(g, mul_scalar(self, 2.0))};
                     },
                     "sqrt");
}

Tensor tanh(const Tensor& x) {
  return make_result(x.shape(), map(x, [](double v) { return std::tanh(v); }), {x},
                     [](const Tensor& self, const Tensor& g, const std::vector<bool>&) {
                       return std::vector<Tensor>{mul(g, add_scalar(neg(mul(self, self)), 1.0))};
                     },
                     "tanh");
}

Tensor sigmoid(const Tensor& x) {
  const auto f = [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  };
  return make_result(x.shape(), map(x, f), {x},
                     [](const Tensor& self, const Tensor& g, const std::vector<bool>&) {
                       return std::vector<Tensor>{mul(g, mul(self, add_scalar(neg(self), 1.0)))};
                     },
                     "sigmoid");
}

Tensor softplus(const Tensor& x) {
  const auto f = [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); };
  return make_result(x.shape(), map(x, f), {x},
                     [x](const Tensor&, const Tensor& g, const std::vector<bool>&) {
                       return std::vector<Tensor>{mul(g, sigmoid(x))};
                     },
                     "softplus");
}

Tensor leaky_relu(const Tensor& x, double slope) {
  // Piecewise-linear: the product with a constant 0/slope/1 mask has the exact
  // first derivative and a zero second derivative away from the kink.
  const Tensor mask = Tensor::from_values(x.shape(), map(x, [slope](double v) { return v > 0.0 ? 1.0 : slope; }));
  return mul(x, mask);
}

Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0); }

Tensor sum_to(const Tensor& x, const Shape& target) {
  const Shape s = x.shape();
  if (!fits(s.batch, target.batch) || !fits(s.channels, target.channels) || !fits(s.length, target.length))
    throw Error(ErrorKind::shape, "cannot sum " + s.str() + " onto " + target.str());
  std::vector<double> y(target.numel(), 0.0);
  const Strides st = broadcast_strides(target);
  const auto xv = x.values();
  std::size_t i = 0;
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t c = 0; c < s.channels; ++c) {
      const std::size_t base = n * st.b + c * st.c;
      if (st.l == 0) {
        double acc = 0.0;
        for (std::size_t l = 0; l < s.length; ++l) acc += xv[i++];
        y[base] += acc;
      } else {
        for (std::size_t l = 0; l < s.length; ++l) y[base + l] += xv[i++];
      }
    }
  return make_result(target, std::move(y), {x},
                     [s](const Tensor&, const Tensor& g, const std::vector<bool>&) {
                       return std::vector<Tensor>{expand(g, s)};
                     },
                     "sum_to");
}

Tensor expand(const Tensor& x, const Shape& target) {
  const Shape s = x.shape();
  if (!fits(target.batch, s.batch) || !fits(target.channels, s.channels) || !fits(target.length, s.length))
    throw Error(ErrorKind::shape, "cannot expand " + s.str() + " to " + target.str());
  std::vector<double> y(target.numel());
  const Strides st = broadcast_strides(s);
  const auto xv = x.values();
  std::size_t i = 0;
  for (std::size_t n = 0; n < target.batch; ++n)
    for (std::size_t c = 0; c < target.channels; ++c) {
      const std::size_t base = n * st.b + c * st.c;
      for (std::size_t l = 0; l < target.length; ++l) y[i++] = xv[base + l * st.l];
    }
  return make_result(target, std::move(y), {x},
                     [s](const Tensor&, const Tensor& g, const std::vector<bool>&) {
                       return std::vector<Tensor>{sum_to(g, s)};
                     },
                     "expand");
}

Tensor sum(const Tensor& x) { return sum_to(x, Shape{}); }

Tensor mean(const Tensor& x) { return mul_scalar(sum(x), 1.0 / static_cast<double>(x.numel())); }

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, ConvGeometry geo) {
  if (kernel == 0 || geo.stride == 0) throw Error(ErrorKind::shape, "kernel and stride must be >= 1");
  const std::size_t padded = length + 2 * geo.padding;
  if (padded < kernel)
    throw Error(ErrorKind::shape, "input length " + std::to_string(length) + " is shorter than kernel " +
                                      std::to_string(kernel) + " after padding");
  if ((padded - kernel) % geo.stride != 0)
    throw Error(ErrorKind::shape, "conv output length (" + std::to_string(length) + " + 2*" +
                                      std::to_string(geo.padding) + " - " + std::to_string(kernel) + ")/" +
                                      std::to_string(geo.stride) + " + 1 is not an integer");
  return (padded - kernel) / geo.stride + 1;
}

std::size_t conv1d_transpose_output_length(std::size_t length, std::size_t kernel, ConvGeometry geo) {
  if (kernel == 0 || geo.stride == 0) throw Error(ErrorKind::shape, "kernel and stride must be >= 1");
  if (length == 0) throw Error(ErrorKind::shape, "transposed conv input is empty");
  const auto out = static_cast<std::ptrdiff_t>((length - 1) * geo.stride + kernel) -
                   static_cast<std::ptrdiff_t>(2 * geo.padding);
  if (out < 1) throw Error(ErrorKind::shape, "transposed conv output length " + std::to_string(out) + " < 1");
  return static_cast<std::size_t>(out);
}

Tensor conv1d(const Tensor& x, const Tensor& w, ConvGeometry geo) {
  const Shape xs = x.shape(), ws = w.shape();
  if (xs.channels != ws.channels)
    throw Error(ErrorKind::shape, "conv1d input " + xs.str() + " does not match weights " + ws.str());
  kernels::ConvDims d{xs.batch, xs.channels, ws.batch, ws.length, xs.length,
                      conv1d_output_length(xs.length, ws.length, geo), geo.stride, geo.padding};
  const Shape out{xs.batch, ws.batch, d.out_length};
  std::vector<double> y(out.numel());
  kernels::conv1d_forward(d, x.values(), w.values(), y);
  return make_result(out, std::move(y), {x, w},
                     [x, w, geo](const Tensor&, const Tensor& g, const std::vector<bool>& needs) {
                       std::vector<Tensor> r(2);
                       if (needs[0]) r[0] = conv1d_transpose(g, w, geo, x.shape().length);
                       if (needs[1]) r[1] = conv1d_weight_grad(x, g, w.shape().length, geo);
                       return r;
                     },
                     "conv1d");
}

Tensor conv1d_transpose(const Tensor& g, const Tensor& w, ConvGeometry geo, std::size_t out_length) {
  const Shape gs = g.shape(), ws = w.shape();
  if (gs.channels != ws.batch)
    throw Error(ErrorKind::shape, "conv1d_transpose input " + gs.str() + " does not match weights " + ws.str());
  if (out_length == 0) out_length = conv1d_transpose_output_length(gs.length, ws.length, geo);
  if (conv1d_output_length(out_length, ws.length, geo) != gs.length)
    throw Error(ErrorKind::shape, "transposed conv output length " + std::to_string(out_length) +
                                      " is inconsistent with input length " + std::to_string(gs.length));
  kernels::ConvDims d{gs.batch, ws.channels, ws.batch, ws.length, out_length, gs.length, geo.stride, geo.padding};
  const Shape out{gs.batch, ws.channels, out_length};
  std::vector<double> y(out.numel());
  kernels::conv1d_transpose(d, g.values(), w.values(), y);
  return make_result(out, std::move(y), {g, w},
                     [g, w, geo](const Tensor&, const Tensor& h, const std::vector<bool>& needs) {
                       std::vector<Tensor> r(2);
                       if (needs[0]) r[0] = conv1d(h, w, geo);
                       if (needs[1]) r[1] = conv1d_weight_grad(h, g, w.shape().length, geo);
                       return r;
                     },
                     "conv1d_transpose");
}

Tensor conv1d_weight_grad(const Tensor& x, const Tensor& g, std::size_t kernel, ConvGeometry geo) {
  const Shape xs = x.shape(), gs = g.shape();
  if (xs.batch != gs.batch) throw Error(ErrorKind::shape, "batch mismatch " + xs.str() + " vs " + gs.str());
  if (conv1d_output_length(xs.length, kernel, geo) != gs.length)
    throw Error(ErrorKind::shape, "gradient length does not match conv output of " + xs.str());
  kernels::ConvDims d{xs.batch, xs.channels, gs.channels, kernel, xs.length, gs.length, geo.stride, geo.padding};
  const Shape out{gs.channels, xs.channels, kernel};
  std::vector<double> y(out.numel());
  kernels::conv1d_weight_grad(d, x.values(), g.values(), y);
  return make_result(out, std::move(y), {x, g},
                     [x, g, geo](const Tensor&, const Tensor& wbar, const std::vector<bool>& needs) {
                       std::vector<Tensor> r(2);
                       if (needs[0]) r[0] = conv1d_transpose(g, wbar, geo, x.shape().length);
                       if (needs[1]) r[1] = conv1d(x, wbar, geo);
                       return r;
                     },
                     "conv1d_weight_grad");
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const Shape bs = bias.shape();
  if (bs.batch != 1 || bs.length != 1 || bs.channels != x.shape().channels)
    throw Error(ErrorKind::shape, "bias " + bs.str() + " does not match input " + x.shape().str());
  return add(x, bias);
}

}  // namespace wdcgan::nn
