#pragma once

// Differentiable operations on Tensor.
//
// Elementwise binary ops broadcast: along each axis the sizes must match or one
// of them must be 1.

#include <cstddef>

#include "wdcgan/tensor.hpp"

namespace wdcgan::nn {

Shape broadcast_shape(const Shape& a, const Shape& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// a / b with the quotient defined as 0 wherever b == 0.
Tensor safe_div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& x);
Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);
Tensor pow_scalar(const Tensor& x, double exponent);
// Derivative at 0 is taken as 0 rather than infinity.
Tensor sqrt(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// log(1 + exp(x)), evaluated stably.
Tensor softplus(const Tensor& x);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);

// Reduce by summation onto `target`; each target axis is 1 or equal to the source axis.
Tensor sum_to(const Tensor& x, const Shape& target);
Tensor expand(const Tensor& x, const Shape& target);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, ConvGeometry geo);
std::size_t conv1d_transpose_output_length(std::size_t length, std::size_t kernel, ConvGeometry geo);

/// Cross-correlation: y[b,o,j] = sum_{c,k} x[b,c,j*stride+k-padding] * w[o,c,k].
/// x: (B, C, L), w: (O, C, K) -> (B, O, Lout). Lout must come out exact.
Tensor conv1d(const Tensor& x, const Tensor& w, ConvGeometry geo);

/// Adjoint of conv1d in x (scatter-add). g: (B, O, Lin), w: (O, C, K) -> (B, C, out_length).
/// out_length defaults to (Lin - 1) * stride - 2 * padding + K.
Tensor conv1d_transpose(const Tensor& g, const Tensor& w, ConvGeometry geo, std::size_t out_length = 0);

/// Adjoint of conv1d in w. x: (B, C, L), g: (B, O, Lout) -> (O, C, kernel).
Tensor conv1d_weight_grad(const Tensor& x, const Tensor& g, std::size_t kernel, ConvGeometry geo);

// Per-channel bias of shape (1, C, 1), broadcast over batch and length.
Tensor add_bias(const Tensor& x, const Tensor& bias);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator-(const Tensor& x) { return neg(x); }
inline Tensor operator*(const Tensor& x, double c) { return mul_scalar(x, c); }
inline Tensor operator*(double c, const Tensor& x) { return mul_scalar(x, c); }
inline Tensor operator+(const Tensor& x, double c) { return add_scalar(x, c); }

}  // namespace wdcgan::nn
