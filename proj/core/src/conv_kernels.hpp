#pragma once

// Raw 1-D convolution kernels on contiguous (B, C, L) buffers. Batch is folded
// into the GEMM column dimension via im2col so short output lengths still
// give long inner loops.

#include <cstddef>
#include <span>

namespace wdcgan::nn::kernels {

struct ConvDims {
  std::size_t batch = 0;
  std::size_t in_channels = 0;   // C
  std::size_t out_channels = 0;  // O
  std::size_t kernel = 0;        // K
  std::size_t in_length = 0;     // L of the conv input
  std::size_t out_length = 0;    // L of the conv output
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// y (B, O, Lout) = conv(x (B, C, L), w (O, C, K))
void conv1d_forward(const ConvDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y);

// x (B, C, L) = conv^T(g (B, O, Lout), w (O, C, K))
void conv1d_transpose(const ConvDims& d, std::span<const double> g, std::span<const double> w, std::span<double> x);

// w (O, C, K) = sum over batch/positions of g (B, O, Lout) * x (B, C, L)
void conv1d_weight_grad(const ConvDims& d, std::span<const double> x, std::span<const double> g, std::span<double> w);

}  // namespace wdcgan::nn::kernels
