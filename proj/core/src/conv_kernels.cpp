#include "conv_kernels.hpp"

#include <algorithm>
#include <vector>

namespace wdcgan::nn::kernels {

namespace {

// col[(c*K + k) * N + b*Lout + j] = x[b, c, j*stride + k - padding], zero outside.
void im2col(const ConvDims& d, std::span<const double> x, std::vector<double>& col) {
  const std::size_t n = d.batch * d.out_length;
  col.assign(d.in_channels * d.kernel * n, 0.0);
  for (std::size_t c = 0; c < d.in_channels; ++c) {
    for (std::size_t k = 0; k < d.kernel; ++k) {
      double* row = col.data() + (c * d.kernel + k) * n;
      for (std::size_t b = 0; b < d.batch; ++b) {
        const double* xr = x.data() + (b * d.in_channels + c) * d.in_length;
        double* out = row + b * d.out_length;
        for (std::size_t j = 0; j < d.out_length; ++j) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(j * d.stride + k) - static_cast<std::ptrdiff_t>(d.padding);
          if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(d.in_length)) out[j] = xr[pos];
        }
      }
    }
  }
}

// Inverse scatter of im2col: x[b, c, j*stride + k - padding] += col[...].
void col2im(const ConvDims& d, const std::vector<double>& col, std::span<double> x) {
  const std::size_t n = d.batch * d.out_length;
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t c = 0; c < d.in_channels; ++c) {
    for (std::size_t k = 0; k < d.kernel; ++k) {
      const double* row = col.data() + (c * d.kernel + k) * n;
      for (std::size_t b = 0; b < d.batch; ++b) {
        double* xr = x.data() + (b * d.in_channels + c) * d.in_length;
        const double* in = row + b * d.out_length;
        for (std::size_t j = 0; j < d.out_length; ++j) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(j * d.stride + k) - static_cast<std::ptrdiff_t>(d.padding);
          if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(d.in_length)) xr[pos] += in[j];
        }
      }
    }
  }
}

// (B, O, Lout) <-> (O, B*Lout)
void to_rows(const ConvDims& d, std::span<const double> g, std::vector<double>& rows) {
  const std::size_t n = d.batch * d.out_length;
  rows.resize(d.out_channels * n);
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t o = 0; o < d.out_channels; ++o)
      std::copy_n(g.data() + (b * d.out_channels + o) * d.out_length, d.out_length,
                  rows.data() + o * n + b * d.out_length);
}

void from_rows(const ConvDims& d, const std::vector<double>& rows, std::span<double> y) {
  const std::size_t n = d.batch * d.out_length;
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t o = 0; o < d.out_channels; ++o)
      std::copy_n(rows.data() + o * n + b * d.out_length, d.out_length,
                  y.data() + (b * d.out_channels + o) * d.out_length);
}

// c (M, N) = a (M, K) * b (K, N), all row-major.
void gemm_nn(std::size_t m, std::size_t n, std::size_t kk, const double* a, const double* b, double* c) {
  std::fill(c, c + m * n, 0.0);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c + i * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    for (std::size_t k = 0; k < kk; ++k) {
      const double a0 = a[i * kk + k], a1 = a[(i + 1) * kk + k], a2 = a[(i + 2) * kk + k], a3 = a[(i + 3) * kk + k];
      const double* br = b + k * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = br[j];
        c0[j] += a0 * bv;
        c1[j] += a1 * bv;
        c2[j] += a2 * bv;
        c3[j] += a3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t k = 0; k < kk; ++k) {
      const double av = a[i * kk + k];
      const double* br = b + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * br[j];
    }
  }
}

// c (M, N) = a^T * b with a (K, M), b (K, N).
void gemm_tn(std::size_t m, std::size_t n, std::size_t kk, const double* a, const double* b, double* c) {
  std::fill(c, c + m * n, 0.0);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c + i * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    for (std::size_t k = 0; k < kk; ++k) {
      const double* ar = a + k * m + i;
      const double a0 = ar[0], a1 = ar[1], a2 = ar[2], a3 = ar[3];
      const double* br = b + k * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = br[j];
        c0[j] += a0 * bv;
        c1[j] += a1 * bv;
        c2[j] += a2 * bv;
        c3[j] += a3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t k = 0; k < kk; ++k) {
      const double av = a[k * m + i];
      const double* br = b + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * br[j];
    }
  }
}

// c (M, K) = a (M, N) * b^T with b (K, N).
void gemm_nt(std::size_t m, std::size_t kk, std::size_t n, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a + i * n;
    for (std::size_t k = 0; k < kk; ++k) {
      const double* br = b + k * n;
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        s0 += ar[j] * br[j];
        s1 += ar[j + 1] * br[j + 1];
        s2 += ar[j + 2] * br[j + 2];
        s3 += ar[j + 3] * br[j + 3];
      }
      for (; j < n; ++j) s0 += ar[j] * br[j];
      c[i * kk + k] = (s0 + s1) + (s2 + s3);
    }
  }
}

}  // namespace

void conv1d_forward(const ConvDims& d, std::span<const double> x, std::span<const double> w, std::span<double> y) {
  std::vector<double> col;
  im2col(d, x, col);
  const std::size_t n = d.batch * d.out_length;
  std::vector<double> rows(d.out_channels * n);
  gemm_nn(d.out_channels, n, d.in_channels * d.kernel, w.data(), col.data(), rows.data());
  from_rows(d, rows, y);
}

void conv1d_transpose(const ConvDims& d, std::span<const double> g, std::span<const double> w, std::span<double> x) {
  std::vector<double> rows;
  to_rows(d, g, rows);
  const std::size_t n = d.batch * d.out_length;
  std::vector<double> col(d.in_channels * d.kernel * n);
  gemm_tn(d.in_channels * d.kernel, n, d.out_channels, w.data(), rows.data(), col.data());
  col2im(d, col, x);
}

void conv1d_weight_grad(const ConvDims& d, std::span<const double> x, std::span<const double> g, std::span<double> w) {
  std::vector<double> col;
  im2col(d, x, col);
  std::vector<double> rows;
  to_rows(d, g, rows);
  gemm_nt(d.out_channels, d.in_channels * d.kernel, d.batch * d.out_length, rows.data(), col.data(), w.data());
}

}  // namespace wdcgan::nn::kernels
