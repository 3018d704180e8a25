#pragma once

// Similarity diagnostics for generated windows: Frechet distances between
// Gaussian fits, global-statistics SSIM, and the score-set summaries used for
// density and box plots.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wdcgan/signal.hpp"

namespace wdcgan::eval {

struct GaussianSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct MultiGaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

GaussianSummary gaussian_summary(std::span<const double> samples);
GaussianSummary gaussian_summary(const signal::Window& window);

/// Rows are observations, columns are dimensions; population covariance.
MultiGaussianSummary gaussian_summary(const Eigen::MatrixXd& observations);

/// Concatenation of all window samples, in order.
std::vector<double> pool_samples(std::span<const signal::Window> windows);

/// (mu_a - mu_b)^2 + (sigma_a - sigma_b)^2.
double fid(const GaussianSummary& a, const GaussianSummary& b);

/// |mu_a - mu_b|^2 + Tr(Ca + Cb - 2 (Ca^1/2 Cb Ca^1/2)^1/2), negative eigenvalues clamped to 0.
double fid(const MultiGaussianSummary& a, const MultiGaussianSummary& b);

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 2.0;
  double duplicate_threshold = 0.8;

  double c1() const noexcept { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const noexcept { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  void validate() const;
};

double ssim(std::span<const double> x, std::span<const double> g, const SsimParams& params = {});

struct CreativityResult {
  std::vector<double> scores;  // row-major over (generated, real)
  std::size_t duplicate_count = 0;
};

CreativityResult creativity_scores(std::span<const signal::Window> generated, std::span<const signal::Window> real,
                                   const SsimParams& params = {});

/// SSIM of every unordered pair (i < j), in lexicographic pair order.
std::vector<double> diversity_scores(std::span<const signal::Window> generated, const SsimParams& params = {});

enum class Pairing { one_to_one, all_pairs };

struct FidPair {
  std::size_t generated = 0;
  std::size_t real = 0;
  double score = 0.0;
};

/// Per-window FID between generated and real windows. one_to_one pairs
/// generated[i] with a random permutation of the reals, without replacement,
/// for min(m, n) pairs; all_pairs scores every combination.
std::vector<FidPair> fid_scores(std::span<const signal::Window> generated, std::span<const signal::Window> real,
                                Pairing pairing, std::uint64_t seed);

struct DensityCurve {
  std::vector<double> centers;
  std::vector<double> densities;
  double bin_width = 0.0;
};

/// Equal-width histogram over [min, max], normalized to unit Riemann sum.
/// A zero-width range becomes [v - 0.5, v + 0.5].
DensityCurve pdf_estimate(std::span<const double> scores, std::size_t bin_count);

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  double mean = 0.0;
};

/// Linear-interpolation quantile of already sorted values, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

BoxStats boxplot_stats(std::span<const double> values);

void write_values_csv(const std::filesystem::path& path, std::span<const double> values);
void write_density_csv(const std::filesystem::path& path, const DensityCurve& curve);
void write_boxplot_csv(const std::filesystem::path& path, std::span<const std::pair<std::string, BoxStats>> rows);

}  // namespace wdcgan::eval
