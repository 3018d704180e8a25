#include "wdcgan/gan_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "text_io.hpp"
#include "wdcgan/error.hpp"
#include "wdcgan/rng.hpp"

namespace wdcgan::eval {

GaussianSummary gaussian_summary(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorKind::invalid_argument, "Gaussian summary of an empty window");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

GaussianSummary gaussian_summary(const signal::Window& window) { return gaussian_summary(window.samples); }

MultiGaussianSummary gaussian_summary(const Eigen::MatrixXd& observations) {
  if (observations.rows() == 0 || observations.cols() == 0)
    throw Error(ErrorKind::invalid_argument, "Gaussian summary of an empty observation matrix");
  MultiGaussianSummary s;
  s.mean = observations.colwise().mean().transpose();
  const Eigen::MatrixXd centered = observations.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * centered) / static_cast<double>(observations.rows());
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
  return s;
}

std::vector<double> pool_samples(std::span<const signal::Window> windows) {
  std::vector<double> out;
  for (const auto& w : windows) out.insert(out.end(), w.samples.begin(), w.samples.end());
  return out;
}

double fid(const GaussianSummary& a, const GaussianSummary& b) {
  const double dm = a.mean - b.mean;
  const double ds = a.std - b.std;
  return dm * dm + ds * ds;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double fid(const MultiGaussianSummary& a, const MultiGaussianSummary& b) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != b.covariance.rows() ||
      a.covariance.rows() != a.mean.size())
    throw Error(ErrorKind::shape, "Gaussian summaries of different dimensionality");
  const Eigen::MatrixXd ra = psd_sqrt(a.covariance);
  const Eigen::MatrixXd cross = psd_sqrt(ra * b.covariance * ra);
  const double trace = (a.covariance + b.covariance - 2.0 * cross).trace();
  return std::max(0.0, (a.mean - b.mean).squaredNorm() + trace);
}

void SsimParams::validate() const {
  if (!(c1() > 0.0) || !(c2() > 0.0)) throw Error(ErrorKind::invalid_argument, "SSIM constants must be positive");
  if (!(duplicate_threshold > 0.0 && duplicate_threshold <= 1.0))
    throw Error(ErrorKind::invalid_argument, "duplicate threshold must lie in (0, 1]");
}

double ssim(std::span<const double> x, std::span<const double> g, const SsimParams& params) {
  params.validate();
  if (x.size() != g.size())
    throw Error(ErrorKind::shape, "SSIM of windows with lengths " + std::to_string(x.size()) + " and " +
                                      std::to_string(g.size()));
  if (x.empty()) throw Error(ErrorKind::invalid_argument, "SSIM of empty windows");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double mg = std::accumulate(g.begin(), g.end(), 0.0) / n;
  double vx = 0.0, vg = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dg = g[i] - mg;
    vx += dx * dx;
    vg += dg * dg;
    cov += dx * dg;
  }
  vx /= n;
  vg /= n;
  cov /= n;
  const double c1 = params.c1(), c2 = params.c2();
  return ((2.0 * mx * mg + c1) * (2.0 * cov + c2)) / ((mx * mx + mg * mg + c1) * (vx + vg + c2));
}

CreativityResult creativity_scores(std::span<const signal::Window> generated, std::span<const signal::Window> real,
                                   const SsimParams& params) {
  if (generated.empty() || real.empty())
    throw Error(ErrorKind::invalid_argument, "creativity needs non-empty generated and real sets");
  CreativityResult r;
  r.scores.reserve(generated.size() * real.size());
  for (const auto& g : generated) {
    for (const auto& x : real) {
      const double s = ssim(g.samples, x.samples, params);
      r.scores.push_back(s);
      if (s > params.duplicate_threshold) ++r.duplicate_count;
    }
  }
  return r;
}

std::vector<double> diversity_scores(std::span<const signal::Window> generated, const SsimParams& params) {
  if (generated.size() < 2) throw Error(ErrorKind::invalid_argument, "diversity needs at least two windows");
  std::vector<double> scores;
  scores.reserve(generated.size() * (generated.size() - 1) / 2);
  for (std::size_t i = 0; i < generated.size(); ++i)
    for (std::size_t j = i + 1; j < generated.size(); ++j)
      scores.push_back(ssim(generated[i].samples, generated[j].samples, params));
  return scores;
}

std::vector<FidPair> fid_scores(std::span<const signal::Window> generated, std::span<const signal::Window> real,
                                Pairing pairing, std::uint64_t seed) {
  if (generated.empty() || real.empty())
    throw Error(ErrorKind::invalid_argument, "FID scores need non-empty generated and real sets");
  std::vector<GaussianSummary> gs, rs;
  for (const auto& w : generated) gs.push_back(gaussian_summary(w));
  for (const auto& w : real) rs.push_back(gaussian_summary(w));
  std::vector<FidPair> out;
  if (pairing == Pairing::all_pairs) {
    for (std::size_t i = 0; i < gs.size(); ++i)
      for (std::size_t j = 0; j < rs.size(); ++j) out.push_back({i, j, fid(gs[i], rs[j])});
    return out;
  }
  std::vector<std::size_t> perm(rs.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t pairs = std::min(gs.size(), rs.size());
  for (std::size_t i = 0; i < pairs; ++i) out.push_back({i, perm[i], fid(gs[i], rs[perm[i]])});
  return out;
}

DensityCurve pdf_estimate(std::span<const double> scores, std::size_t bin_count) {
  if (scores.empty()) throw Error(ErrorKind::invalid_argument, "density of an empty score set");
  if (bin_count == 0) throw Error(ErrorKind::invalid_argument, "bin_count must be >= 1");
  auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  DensityCurve c;
  c.bin_width = (hi - lo) / static_cast<double>(bin_count);
  std::vector<std::size_t> counts(bin_count, 0);
  for (double v : scores) {
    auto bin = static_cast<std::size_t>((v - lo) / c.bin_width);
    ++counts[std::min(bin, bin_count - 1)];
  }
  const double norm = static_cast<double>(scores.size()) * c.bin_width;
  for (std::size_t b = 0; b < bin_count; ++b) {
    c.centers.push_back(lo + (static_cast<double>(b) + 0.5) * c.bin_width);
    c.densities.push_back(static_cast<double>(counts[b]) / norm);
  }
  return c;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::invalid_argument, "quantile of an empty set");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return (1.0 - frac) * sorted[lo] + frac * sorted[hi];
}

BoxStats boxplot_stats(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::invalid_argument, "box-plot statistics of an empty window");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.min = v.front();
  b.max = v.back();
  b.q1 = quantile_sorted(v, 0.25);
  b.median = quantile_sorted(v, 0.5);
  b.q3 = quantile_sorted(v, 0.75);
  b.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const double iqr = b.q3 - b.q1;
  const double low_fence = b.q1 - 1.5 * iqr, high_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = *std::lower_bound(v.begin(), v.end(), low_fence);
  b.whisker_high = *std::prev(std::upper_bound(v.begin(), v.end(), high_fence));
  return b;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_values_csv(const std::filesystem::path& path, std::span<const double> values) {
  auto out = open_csv(path);
  out << "value\n";
  for (double v : values) out << detail::format_double(v) << '\n';
}

void write_density_csv(const std::filesystem::path& path, const DensityCurve& curve) {
  auto out = open_csv(path);
  out << "bin_center,density\n";
  for (std::size_t i = 0; i < curve.centers.size(); ++i)
    out << detail::format_double(curve.centers[i]) << ',' << detail::format_double(curve.densities[i]) << '\n';
}

void write_boxplot_csv(const std::filesystem::path& path, std::span<const std::pair<std::string, BoxStats>> rows) {
  auto out = open_csv(path);
  out << "label,min,q1,median,q3,max,whisker_low,whisker_high,mean\n";
  for (const auto& [label, b] : rows) {
    out << label;
    for (double v : {b.min, b.q1, b.median, b.q3, b.max, b.whisker_low, b.whisker_high, b.mean})
      out << ',' << detail::format_double(v);
    out << '\n';
  }
}

}  // namespace wdcgan::eval
