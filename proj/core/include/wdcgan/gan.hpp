#pragma once

// 1-D Wasserstein DCGAN with gradient penalty: model construction, losses,
// the adversarial training loop, and synthetic window generation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wdcgan/network.hpp"
#include "wdcgan/optim.hpp"
#include "wdcgan/signal.hpp"

namespace wdcgan::gan {

enum class GpMode { interpolated, at_generated };
enum class NoiseDecay { linear_to_zero };

/// Stage layout shared by the generator, the critic, and the classifier.
/// Each stage scales the length by `stride` (kernel 8, stride 4, padding 2 gives x4).
struct Architecture {
  std::size_t stages = 5;
  // Widest hidden layer; halves per stage away from the latent/score end.
  std::size_t top_channels = 256;
  std::size_t kernel = 8;
  std::size_t stride = 4;
  std::size_t padding = 2;
  double leaky_slope = 0.2;
  double dropout = 0.7;
  // 1-based stage after which the critic dropout sits; clamped to stages - 1.
  std::size_t dropout_after_stage = 3;
  // Added to the per-instance variance inside each instance norm. A value
  // near the activation variance keeps part of each channel's energy; with
  // 1e-5 every channel is rescaled to unit variance per window and band
  // energy, which is what separates the two conditions, never reaches the
  // later stages.
  double norm_eps = 1.0;

  void validate() const;
  /// Hidden channel widths of the critic, input side first (32, 64, 128, 256 by default).
  std::vector<std::size_t> critic_channels() const;
};

struct GanConfig {
  double lr_generator = 5e-6;
  double lr_critic = 2e-5;
  std::size_t critic_iterations = 12;
  double lambda_gp = 20.0;
  std::size_t batch_size = 1024;
  std::size_t epochs = 600;
  std::size_t latent_channels = 100;
  double noise_sigma0 = 0.1;
  NoiseDecay noise_decay = NoiseDecay::linear_to_zero;
  GpMode gp_mode = GpMode::interpolated;
  std::uint64_t seed = 0;

  Architecture arch;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 1e-2;
  double init_std = 0.02;

  // Epochs between checkpoints; 0 disables them.
  std::size_t checkpoint_interval = 0;
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

/// Stable hash of every training-relevant field (the checkpoint directory is excluded).
std::uint64_t config_hash(const GanConfig& cfg);

struct GanModels {
  nn::NetworkSpec generator;
  nn::NetworkSpec critic;
};

/// Generator: `stages` transposed convs from (latent, 1) up to (1, window_len),
/// batch norm + ReLU between stages, Tanh at the end. Critic: the mirror image
/// with strided convs, instance norm + LeakyReLU between stages, one dropout,
/// and a raw score per batch element.
GanModels build_gan_models(std::size_t window_len, const GanConfig& cfg);

/// Critic body shared with the classifier (no dropout when with_dropout is false).
nn::NetworkSpec build_critic_spec(std::size_t window_len, const Architecture& arch, bool with_dropout);

/// Per-element penalty points: eps * real + (1 - eps) * fake.
nn::Tensor interpolate(const nn::Tensor& real, const nn::Tensor& fake, std::span<const double> eps);
std::vector<double> draw_interpolation_weights(std::size_t batch, std::uint64_t seed);

/// lambda * mean_b (||grad_x critic(x_b)||_2 - 1)^2 at the given points.
/// Differentiable with respect to the critic parameters.
nn::Tensor gradient_penalty_at(nn::Network& critic, const nn::Tensor& points, double lambda_gp, nn::Mode mode,
                               std::uint64_t seed);

nn::Tensor gradient_penalty(nn::Network& critic, const nn::Tensor& real, const nn::Tensor& fake, double lambda_gp,
                            GpMode gp_mode, std::uint64_t seed, nn::Mode mode = nn::Mode::train);

/// mean critic(fake) - mean critic(real) + gradient penalty.
nn::Tensor critic_loss(nn::Network& critic, const nn::Tensor& real, const nn::Tensor& fake, double lambda_gp,
                       GpMode gp_mode, std::uint64_t seed, nn::Mode mode = nn::Mode::train);

/// -mean critic(generator(noise)).
nn::Tensor generator_loss(nn::Network& critic, nn::Network& generator, const nn::Tensor& noise, std::uint64_t seed,
                          nn::Mode mode = nn::Mode::train);

/// Instance-noise standard deviation during the given 0-based epoch.
double instance_noise_std(const GanConfig& cfg, std::size_t epoch);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double critic_loss = 0.0;
  double generator_loss = 0.0;
  double fid = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t critic_steps = 0;
  std::size_t generator_steps = 0;

  /// CSV with header `epoch,critic_loss,generator_loss,fid,seconds`.
  void write_csv(const std::filesystem::path& path) const;
};

struct GanResult {
  nn::Network generator;
  nn::Network critic;
  TrainLog log;
  // Generator checkpoints; each has a `.json` sidecar with epoch, config hash and monitor FID.
  std::vector<std::filesystem::path> checkpoints;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adversarial training on normalized damaged windows. Each minibatch gets
/// `critic_iterations` critic updates followed by one generator update.
/// `real_eval_batch` feeds the per-epoch monitor FID (pooled Gaussian fit of a
/// fixed-noise generated batch in eval mode against these windows).
GanResult train_gan(const GanConfig& cfg, std::span<const signal::Window> damaged_windows,
                    std::span<const signal::Window> real_eval_batch, const EpochCallback& on_epoch = {});

/// n windows from z ~ N(0, 1), generator in eval mode; condition damaged,
/// provenance synthetic.
std::vector<signal::Window> generate(nn::Network& generator, std::size_t n, std::uint64_t seed);

/// (n, channels, length) tensor from equal-length windows.
nn::Tensor windows_to_tensor(std::span<const signal::Window> windows);
nn::Tensor windows_to_tensor(std::span<const signal::Window> windows, std::span<const std::size_t> indices);

}  // namespace wdcgan::gan
