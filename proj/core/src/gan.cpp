#include "wdcgan/gan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <type_traits>

#include "text_io.hpp"
#include "wdcgan/checkpoint.hpp"
#include "wdcgan/error.hpp"
#include "wdcgan/gan_eval.hpp"
#include "wdcgan/ops.hpp"
#include "wdcgan/rng.hpp"

namespace wdcgan::gan {

using nn::LayerSpec;
using nn::Mode;
using nn::NetworkSpec;
using nn::Shape;
using nn::Tensor;

void Architecture::validate() const {
  if (stages == 0) throw Error(ErrorKind::invalid_argument, "architecture needs at least one stage");
  if (kernel == 0 || stride == 0) throw Error(ErrorKind::invalid_argument, "kernel and stride must be >= 1");
  if (stages > 1) {
    const std::size_t divisor = std::size_t{1} << (stages - 2);
    if (top_channels == 0 || top_channels % divisor != 0)
      throw Error(ErrorKind::invalid_argument, "top_channels must be a positive multiple of 2^(stages-2)");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorKind::invalid_argument, "dropout must be in [0, 1)");
  if (!(norm_eps > 0.0 && std::isfinite(norm_eps))) throw Error(ErrorKind::invalid_argument, "norm_eps must be positive");
}

std::vector<std::size_t> Architecture::critic_channels() const {
  std::vector<std::size_t> ch;
  for (std::size_t s = 1; s < stages; ++s) ch.push_back(top_channels >> (stages - 1 - s));
  return ch;
}

void GanConfig::validate() const {
  if (!(lr_generator > 0.0) || !(lr_critic > 0.0)) throw Error(ErrorKind::invalid_argument, "learning rates must be > 0");
  if (critic_iterations == 0) throw Error(ErrorKind::invalid_argument, "critic_iterations must be >= 1");
  if (!(lambda_gp >= 0.0)) throw Error(ErrorKind::invalid_argument, "lambda_gp must be >= 0");
  if (batch_size == 0) throw Error(ErrorKind::invalid_argument, "batch_size must be >= 1");
  if (epochs == 0) throw Error(ErrorKind::invalid_argument, "epochs must be >= 1");
  if (latent_channels == 0) throw Error(ErrorKind::invalid_argument, "latent_channels must be >= 1");
  if (!(noise_sigma0 >= 0.0)) throw Error(ErrorKind::invalid_argument, "noise_sigma0 must be >= 0");
  arch.validate();
}

std::uint64_t config_hash(const GanConfig& cfg) {
  std::string text;
  auto put = [&text](const auto& v) {
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
      text += detail::format_double(v);
    else
      text += std::to_string(v);
    text += ';';
  };
  put(cfg.lr_generator);
  put(cfg.lr_critic);
  put(cfg.critic_iterations);
  put(cfg.lambda_gp);
  put(cfg.batch_size);
  put(cfg.epochs);
  put(cfg.latent_channels);
  put(cfg.noise_sigma0);
  put(static_cast<int>(cfg.noise_decay));
  put(static_cast<int>(cfg.gp_mode));
  put(cfg.seed);
  put(cfg.arch.stages);
  put(cfg.arch.top_channels);
  put(cfg.arch.kernel);
  put(cfg.arch.stride);
  put(cfg.arch.padding);
  put(cfg.arch.leaky_slope);
  put(cfg.arch.dropout);
  put(cfg.arch.dropout_after_stage);
  put(cfg.beta1);
  put(cfg.beta2);
  put(cfg.adam_eps);
  put(cfg.weight_decay);
  put(cfg.init_std);
  put(cfg.checkpoint_interval);
  return fnv1a(text);
}

NetworkSpec build_critic_spec(std::size_t window_len, const Architecture& arch, bool with_dropout) {
  arch.validate();
  const auto hidden = arch.critic_channels();
  const std::size_t dropout_stage = std::min(arch.dropout_after_stage, arch.stages - 1);
  NetworkSpec spec;
  for (std::size_t s = 1; s <= arch.stages; ++s) {
    const std::size_t in = s == 1 ? 1 : hidden[s - 2];
    const std::size_t out = s == arch.stages ? 1 : hidden[s - 1];
    spec.layers.push_back(LayerSpec::conv1d(in, out, arch.kernel, arch.stride, arch.padding));
    if (s < arch.stages) {
      spec.layers.push_back(LayerSpec::instance_norm(out, arch.norm_eps));
      spec.layers.push_back(LayerSpec::leaky_relu(arch.leaky_slope));
      if (with_dropout && s == dropout_stage && arch.dropout > 0.0) spec.layers.push_back(LayerSpec::dropout(arch.dropout));
    }
  }
  Shape out;
  try {
    out = spec.output_shape({1, 1, window_len});
  } catch (const Error& e) {
    throw Error(ErrorKind::shape, "window length " + std::to_string(window_len) + " does not fit the " +
                                      std::to_string(arch.stages) + "-stage critic: " + e.what());
  }
  if (out.length != 1)
    throw Error(ErrorKind::shape, "window length " + std::to_string(window_len) + " leaves " +
                                      std::to_string(out.length) + " critic outputs per window; expected 1");
  return spec;
}

GanModels build_gan_models(std::size_t window_len, const GanConfig& cfg) {
  cfg.validate();
  const auto& arch = cfg.arch;
  auto hidden = arch.critic_channels();
  std::reverse(hidden.begin(), hidden.end());

  GanModels models;
  for (std::size_t s = 1; s <= arch.stages; ++s) {
    const std::size_t in = s == 1 ? cfg.latent_channels : hidden[s - 2];
    const std::size_t out = s == arch.stages ? 1 : hidden[s - 1];
    models.generator.layers.push_back(LayerSpec::tconv1d(in, out, arch.kernel, arch.stride, arch.padding));
    if (s < arch.stages) {
      models.generator.layers.push_back(LayerSpec::batch_norm(out));
      models.generator.layers.push_back(LayerSpec::relu());
    } else {
      models.generator.layers.push_back(LayerSpec::tanh());
    }
  }
  Shape gen_out;
  try {
    gen_out = models.generator.output_shape({1, cfg.latent_channels, 1});
  } catch (const Error& e) {
    throw Error(ErrorKind::shape, std::string("generator stages do not compose: ") + e.what());
  }
  if (gen_out.length != window_len)
    throw Error(ErrorKind::shape, "the " + std::to_string(arch.stages) + "-stage generator emits length " +
                                      std::to_string(gen_out.length) + ", not window length " + std::to_string(window_len));
  models.critic = build_critic_spec(window_len, arch, true);
  return models;
}

std::vector<double> draw_interpolation_weights(std::size_t batch, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> eps(batch);
  for (double& e : eps) e = u(rng);
  return eps;
}

Tensor interpolate(const Tensor& real, const Tensor& fake, std::span<const double> eps) {
  if (real.shape() != fake.shape())
    throw Error(ErrorKind::shape, "real batch " + real.shape().str() + " and fake batch " + fake.shape().str() + " differ");
  if (eps.size() != real.shape().batch) throw Error(ErrorKind::shape, "one interpolation weight per batch element");
  const Shape per{real.shape().batch, 1, 1};
  std::vector<double> one_minus(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) one_minus[i] = 1.0 - eps[i];
  const Tensor e = Tensor::from_values(per, std::vector<double>(eps.begin(), eps.end()));
  const Tensor f = Tensor::from_values(per, std::move(one_minus));
  return nn::add(nn::mul(real, e), nn::mul(fake, f));
}

Tensor gradient_penalty_at(nn::Network& critic, const Tensor& points, double lambda_gp, Mode mode, std::uint64_t seed) {
  const Shape s = points.shape();
  if (s.batch == 0 || s.numel() == 0) throw Error(ErrorKind::invalid_argument, "gradient penalty of an empty batch");
  const Tensor g = nn::input_gradient(critic, points, mode, seed);
  const Tensor norms = nn::sqrt(nn::sum_to(nn::mul(g, g), {s.batch, 1, 1}));
  const Tensor dev = nn::add_scalar(norms, -1.0);
  return nn::mul_scalar(nn::mean(nn::mul(dev, dev)), lambda_gp);
}

Tensor gradient_penalty(nn::Network& critic, const Tensor& real, const Tensor& fake, double lambda_gp, GpMode gp_mode,
                        std::uint64_t seed, Mode mode) {
  if (real.shape().batch == 0 || real.numel() == 0)
    throw Error(ErrorKind::invalid_argument, "gradient penalty of an empty batch");
  if (real.shape() != fake.shape())
    throw Error(ErrorKind::shape, "real batch " + real.shape().str() + " and fake batch " + fake.shape().str() + " differ");
  Tensor points;
  if (gp_mode == GpMode::interpolated) {
    const auto eps = draw_interpolation_weights(real.shape().batch, derive_seed(seed, "gp-epsilon"));
    points = interpolate(real.detach(), fake.detach(), eps);
  } else {
    points = fake.detach();
  }
  return gradient_penalty_at(critic, points, lambda_gp, mode, derive_seed(seed, "gp-critic"));
}

Tensor critic_loss(nn::Network& critic, const Tensor& real, const Tensor& fake, double lambda_gp, GpMode gp_mode,
                   std::uint64_t seed, Mode mode) {
  const Tensor gp = gradient_penalty(critic, real, fake, lambda_gp, gp_mode, seed, mode);
  const Tensor score_fake = nn::mean(critic.forward(fake, mode, derive_seed(seed, "critic-fake")));
  const Tensor score_real = nn::mean(critic.forward(real, mode, derive_seed(seed, "critic-real")));
  return nn::add(nn::sub(score_fake, score_real), gp);
}

Tensor generator_loss(nn::Network& critic, nn::Network& generator, const Tensor& noise, std::uint64_t seed, Mode mode) {
  const auto& first = generator.spec().layers.front();
  if (noise.shape().channels != first.in_channels || noise.shape().length != 1)
    throw Error(ErrorKind::shape, "noise batch " + noise.shape().str() + " must be (batch, " +
                                      std::to_string(first.in_channels) + ", 1)");
  const Tensor fake = generator.forward(noise, mode, derive_seed(seed, "generator"));
  return nn::neg(nn::mean(critic.forward(fake, mode, derive_seed(seed, "critic"))));
}

double instance_noise_std(const GanConfig& cfg, std::size_t epoch) {
  const double frac = static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
  return cfg.noise_sigma0 * std::max(0.0, 1.0 - frac);
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "epoch,critic_loss,generator_loss,fid,seconds\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << detail::format_double(e.critic_loss) << ',' << detail::format_double(e.generator_loss)
        << ',' << detail::format_double(e.fid) << ',' << detail::format_double(e.seconds, 6) << '\n';
  }
}

Tensor windows_to_tensor(std::span<const signal::Window> windows) {
  std::vector<std::size_t> all(windows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return windows_to_tensor(windows, all);
}

Tensor windows_to_tensor(std::span<const signal::Window> windows, std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error(ErrorKind::invalid_argument, "empty window batch");
  const std::size_t len = windows[indices.front()].size();
  std::vector<double> values;
  values.reserve(indices.size() * len);
  for (std::size_t i : indices) {
    if (windows[i].size() != len) throw Error(ErrorKind::shape, "windows in a batch must have equal length");
    values.insert(values.end(), windows[i].samples.begin(), windows[i].samples.end());
  }
  return Tensor::from_values({indices.size(), 1, len}, std::move(values));
}

namespace {

Tensor normal_tensor(Shape shape, Rng& rng, double std = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(shape.numel());
  for (double& x : v) x = std * normal(rng);
  return Tensor::from_values(shape, std::move(v));
}

Tensor add_noise(const Tensor& x, double std, Rng& rng) {
  if (std == 0.0) return x;
  return nn::add(x, normal_tensor(x.shape(), rng, std));
}

void check_finite(double v, std::size_t epoch, const char* what) {
  if (!std::isfinite(v))
    throw Error(ErrorKind::diverged, std::string(what) + " became non-finite in epoch " + std::to_string(epoch));
}

double monitor_fid(nn::Network& generator, const Tensor& z, const eval::GaussianSummary& real) {
  nn::NoGradGuard no_grad;
  const Tensor fake = generator.forward(z, Mode::eval);
  return eval::fid(eval::gaussian_summary(fake.values()), real);
}

}  // namespace

GanResult train_gan(const GanConfig& cfg, std::span<const signal::Window> damaged_windows,
                    std::span<const signal::Window> real_eval_batch, const EpochCallback& on_epoch) {
  cfg.validate();
  if (damaged_windows.empty()) throw Error(ErrorKind::insufficient_data, "GAN training set is empty");
  const std::size_t window_len = damaged_windows.front().size();
  for (const auto& w : damaged_windows) {
    if (w.size() != window_len) throw Error(ErrorKind::shape, "GAN training windows must have equal length");
    if (!w.normalized) throw Error(ErrorKind::invalid_argument, "GAN training windows must be normalized");
  }

  const GanModels models = build_gan_models(window_len, cfg);
  GanResult result{nn::Network(models.generator, derive_seed(cfg.seed, "init-generator"), cfg.init_std),
                   nn::Network(models.critic, derive_seed(cfg.seed, "init-critic"), cfg.init_std),
                   {},
                   {}};
  auto& generator = result.generator;
  auto& critic = result.critic;
  const auto gen_params = generator.params().trainable();
  const auto critic_params = critic.params().trainable();
  nn::AdamW opt_g(gen_params, {cfg.lr_generator, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay});
  nn::AdamW opt_c(critic_params, {cfg.lr_critic, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay});

  const auto eval_windows = real_eval_batch.empty() ? damaged_windows : real_eval_batch;
  const eval::GaussianSummary real_summary = eval::gaussian_summary(eval::pool_samples(eval_windows));
  Rng monitor_rng(derive_seed(cfg.seed, "monitor"));
  const Tensor monitor_z = normal_tensor({eval_windows.size(), cfg.latent_channels, 1}, monitor_rng);

  const std::size_t n = damaged_windows.size();
  const std::size_t batch = std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng noise_rng(derive_seed(cfg.seed, "noise"));
  std::uint64_t step_id = 0;
  const std::uint64_t step_seed = derive_seed(cfg.seed, "steps");

  if (cfg.checkpoint_interval > 0 && !cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double sigma = instance_noise_std(cfg, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double critic_sum = 0.0, gen_sum = 0.0;
    std::size_t critic_count = 0, gen_count = 0;

    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Tensor real = windows_to_tensor(damaged_windows, idx);
      const Shape z_shape{idx.size(), cfg.latent_channels, 1};

      for (std::size_t it = 0; it < cfg.critic_iterations; ++it) {
        const std::uint64_t seed = derive_seed(step_seed, step_id++);
        Tensor fake;
        {
          nn::NoGradGuard no_grad;
          fake = generator.forward(normal_tensor(z_shape, noise_rng), Mode::train, derive_seed(seed, "g"));
        }
        const Tensor real_n = add_noise(real, sigma, noise_rng);
        const Tensor fake_n = add_noise(fake, sigma, noise_rng);
        const Tensor loss = critic_loss(critic, real_n, fake_n, cfg.lambda_gp, cfg.gp_mode, seed, Mode::train);
        check_finite(loss.item(), epoch + 1, "critic loss");
        opt_c.step(nn::grad(loss, critic_params));
        critic_sum += loss.item();
        ++critic_count;
        ++result.log.critic_steps;
      }

      const std::uint64_t seed = derive_seed(step_seed, step_id++);
      const Tensor fake = generator.forward(normal_tensor(z_shape, noise_rng), Mode::train, derive_seed(seed, "g"));
      const Tensor fake_n = add_noise(fake, sigma, noise_rng);
      const Tensor loss = nn::neg(nn::mean(critic.forward(fake_n, Mode::train, derive_seed(seed, "c"))));
      check_finite(loss.item(), epoch + 1, "generator loss");
      opt_g.step(nn::grad(loss, gen_params));
      gen_sum += loss.item();
      ++gen_count;
      ++result.log.generator_steps;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.critic_loss = critic_sum / static_cast<double>(critic_count);
    rec.generator_loss = gen_sum / static_cast<double>(gen_count);
    rec.fid = monitor_fid(generator, monitor_z, real_summary);
    check_finite(rec.fid, rec.epoch, "monitor FID");
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (cfg.checkpoint_interval > 0 && !cfg.checkpoint_dir.empty() && rec.epoch % cfg.checkpoint_interval == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "generator_epoch_%04zu.ckpt", rec.epoch);
      const auto path = cfg.checkpoint_dir / name;
      nn::save_checkpoint(path, generator, "generator");
      std::ofstream meta(std::filesystem::path(path).replace_extension(".json"));
      if (!meta) throw Error(ErrorKind::io, "cannot write checkpoint metadata next to " + path.string());
      meta << "{\"epoch\": " << rec.epoch << ", \"config_hash\": \"" << std::hex << config_hash(cfg) << std::dec
           << "\", \"monitor_fid\": " << detail::format_double(rec.fid) << "}\n";
      result.checkpoints.push_back(path);
    }
  }
  return result;
}

std::vector<signal::Window> generate(nn::Network& generator, std::size_t n, std::uint64_t seed) {
  std::vector<signal::Window> out;
  if (n == 0) return out;
  const std::size_t latent = generator.spec().layers.front().in_channels;
  Rng rng(seed);
  const Tensor z = normal_tensor({n, latent, 1}, rng);
  constexpr std::size_t kChunk = 256;
  nn::NoGradGuard no_grad;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t m = std::min(kChunk, n - start);
    const auto zv = z.values().subspan(start * latent, m * latent);
    const Tensor zc = Tensor::from_values({m, latent, 1}, std::vector<double>(zv.begin(), zv.end()));
    const Tensor y = generator.forward(zc, Mode::eval);
    if (y.shape().channels != 1) throw Error(ErrorKind::shape, "generator must emit one channel");
    const std::size_t len = y.shape().length;
    for (std::size_t b = 0; b < m; ++b) {
      signal::Window w;
      const auto v = y.values().subspan(b * len, len);
      w.samples.assign(v.begin(), v.end());
      w.condition = signal::Condition::damaged;
      w.provenance = signal::Provenance::synthetic;
      w.source_index = -1;
      out.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace wdcgan::gan
