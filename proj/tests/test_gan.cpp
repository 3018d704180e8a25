#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "test_util.hpp"
#include "wdcgan/checkpoint.hpp"
#include "wdcgan/error.hpp"
#include "wdcgan/gan.hpp"
#include "wdcgan/ops.hpp"
#include "wdcgan/optim.hpp"

using namespace wdcgan;
using namespace wdcgan::gan;
using nn::LayerKind;
using nn::LayerSpec;
using nn::Mode;
using nn::Network;
using nn::NetworkSpec;
using nn::Tensor;
using testutil::random_tensor;

namespace fs = std::filesystem;

namespace {

// Critic C(x) = w.x + b as a single full-length convolution.
Network linear_critic(std::size_t len, std::vector<double> w, double b = 0.0) {
  Network net(NetworkSpec{{LayerSpec::conv1d(1, 1, len)}});
  auto p = net.params().layer_params(0);
  std::copy(w.begin(), w.end(), p[0].mutable_values().begin());
  p[1].mutable_values()[0] = b;
  return net;
}

std::vector<double> unit_vector(std::size_t len, std::uint64_t seed) {
  auto t = random_tensor({1, 1, len}, seed);
  std::vector<double> v(t.values().begin(), t.values().end());
  const double n = testutil::norm(v);
  for (double& x : v) x /= n;
  return v;
}

std::vector<signal::Window> toy_damaged(std::size_t n, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  std::vector<signal::Window> out;
  for (std::size_t i = 0; i < n; ++i) {
    signal::Window w;
    const double ph = phase(rng);
    for (std::size_t t = 0; t < len; ++t) w.samples.push_back(0.8 * std::sin(0.9 * static_cast<double>(t) + ph));
    w.condition = signal::Condition::damaged;
    w.normalized = true;
    w.source_index = static_cast<std::int64_t>(i);
    out.push_back(std::move(w));
  }
  return out;
}

GanConfig tiny_config() {
  GanConfig cfg;
  cfg.arch.stages = 2;
  cfg.arch.top_channels = 8;
  cfg.latent_channels = 4;
  cfg.batch_size = 8;
  cfg.critic_iterations = 3;
  cfg.epochs = 3;
  cfg.lr_critic = 1e-3;
  cfg.lr_generator = 1e-3;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("default architecture shapes and widths") {
  const GanConfig cfg;
  CHECK(cfg.lr_generator == 5e-6);
  CHECK(cfg.lr_critic == 2e-5);
  CHECK(cfg.critic_iterations == 12);
  CHECK(cfg.lambda_gp == 20.0);
  CHECK(cfg.batch_size == 1024);
  CHECK(cfg.epochs == 600);

  const auto models = build_gan_models(1024, cfg);
  std::vector<std::size_t> gen_widths{100};
  for (const auto& l : models.generator.layers)
    if (l.kind == LayerKind::tconv1d) {
      CHECK(l.kernel == 8);
      CHECK(l.stride == 4);
      CHECK(l.padding == 2);
      gen_widths.push_back(l.out_channels);
    }
  CHECK(gen_widths == std::vector<std::size_t>{100, 256, 128, 64, 32, 1});
  CHECK(models.generator.layers.back().kind == LayerKind::tanh);

  std::vector<std::size_t> critic_widths{1};
  std::size_t convs_before_dropout = 0, dropouts = 0;
  for (const auto& l : models.critic.layers) {
    if (l.kind == LayerKind::conv1d) {
      critic_widths.push_back(l.out_channels);
      if (dropouts == 0) ++convs_before_dropout;
    }
    if (l.kind == LayerKind::dropout) {
      ++dropouts;
      CHECK(l.p == 0.7);
    }
    CHECK(l.kind != LayerKind::sigmoid);
  }
  CHECK(critic_widths == std::vector<std::size_t>{1, 32, 64, 128, 256, 1});
  CHECK(dropouts == 1);
  CHECK(convs_before_dropout == 3);
  CHECK(models.critic.layers.back().kind == LayerKind::conv1d);
}

TEST_CASE("generator and critic evaluate to the documented shapes") {
  const auto models = build_gan_models(1024, GanConfig{});
  Network gen(models.generator, 1), critic(models.critic, 2);
  Tensor z = random_tensor({2, 100, 1}, 3, -2, 2);
  Tensor x = gen.forward(z, Mode::train);
  REQUIRE(x.shape() == nn::Shape{2, 1, 1024});
  for (double v : x.values()) CHECK((v > -1.0 && v < 1.0));
  Tensor s = critic.forward(x.detach(), Mode::eval);
  CHECK(s.shape() == nn::Shape{2, 1, 1});
  Tensor s2 = critic.forward(x.detach(), Mode::eval);
  CHECK(std::equal(s.values().begin(), s.values().end(), s2.values().begin()));
}

TEST_CASE("window lengths that the stages cannot express are shape errors") {
  for (std::size_t len : {1000u, 512u, 4096u}) {
    try {
      build_gan_models(len, GanConfig{});
      FAIL("expected a shape error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::shape);
    }
  }
  GanConfig three;
  three.arch.stages = 3;
  CHECK_NOTHROW(build_gan_models(64, three));
}

TEST_CASE("gradient penalty analytic cases") {
  const std::size_t len = 16;
  Tensor real = random_tensor({4, 1, len}, 1);
  Tensor fake = random_tensor({4, 1, len}, 2);

  SUBCASE("unit-norm linear critic has zero penalty") {
    Network critic = linear_critic(len, unit_vector(len, 3), 0.4);
    for (auto mode : {GpMode::interpolated, GpMode::at_generated}) {
      const double gp = gradient_penalty(critic, real, fake, 20.0, mode, 5).item();
      CHECK(std::abs(gp) < 1e-24);
    }
  }
  SUBCASE("constant critic has penalty lambda") {
    Network critic = linear_critic(len, std::vector<double>(len, 0.0), 1.5);
    CHECK(gradient_penalty(critic, real, fake, 20.0, GpMode::interpolated, 5).item() == 20.0);
  }
  SUBCASE("epsilon one puts the penalty point on the real sample") {
    const std::vector<double> ones(4, 1.0);
    Tensor p = interpolate(real, fake, ones);
    CHECK(std::equal(p.values().begin(), p.values().end(), real.values().begin()));
  }
  SUBCASE("empty and mismatched batches") {
    Network critic = linear_critic(len, unit_vector(len, 3));
    CHECK_THROWS_AS(gradient_penalty(critic, Tensor::zeros({0, 1, len}), Tensor::zeros({0, 1, len}), 20.0,
                                     GpMode::interpolated, 1),
                    Error);
    CHECK_THROWS_AS(gradient_penalty(critic, real, random_tensor({3, 1, len}, 9), 20.0, GpMode::interpolated, 1),
                    Error);
  }
}

TEST_CASE("critic loss analytic cases") {
  const std::size_t len = 16;
  Tensor real = random_tensor({4, 1, len}, 1);
  Tensor fake = random_tensor({4, 1, len}, 2);

  Network zero = linear_critic(len, std::vector<double>(len, 0.0));
  CHECK(critic_loss(zero, real, fake, 20.0, GpMode::interpolated, 3).item() == 20.0);

  Network linear = linear_critic(len, unit_vector(len, 4), 0.2);
  const double same = critic_loss(linear, real, real, 20.0, GpMode::interpolated, 3).item();
  const double gp = gradient_penalty(linear, real, real, 20.0, GpMode::interpolated, 3).item();
  CHECK(same == doctest::Approx(gp).epsilon(1e-12));

  const double w_estimate = critic_loss(linear, real, fake, 0.0, GpMode::interpolated, 3).item();
  const double direct = nn::mean(linear.forward(fake, Mode::train)).item() - nn::mean(linear.forward(real, Mode::train)).item();
  CHECK(w_estimate == direct);
}

TEST_CASE("critic loss parameter gradients, penalty included, match finite differences") {
  NetworkSpec spec{{LayerSpec::conv1d(1, 3, 4, 2, 1), LayerSpec::instance_norm(3), LayerSpec::leaky_relu(0.2),
                    LayerSpec::dropout(0.3), LayerSpec::conv1d(3, 1, 8, 1, 0)}};
  Network critic(spec, 21, 0.5);
  Tensor real = random_tensor({3, 1, 16}, 22);
  Tensor fake = random_tensor({3, 1, 16}, 23);
  auto f = [&] { return critic_loss(critic, real, fake, 20.0, GpMode::interpolated, 24); };
  for (auto& p : critic.params().trainable()) CHECK(testutil::grad_check(p, f) < 1e-3);
  auto g = [&] { return gradient_penalty(critic, real, fake, 20.0, GpMode::at_generated, 25); };
  for (auto& p : critic.params().trainable()) CHECK(testutil::grad_check(p, g) < 1e-3);
}

TEST_CASE("generator loss cases and gradients") {
  GanConfig cfg = tiny_config();
  const auto models = build_gan_models(16, cfg);
  Network gen(models.generator, 31, 0.3);
  Tensor z = random_tensor({3, 4, 1}, 32, -1.5, 1.5);

  Network zero = linear_critic(16, std::vector<double>(16, 0.0));
  CHECK(generator_loss(zero, gen, z, 1).item() == 0.0);
  Network constant = linear_critic(16, std::vector<double>(16, 0.0), 0.75);
  CHECK(generator_loss(constant, gen, z, 1).item() == -0.75);

  Network critic(models.critic, 33, 0.3);
  auto f = [&] { return generator_loss(critic, gen, z, 34); };
  for (auto& p : gen.params().trainable()) CHECK(testutil::grad_check(p, f) < 1e-4);

  CHECK_THROWS_AS(generator_loss(critic, gen, random_tensor({3, 5, 1}, 1), 1), Error);
}

TEST_CASE("instance noise decays linearly to zero") {
  GanConfig cfg;
  cfg.epochs = 10;
  CHECK(instance_noise_std(cfg, 0) == 0.1);
  CHECK(instance_noise_std(cfg, 5) == doctest::Approx(0.05));
  CHECK(instance_noise_std(cfg, 10) == 0.0);
  CHECK(instance_noise_std(cfg, 12) == 0.0);
}

TEST_CASE("a critic update leaves the generator untouched and vice versa") {
  GanConfig cfg = tiny_config();
  const auto models = build_gan_models(16, cfg);
  Network gen(models.generator, 1), critic(models.critic, 2);
  const auto gen_params = gen.params().trainable();
  const auto critic_params = critic.params().trainable();
  nn::AdamW opt_c(critic_params, {1e-2}), opt_g(gen_params, {1e-2});
  Tensor real = random_tensor({4, 1, 16}, 3);
  Tensor z = random_tensor({4, 4, 1}, 4);

  const auto g0 = gen.params().flatten();
  const auto c0 = critic.params().flatten();
  Tensor fake = gen.forward(z, Mode::train);
  opt_c.step(nn::grad(critic_loss(critic, real, fake, 20.0, GpMode::interpolated, 5), critic_params));
  CHECK(gen.params().flatten() == g0);
  CHECK(critic.params().flatten() != c0);

  const auto c1 = critic.params().flatten();
  opt_g.step(nn::grad(generator_loss(critic, gen, z, 6), gen_params));
  CHECK(critic.params().flatten() == c1);
  CHECK(gen.params().flatten() != g0);
}

TEST_CASE("training schedule, determinism, logging, and checkpoints") {
  GanConfig cfg = tiny_config();
  cfg.checkpoint_interval = 2;
  cfg.checkpoint_dir = fs::temp_directory_path() / "wdcgan_test_gan_ckpt";
  fs::remove_all(cfg.checkpoint_dir);
  const auto data = toy_damaged(20, 16, 1);

  const auto a = train_gan(cfg, data, data);
  // 20 windows in batches of 8 -> 3 minibatches per epoch.
  CHECK(a.log.generator_steps == 9);
  CHECK(a.log.critic_steps == 3 * a.log.generator_steps);
  REQUIRE(a.log.epochs.size() == 3);
  for (const auto& e : a.log.epochs) {
    CHECK(std::isfinite(e.critic_loss));
    CHECK(std::isfinite(e.generator_loss));
    CHECK(std::isfinite(e.fid));
    CHECK(e.fid >= 0.0);
  }
  REQUIRE(a.checkpoints.size() == 1);
  CHECK(fs::exists(a.checkpoints[0]));
  CHECK(fs::exists(fs::path(a.checkpoints[0]).replace_extension(".json")));

  const auto b = train_gan(cfg, data, data);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.log.epochs[i].epoch == b.log.epochs[i].epoch);
    CHECK(a.log.epochs[i].critic_loss == b.log.epochs[i].critic_loss);
    CHECK(a.log.epochs[i].generator_loss == b.log.epochs[i].generator_loss);
    CHECK(a.log.epochs[i].fid == b.log.epochs[i].fid);
  }
  CHECK(a.generator.params().flatten() == b.generator.params().flatten());

  const auto csv = fs::temp_directory_path() / "wdcgan_test_gan_log.csv";
  a.log.write_csv(csv);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,critic_loss,generator_loss,fid,seconds");
}

TEST_CASE("critic_iterations 12 gives twelve critic steps per generator step") {
  GanConfig cfg = tiny_config();
  cfg.critic_iterations = 12;
  cfg.epochs = 1;
  cfg.batch_size = 1024;
  const auto data = toy_damaged(10, 16, 2);
  const auto r = train_gan(cfg, data, data);
  CHECK(r.log.generator_steps == 1);
  CHECK(r.log.critic_steps == 12);
}

TEST_CASE("training errors") {
  GanConfig cfg = tiny_config();
  try {
    train_gan(cfg, {}, {});
    FAIL("expected insufficient-data");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::insufficient_data);
  }
  auto data = toy_damaged(4, 16, 3);
  data[2].samples[5] = std::numeric_limits<double>::quiet_NaN();
  try {
    train_gan(cfg, data, data);
    FAIL("expected diverged");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::diverged);
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("generation contract") {
  const auto models = build_gan_models(1024, GanConfig{});
  Network gen(models.generator, 5);
  CHECK(generate(gen, 0, 1).empty());
  const auto a = generate(gen, 256, 9);
  REQUIRE(a.size() == 256);
  for (const auto& w : a) {
    CHECK(w.size() == 1024);
    CHECK(w.condition == signal::Condition::damaged);
    CHECK(w.provenance == signal::Provenance::synthetic);
    CHECK(std::all_of(w.samples.begin(), w.samples.end(), [](double v) { return v > -1.0 && v < 1.0; }));
  }
  const auto b = generate(gen, 256, 9);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].samples == b[i].samples);
}

TEST_CASE("checkpoint save, load, generate reproduces windows bitwise") {
  GanConfig cfg = tiny_config();
  const auto data = toy_damaged(12, 16, 4);
  auto trained = train_gan(cfg, data, data);
  const auto path = fs::temp_directory_path() / "wdcgan_test_generator.ckpt";
  nn::save_checkpoint(path, trained.generator, "generator");
  auto loaded = nn::load_checkpoint(path);
  const auto a = generate(trained.generator, 32, 77);
  const auto b = generate(loaded.network, 32, 77);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].samples == b[i].samples);
}

TEST_CASE("config hash ignores the checkpoint directory only") {
  GanConfig a, b;
  b.checkpoint_dir = "/somewhere/else";
  CHECK(config_hash(a) == config_hash(b));
  b.lambda_gp = 10.0;
  CHECK(config_hash(a) != config_hash(b));
}
