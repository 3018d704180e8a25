// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion names
// (AC1 ... AC8) as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "wdcgan/checkpoint.hpp"
#include "wdcgan/classifier.hpp"
#include "wdcgan/error.hpp"
#include "wdcgan/experiment.hpp"
#include "wdcgan/gan.hpp"
#include "wdcgan/gan_eval.hpp"
#include "wdcgan/metrics.hpp"
#include "wdcgan/signal.hpp"

using namespace wdcgan;
namespace fs = std::filesystem;
using nn::LayerSpec;
using nn::Mode;
using nn::Network;
using nn::NetworkSpec;
using nn::Tensor;
using testutil::random_tensor;

namespace {

// Tolerances and budgets.
constexpr double kAc1BudgetS = 1.0;
constexpr double kAc2FirstOrderTol = 1e-4;
constexpr double kAc2PenaltyTol = 1e-3;
constexpr double kAc2BudgetS = 120.0;
constexpr double kAc3MetricTol = 1e-12;
constexpr double kAc3BudgetS = 60.0;
constexpr double kAc4IdentityTol = 1e-12;
constexpr double kAc4SsimSelfTol = 1e-9;
constexpr double kAc4BudgetS = 60.0;
constexpr double kAc5MinFidReduction = 10.0;
constexpr std::size_t kAc5MaxEpochs = 200;
constexpr double kAc5BudgetS = 30.0 * 60.0;
constexpr double kAc6MinCa = 0.9;
constexpr double kAc6MinAp = 0.9;
constexpr double kAc6MaxMaeRatio = 20.0;
constexpr double kAc6BudgetS = 45.0 * 60.0;
constexpr double kAc8BudgetS = 60.0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "wdcgan_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------- AC1

Outcome ac1() {
  Outcome o;
  signal::SurrogateParams p;
  p.duration_s = 256.0;
  p.seed = 1;
  const auto record = signal::generate_surrogate_record(p, signal::Condition::damaged);
  const auto windows = signal::segment_record(record, 1024);
  o.require(record.samples.size() == 262144, "record has " + std::to_string(record.samples.size()) + " samples");
  o.require(windows.size() == 256, std::to_string(windows.size()) + " windows");
  for (const auto& w : windows) {
    if (w.size() != 1024) {
      o.require(false, "window of length " + std::to_string(w.size()));
      break;
    }
  }
  if (o.pass) o.detail = "262144 samples -> 256 x 1024";
  return o;
}

// ---------------------------------------------------------------- AC2

double worst_layer_error(const LayerSpec& layer, nn::Shape in_shape, Mode mode) {
  Network net(NetworkSpec{{layer}}, 5, 0.5);
  for (auto& p : net.params().trainable()) {
    auto v = p.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.1 * static_cast<double>(i % 3);
  }
  Tensor x = random_tensor(in_shape, 17, -1, 1, true);
  auto f = [&] { return testutil::project(net.forward(x, mode, 3), 23); };
  double worst = testutil::grad_check(x, f);
  for (auto& p : net.params().trainable()) worst = std::max(worst, testutil::grad_check(p, f));
  return worst;
}

Outcome ac2() {
  Outcome o;
  double first_order = 0.0;
  const std::vector<std::pair<LayerSpec, nn::Shape>> layers = {
      {LayerSpec::conv1d(2, 3, 4, 2, 1), {2, 2, 10}}, {LayerSpec::tconv1d(3, 2, 4, 2, 1), {2, 3, 5}},
      {LayerSpec::batch_norm(3), {4, 3, 5}},          {LayerSpec::instance_norm(3), {2, 3, 6}},
      {LayerSpec::relu(), {2, 2, 5}},                 {LayerSpec::leaky_relu(0.2), {2, 2, 5}},
      {LayerSpec::tanh(), {2, 2, 5}},                 {LayerSpec::sigmoid(), {2, 2, 5}},
      {LayerSpec::dropout(0.5), {2, 2, 8}},
  };
  for (const auto& [layer, shape] : layers) {
    const double e = worst_layer_error(layer, shape, Mode::train);
    o.require(e <= kAc2FirstOrderTol, std::string(nn::to_string(layer.kind)) + " rel error " + fmt(e));
    first_order = std::max(first_order, e);
  }

  gan::GanConfig cfg;
  cfg.arch.stages = 2;
  cfg.arch.top_channels = 8;
  cfg.latent_channels = 4;
  const auto models = gan::build_gan_models(16, cfg);

  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    Network gen(models.generator, 31 + trial, 0.3);
    Network critic(models.critic, 41 + trial, 0.3);
    Tensor z = random_tensor({3, 4, 1}, 51 + trial, -1.5, 1.5);
    auto g = [&] { return gan::generator_loss(critic, gen, z, 61 + trial); };
    for (auto& p : gen.params().trainable()) {
      const double e = testutil::grad_check(p, g);
      o.require(e <= kAc2FirstOrderTol, "generator loss rel error " + fmt(e));
      first_order = std::max(first_order, e);
    }
  }

  // Critic losses reach 1e4 here, so the difference step is widened to keep
  // rounding noise in the quotient below the tolerance.
  constexpr double kPenaltyStep = 1e-4;
  double penalty = 0.0;
  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    Network critic(models.critic, 71 + trial, 0.5);
    Tensor real = random_tensor({3, 1, 16}, 81 + trial);
    Tensor fake = random_tensor({3, 1, 16}, 91 + trial);
    for (auto mode : {gan::GpMode::interpolated, gan::GpMode::at_generated}) {
      auto f = [&] { return gan::critic_loss(critic, real, fake, 20.0, mode, 101 + trial); };
      for (auto& p : critic.params().trainable()) {
        const double e = testutil::grad_check(p, f, kPenaltyStep);
        o.require(e <= kAc2PenaltyTol, "critic loss rel error " + fmt(e));
        penalty = std::max(penalty, e);
      }
    }
  }
  if (o.pass) o.detail = "max rel error first-order " + fmt(first_order, 3) + ", with penalty " + fmt(penalty, 3);
  return o;
}

// ---------------------------------------------------------------- AC3

double sweep_ap(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  std::size_t positives = 0;
  for (int l : labels) positives += l == 1;
  double ap = 0.0, previous_recall = 0.0;
  for (double t : thresholds) {
    std::size_t detected = 0, tp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= t) {
        ++detected;
        tp += labels[i] == 1;
      }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    ap += (recall - previous_recall) * (static_cast<double>(tp) / static_cast<double>(detected));
    previous_recall = recall;
  }
  return ap;
}

metrics::PredictionSet prediction_set(const std::vector<double>& s, const std::vector<int>& l) {
  metrics::PredictionSet p;
  for (std::size_t i = 0; i < s.size(); ++i) p.entries.push_back({s[i], l[i]});
  return p;
}

Outcome ac3() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t cases = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 8; ++n) {
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<double> scores;
      while (scores.size() < n) {
        const double v = u(rng);
        if (std::find(scores.begin(), scores.end(), v) == scores.end()) scores.push_back(v);
      }
      for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = (mask >> i) & 1u;
        ++cases;
        if (metrics::average_precision(prediction_set(scores, labels)) != sweep_ap(scores, labels)) ++mismatches;
      }
    }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " AP mismatches");

  double worst = 0.0;
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial) % 50;
    std::vector<double> s(n);
    std::vector<int> l(n);
    double abs_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = u(rng);
      l[i] = coin(rng);
      abs_sum += std::abs(s[i] - l[i]);
      hits += (s[i] >= 0.5 ? 1 : 0) == l[i];
    }
    const auto p = prediction_set(s, l);
    worst = std::max(worst, std::abs(metrics::mae(p) - abs_sum / static_cast<double>(n)));
    worst = std::max(worst, std::abs(metrics::classification_accuracy(p) - static_cast<double>(hits) / static_cast<double>(n)));
  }
  o.require(worst <= kAc3MetricTol, "CA/MAE deviation " + fmt(worst));

  const double example = metrics::average_precision(prediction_set({0.9, 0.8, 0.3}, {1, 0, 1}));
  o.require(std::abs(example - 5.0 / 6.0) <= 1e-15, "worked example gives " + fmt(example, 17));
  if (o.pass)
    o.detail = "AP exact on " + std::to_string(cases) + " labelings; CA/MAE dev " + fmt(worst, 2) + "; example " +
               fmt(example, 6);
  return o;
}

// ---------------------------------------------------------------- AC4

Outcome ac4() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst_identity = 0.0, worst_analytic = 0.0, worst_self_ssim = 0.0, max_abs_ssim = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const eval::GaussianSummary a{u(rng), std::abs(u(rng))}, b{u(rng), std::abs(u(rng))};
    worst_identity = std::max({worst_identity, std::abs(eval::fid(a, a)), std::abs(eval::fid(a, b) - eval::fid(b, a))});
    const double dm = a.mean - b.mean, ds = a.std - b.std;
    worst_analytic = std::max(worst_analytic, std::abs(eval::fid(a, b) - (dm * dm + ds * ds)));

    const std::size_t len = 16 + static_cast<std::size_t>(trial) % 200;
    const double scale = 0.1 + std::abs(u(rng));
    const double offset = u(rng);
    std::vector<double> x(len), g(len);
    for (std::size_t i = 0; i < len; ++i) {
      x[i] = offset + scale * nd(rng);
      g[i] = trial % 3 == 0 ? -x[i] : u(rng) * 0.5;
    }
    worst_self_ssim = std::max(worst_self_ssim, std::abs(eval::ssim(x, x) - 1.0));
    max_abs_ssim = std::max(max_abs_ssim, std::abs(eval::ssim(x, g)));
  }
  Eigen::MatrixXd obs(100, 3);
  for (Eigen::Index r = 0; r < obs.rows(); ++r)
    for (Eigen::Index c = 0; c < obs.cols(); ++c) obs(r, c) = nd(rng) * static_cast<double>(c + 1);
  const auto ms = eval::gaussian_summary(obs);
  worst_identity = std::max(worst_identity, std::abs(eval::fid(ms, ms)));

  o.require(worst_identity <= kAc4IdentityTol, "FID identity/symmetry deviation " + fmt(worst_identity));
  o.require(worst_analytic <= kAc4IdentityTol, "scalar FID deviates analytically by " + fmt(worst_analytic));
  o.require(worst_self_ssim <= kAc4SsimSelfTol, "ssim(x,x) off by " + fmt(worst_self_ssim));
  o.require(max_abs_ssim <= 1.0, "|ssim| reaches " + fmt(max_abs_ssim, 17));
  if (o.pass)
    o.detail = "fid identity dev " + fmt(worst_identity, 2) + ", ssim self dev " + fmt(worst_self_ssim, 2) +
               ", max |ssim| " + fmt(max_abs_ssim, 6);
  return o;
}

// ---------------------------------------------------------------- AC5

// Reduced model on 256 surrogate damaged windows of 64 samples.
gan::GanConfig ac5_gan_config() {
  gan::GanConfig g;
  g.arch.stages = 3;
  g.arch.top_channels = 64;
  g.epochs = 200;
  g.batch_size = 64;
  g.critic_iterations = 5;
  g.lr_generator = 1e-3;
  g.lr_critic = 1e-3;
  return g;
}

Outcome ac5() {
  Outcome o;
  experiment::RunConfig run;
  run.window_len = 64;
  run.surrogate->duration_s = 16.0;
  // 64 samples of the default 50 Hz, 2 % damped oscillator are a few cycles
  // of a near-sinusoid, and real windows already exceed SSIM 0.8 against
  // each other. A broader, faster resonance keeps real-real pairs below it.
  run.surrogate->natural_freq_hz = 200.0;
  run.surrogate->damping_ratio = 0.1;
  run.master_seed = 5;
  const auto pools = experiment::prepare_data(run);
  gan::GanConfig g = ac5_gan_config();
  g.seed = experiment::stage_seed(run, "gan");
  o.require(g.epochs <= kAc5MaxEpochs, "epoch budget above " + std::to_string(kAc5MaxEpochs));
  o.require(pools.damaged.size() == 256, "damaged pool holds " + std::to_string(pools.damaged.size()));
  {
    const std::vector<signal::Window> a(pools.damaged.begin(), pools.damaged.begin() + 128);
    const std::vector<signal::Window> b(pools.damaged.begin() + 128, pools.damaged.end());
    const auto real = eval::creativity_scores(a, b).duplicate_count;
    o.require(real == 0, std::to_string(real) + " duplicates between halves of the real pool");
  }

  auto result = gan::train_gan(g, pools.damaged, pools.damaged);
  const double first = result.log.epochs.front().fid;
  const double last = result.log.epochs.back().fid;
  const double reduction = first / last;
  o.require(reduction >= kAc5MinFidReduction, "FID " + fmt(first) + " -> " + fmt(last) + " (x" + fmt(reduction, 3) + ")");

  const auto generated = gan::generate(result.generator, pools.damaged.size(), experiment::stage_seed(run, "generate"));
  const auto creativity = eval::creativity_scores(generated, pools.damaged);
  o.require(creativity.duplicate_count == 0, std::to_string(creativity.duplicate_count) + " creativity duplicates");
  if (o.pass)
    o.detail = "monitor FID " + fmt(first) + " -> " + fmt(last) + " (x" + fmt(reduction, 3) + ") in " +
               std::to_string(g.epochs) + " epochs, 0 duplicates of " + std::to_string(creativity.scores.size());
  return o;
}

// ---------------------------------------------------------------- AC6

// Desk-scale GAN next to the default classifier and scenario settings.
experiment::RunConfig ac6_config(const fs::path& run_dir) {
  experiment::RunConfig cfg;
  cfg.run_dir = run_dir;
  cfg.master_seed = 0;
  cfg.gan.epochs = 150;
  cfg.gan.batch_size = 64;
  cfg.gan.critic_iterations = 5;
  cfg.gan.lr_generator = 5e-4;
  cfg.gan.lr_critic = 5e-4;
  cfg.gan.arch.top_channels = 64;
  cfg.emit_plots = false;
  return cfg;
}

Outcome ac6() {
  Outcome o;
  const auto reports = experiment::run_scenarios(ac6_config(scratch("ac6")));
  o.require(reports.size() == 6, std::to_string(reports.size()) + " reports");
  if (reports.size() != 6) return o;
  const auto& s0 = reports[0];
  o.require(s0.classification_accuracy == 1.0, "S0 CA " + fmt(s0.classification_accuracy));
  o.require(s0.average_precision == 1.0, "S0 AP " + fmt(s0.average_precision));
  std::string summary = "S0 CA " + fmt(s0.classification_accuracy) + " AP " + fmt(s0.average_precision) + " MAE " +
                        fmt(s0.mae, 3);
  for (std::size_t k = 1; k < 6; ++k) {
    const auto& r = reports[k];
    const std::string tag = "S" + std::to_string(k);
    o.require(r.classification_accuracy >= kAc6MinCa, tag + " CA " + fmt(r.classification_accuracy));
    o.require(r.average_precision >= kAc6MinAp, tag + " AP " + fmt(r.average_precision));
    o.require(r.mae <= kAc6MaxMaeRatio * s0.mae, tag + " MAE " + fmt(r.mae, 3) + " vs S0 " + fmt(s0.mae, 3));
    summary += "; " + tag + " CA " + fmt(r.classification_accuracy) + " AP " + fmt(r.average_precision) + " MAE " +
               fmt(r.mae, 3);
  }
  if (o.pass) o.detail = summary;
  return o;
}

// ---------------------------------------------------------------- AC7

Outcome ac7() {
  Outcome o;
  const fs::path base = scratch("ac7");
  fs::create_directories(base);
  const fs::path config = base / "config.json";
  std::ofstream(config) << R"({"window_len": 64, "master_seed": 7, "surrogate": {"duration_s": 16},
 "gan": {"epochs": 3, "batch_size": 64, "critic_iterations": 2, "latent_channels": 16,
         "lr_generator": 1e-3, "lr_critic": 1e-3, "arch": {"stages": 3, "top_channels": 16}},
 "classifier": {"epochs": 5, "arch": {"stages": 3, "top_channels": 16}}})";
  std::vector<fs::path> dirs = {base / "run1", base / "run2"};
  for (const auto& dir : dirs) {
    const std::string cmd = std::string("\"") + WDCGAN_CLI_PATH + "\" run-scenarios --config \"" + config.string() +
                            "\" --out \"" + dir.string() + "\" > \"" + (base / (dir.filename().string() + ".log")).string() +
                            "\" 2>&1";
    const int status = std::system(cmd.c_str());
    o.require(status == 0, "run-scenarios exited with status " + std::to_string(status));
  }
  if (!o.pass) return o;

  std::set<std::string> names;
  for (const auto& dir : dirs)
    for (const auto& e : fs::directory_iterator(dir / "reports")) names.insert(e.path().filename().string());
  std::size_t compared = 0;
  for (const auto& name : names) {
    const fs::path a = dirs[0] / "reports" / name, b = dirs[1] / "reports" / name;
    o.require(fs::exists(a) && fs::exists(b), name + " missing from one run");
    if (fs::exists(a) && fs::exists(b)) {
      o.require(slurp(a) == slurp(b), name + " differs");
      ++compared;
    }
  }
  o.require(compared == 7, std::to_string(compared) + " report files");
  if (o.pass) o.detail = std::to_string(compared) + " report files byte-identical across two CLI runs";
  return o;
}

// ---------------------------------------------------------------- AC8

Outcome ac8() {
  Outcome o;
  gan::GanConfig cfg;
  cfg.arch.stages = 3;
  cfg.arch.top_channels = 16;
  cfg.latent_channels = 8;
  cfg.epochs = 3;
  cfg.batch_size = 32;
  cfg.critic_iterations = 2;
  cfg.lr_generator = cfg.lr_critic = 1e-3;
  cfg.seed = 8;
  experiment::RunConfig run;
  run.window_len = 64;
  run.surrogate->duration_s = 8.0;
  const auto pools = experiment::prepare_data(run);
  auto result = gan::train_gan(cfg, pools.gan_pool, pools.gan_pool);

  const fs::path path = scratch("ac8") / "generator.ckpt";
  fs::create_directories(path.parent_path());
  nn::save_checkpoint(path, result.generator, "generator");
  auto loaded = nn::load_checkpoint(path);
  std::size_t compared = 0;
  for (std::uint64_t seed : {1ULL, 2ULL, 0xfeedULL}) {
    const auto a = gan::generate(result.generator, 64, seed);
    const auto b = gan::generate(loaded.network, 64, seed);
    for (std::size_t i = 0; i < a.size(); ++i) {
      o.require(a[i].samples == b[i].samples, "window " + std::to_string(i) + " differs for seed " + std::to_string(seed));
      ++compared;
    }
  }
  o.require(loaded.network.params().flatten() == result.generator.params().flatten(), "parameters differ after reload");
  if (o.pass) o.detail = std::to_string(compared) + " windows bitwise equal after reload";
  return o;
}

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
  double budget_s;  // 0 means no time bound
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"AC1", ac1, kAc1BudgetS},  {"AC2", ac2, kAc2BudgetS}, {"AC3", ac3, kAc3BudgetS}, {"AC4", ac4, kAc4BudgetS},
      {"AC5", ac5, kAc5BudgetS},  {"AC6", ac6, kAc6BudgetS}, {"AC7", ac7, 0.0},         {"AC8", ac8, kAc8BudgetS},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);

  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.name)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && seconds > c.budget_s) o.require(false, "took " + fmt(seconds, 3) + " s");
    std::cout << c.name << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << " [" << fmt(seconds, 3) << " s]"
              << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
