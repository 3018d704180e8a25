#include <benchmark/benchmark.h>

#include <random>

#include "wdcgan/gan.hpp"
#include "wdcgan/gan_eval.hpp"
#include "wdcgan/ops.hpp"

using namespace wdcgan;
using nn::Tensor;

namespace {

Tensor random_tensor(nn::Shape shape, std::uint64_t seed, bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(shape.numel());
  for (double& x : v) x = d(rng);
  return Tensor::from_values(shape, std::move(v), requires_grad);
}

// Args: batch, input channels, output channels, input length. Kernel 8, stride 4, padding 2.
void conv_args(benchmark::internal::Benchmark* b) {
  b->Args({64, 1, 32, 1024})->Args({64, 32, 64, 256})->Args({64, 128, 256, 16});
}

void BM_Conv1d(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0)), c = static_cast<std::size_t>(state.range(1)),
             o = static_cast<std::size_t>(state.range(2)), len = static_cast<std::size_t>(state.range(3));
  const Tensor x = random_tensor({batch, c, len}, 1);
  const Tensor w = random_tensor({o, c, 8}, 2);
  nn::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv1d(x, w, {4, 2}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_Conv1d)->Apply(conv_args)->Unit(benchmark::kMillisecond);

void BM_Conv1dTranspose(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0)), c = static_cast<std::size_t>(state.range(1)),
             o = static_cast<std::size_t>(state.range(2)), len = static_cast<std::size_t>(state.range(3));
  const std::size_t out_len = nn::conv1d_output_length(len, 8, {4, 2});
  const Tensor g = random_tensor({batch, o, out_len}, 3);
  const Tensor w = random_tensor({o, c, 8}, 4);
  nn::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv1d_transpose(g, w, {4, 2}, len));
}
BENCHMARK(BM_Conv1dTranspose)->Apply(conv_args)->Unit(benchmark::kMillisecond);

void BM_Conv1dWeightGrad(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0)), c = static_cast<std::size_t>(state.range(1)),
             o = static_cast<std::size_t>(state.range(2)), len = static_cast<std::size_t>(state.range(3));
  const Tensor x = random_tensor({batch, c, len}, 5);
  const Tensor g = random_tensor({batch, o, nn::conv1d_output_length(len, 8, {4, 2})}, 6);
  nn::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv1d_weight_grad(x, g, 8, {4, 2}));
}
BENCHMARK(BM_Conv1dWeightGrad)->Apply(conv_args)->Unit(benchmark::kMillisecond);

gan::Architecture bench_arch(std::size_t top) {
  gan::Architecture a;
  a.top_channels = top;
  return a;
}

void BM_CriticForwardBackward(benchmark::State& state) {
  const auto top = static_cast<std::size_t>(state.range(0));
  nn::Network critic(gan::build_critic_spec(1024, bench_arch(top), true), 1);
  const Tensor x = random_tensor({64, 1, 1024}, 7);
  const auto params = critic.params().trainable();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const Tensor loss = nn::mean(critic.forward(x, nn::Mode::train, ++seed));
    benchmark::DoNotOptimize(nn::grad(loss, params));
  }
}
BENCHMARK(BM_CriticForwardBackward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_CriticStepWithPenalty(benchmark::State& state) {
  const auto top = static_cast<std::size_t>(state.range(0));
  nn::Network critic(gan::build_critic_spec(1024, bench_arch(top), true), 1);
  const Tensor real = random_tensor({64, 1, 1024}, 8);
  const Tensor fake = random_tensor({64, 1, 1024}, 9);
  const auto params = critic.params().trainable();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const Tensor loss = gan::critic_loss(critic, real, fake, 20.0, gan::GpMode::interpolated, ++seed);
    benchmark::DoNotOptimize(nn::grad(loss, params));
  }
}
BENCHMARK(BM_CriticStepWithPenalty)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  gan::GanConfig cfg;
  cfg.arch.top_channels = static_cast<std::size_t>(state.range(0));
  nn::Network gen(gan::build_gan_models(1024, cfg).generator, 1);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(gan::generate(gen, 256, ++seed));
}
BENCHMARK(BM_Generate)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_CreativityScores(benchmark::State& state) {
  std::vector<signal::Window> a(64), b(64);
  std::mt19937_64 rng(10);
  std::normal_distribution<double> d(0.0, 0.3);
  for (auto* set : {&a, &b})
    for (auto& w : *set)
      for (int i = 0; i < 1024; ++i) w.samples.push_back(d(rng));
  for (auto _ : state) benchmark::DoNotOptimize(eval::creativity_scores(a, b));
}
BENCHMARK(BM_CreativityScores)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
