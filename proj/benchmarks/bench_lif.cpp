#include <benchmark/benchmark.h>

#include <vector>

#include "cognisnn/ops.hpp"
#include "cognisnn/rng.hpp"
#include "cognisnn/spiking.hpp"
#include "cognisnn/tensor.hpp"

namespace {

using namespace cognisnn;

Tensor random_current(int n, std::uint64_t seed, bool requires_grad = false) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.uniform() * 2.0 - 0.5;
  return Tensor::from({n}, std::move(v), requires_grad);
}

void BM_LifStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  LIFParams params;
  Tensor current = random_current(n, 7);
  for (auto _ : state) {
    LIFState lif;
    Tensor s = lif_step(lif, params, current);
    benchmark::DoNotOptimize(s.values().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_LifStep)->Range(1 << 10, 1 << 16);

void BM_LifSequence(benchmark::State& state) {
  const int timesteps = static_cast<int>(state.range(0));
  const int n = 1 << 12;
  LIFParams params;
  std::vector<Tensor> frames;
  for (int t = 0; t < timesteps; ++t)
    frames.push_back(random_current(n, 100 + static_cast<std::uint64_t>(t)));
  for (auto _ : state) {
    LIFState lif;
    for (Tensor& f : frames) {
      Tensor s = lif_step(lif, params, f);
      benchmark::DoNotOptimize(s.values().data());
    }
  }
  state.SetItemsProcessed(state.iterations() * n * timesteps);
}
BENCHMARK(BM_LifSequence)->Arg(2)->Arg(8)->Arg(32);

void BM_SurrogateBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SurrogateConfig surrogate;
  for (auto _ : state) {
    Tensor u = random_current(n, 13, true);
    Tape tape;
    Tape::Scope scope(tape);
    Tensor s = heaviside_surrogate(u, 1.0, surrogate);
    Tensor loss = sum(s);
    backward(loss, tape);
    benchmark::DoNotOptimize(u.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SurrogateBackward)->Range(1 << 10, 1 << 16);

}  // namespace

BENCHMARK_MAIN();
