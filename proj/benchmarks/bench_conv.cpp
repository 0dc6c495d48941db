#include <benchmark/benchmark.h>

#include <vector>

#include "cognisnn/ops.hpp"
#include "cognisnn/rng.hpp"
#include "cognisnn/tensor.hpp"

namespace {

using namespace cognisnn;

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed,
                     bool requires_grad = false) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform() - 0.5;
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

void BM_Conv2dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Tensor x = random_tensor({8, c, 16, 16}, 3);
  Tensor w = random_tensor({c, c, 3, 3}, 5);
  for (auto _ : state) {
    Tensor y = conv2d(x, w, Tensor(), 1, 1);
    benchmark::DoNotOptimize(y.values().data());
  }
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_Conv2dForward)->Arg(4)->Arg(8)->Arg(16);

void BM_Conv2dBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Tensor x = random_tensor({8, c, 16, 16}, 3, true);
    Tensor w = random_tensor({c, c, 3, 3}, 5, true);
    Tape tape;
    Tape::Scope scope(tape);
    Tensor loss = sum(conv2d(x, w, Tensor(), 1, 1));
    backward(loss, tape);
    benchmark::DoNotOptimize(w.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * c * 16 * 16);
}
BENCHMARK(BM_Conv2dBackward)->Arg(4)->Arg(8);

void BM_BatchNormTrain(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Tensor x = random_tensor({8, c, 16, 16}, 11);
  BatchNorm2d bn = BatchNorm2d::create(c);
  for (auto _ : state) {
    Tensor y = batchnorm2d(x, bn, true);
    benchmark::DoNotOptimize(y.values().data());
  }
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_BatchNormTrain)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
