#include <benchmark/benchmark.h>

#include <vector>

#include "cognisnn/graph.hpp"
#include "cognisnn/model.hpp"
#include "cognisnn/pathway.hpp"
#include "cognisnn/rng.hpp"
#include "cognisnn/tensor.hpp"
#include "cognisnn/train.hpp"

namespace {

using namespace cognisnn;

DirectedAcyclicGraph bench_dag() {
  RandomGraphSpec spec;
  spec.generator = GraphGenerator::ER;
  spec.node_count = 7;
  spec.er_edge_prob = 0.6;
  spec.seed = 0;
  return generate_graph(spec);
}

ModelConfig bench_config() {
  ModelConfig cfg;
  cfg.in_channels = 2;
  cfg.channels = 8;
  cfg.class_count = 4;
  cfg.height = 16;
  cfg.width = 16;
  cfg.stem_pool = 1;
  return cfg;
}

Tensor binary_frame(int batch, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(batch) * 2 * 16 * 16);
  for (double& x : v) x = rng.uniform() < 0.2 ? 1.0 : 0.0;
  return Tensor::from({batch, 2, 16, 16}, std::move(v));
}

void BM_ForwardTimestep(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  DirectedAcyclicGraph dag = bench_dag();
  CogniSNNModel model = build_model(dag, bench_config());
  Tensor frame = binary_frame(batch, 3);
  for (auto _ : state) {
    model.reset_state();
    Tensor logits = forward_timestep(model, frame);
    benchmark::DoNotOptimize(logits.values().data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardTimestep)->Arg(1)->Arg(8)->Arg(32);

void BM_ForwardSequence(benchmark::State& state) {
  const int timesteps = static_cast<int>(state.range(0));
  DirectedAcyclicGraph dag = bench_dag();
  CogniSNNModel model = build_model(dag, bench_config());
  std::vector<Tensor> frames;
  for (int t = 0; t < timesteps; ++t)
    frames.push_back(binary_frame(8, 10 + static_cast<std::uint64_t>(t)));
  for (auto _ : state) {
    Tensor logits = forward_sequence(model, frames);
    benchmark::DoNotOptimize(logits.values().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * timesteps);
}
BENCHMARK(BM_ForwardSequence)->Arg(2)->Arg(8);

void BM_ForwardSequenceStaged(benchmark::State& state) {
  const int timesteps = static_cast<int>(state.range(0));
  DirectedAcyclicGraph dag = bench_dag();
  CogniSNNModel model = build_model(dag, bench_config());
  PathwayRanking ranking = rank_pathways(dag);
  std::vector<NodeActivityMask> masks =
      schedule_masks(build_growth_schedule(dag, ranking, timesteps));
  std::vector<Tensor> frames;
  for (int t = 0; t < timesteps; ++t)
    frames.push_back(binary_frame(8, 10 + static_cast<std::uint64_t>(t)));
  ForwardOptions options;
  options.schedule = &masks;
  for (auto _ : state) {
    Tensor logits = forward_sequence(model, frames, options);
    benchmark::DoNotOptimize(logits.values().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * timesteps);
}
BENCHMARK(BM_ForwardSequenceStaged)->Arg(2)->Arg(8);

void BM_TrainStep(benchmark::State& state) {
  DirectedAcyclicGraph dag = bench_dag();
  CogniSNNModel model = build_model(dag, bench_config());
  std::vector<Tensor> frames;
  for (int t = 0; t < 4; ++t)
    frames.push_back(binary_frame(8, 20 + static_cast<std::uint64_t>(t)));
  std::vector<int> labels = {0, 1, 2, 3, 0, 1, 2, 3};
  SgdState sgd;
  for (auto _ : state) {
    Tape tape;
    Tape::Scope scope(tape);
    ForwardOptions options;
    options.bn_train = true;
    Tensor logits = forward_sequence(model, frames, options);
    Tensor loss = softmax_cross_entropy(logits, labels);
    backward(loss, tape);
    sgd_momentum_step(model.parameters(), sgd, 0.01, 0.9, 0.0);
    benchmark::DoNotOptimize(loss.values().data());
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
