#include <benchmark/benchmark.h>

#include "cognisnn/errors.hpp"
#include "cognisnn/graph.hpp"
#include "cognisnn/pathway.hpp"

namespace {

using namespace cognisnn;

DirectedAcyclicGraph er_graph(int nodes, std::uint64_t seed) {
  RandomGraphSpec spec;
  spec.generator = GraphGenerator::ER;
  spec.node_count = nodes;
  spec.er_edge_prob = 0.5;
  spec.seed = seed;
  return generate_graph(spec);
}

void BM_GenerateGraph(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    // unlucky seeds produce edgeless graphs; skip them, they are not the cost
    for (;;) {
      try {
        DirectedAcyclicGraph dag = er_graph(n, seed++);
        benchmark::DoNotOptimize(dag.edges.data());
        break;
      } catch (const DegenerateGraphError&) {
      }
    }
  }
}
BENCHMARK(BM_GenerateGraph)->Arg(8)->Arg(16)->Arg(32);

void BM_NodeBetweenness(benchmark::State& state) {
  DirectedAcyclicGraph dag = er_graph(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    std::vector<double> bc = node_betweenness(dag);
    benchmark::DoNotOptimize(bc.data());
  }
}
BENCHMARK(BM_NodeBetweenness)->Arg(8)->Arg(16)->Arg(32);

void BM_RankPathways(benchmark::State& state) {
  DirectedAcyclicGraph dag = er_graph(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    PathwayRanking ranking = rank_pathways(dag);
    benchmark::DoNotOptimize(ranking.pathways.data());
  }
}
BENCHMARK(BM_RankPathways)->Arg(8)->Arg(12)->Arg(16);

void BM_GrowthSchedule(benchmark::State& state) {
  DirectedAcyclicGraph dag = er_graph(static_cast<int>(state.range(0)), 1);
  PathwayRanking ranking = rank_pathways(dag);
  for (auto _ : state) {
    GrowthSchedule schedule = build_growth_schedule(dag, ranking, 8);
    benchmark::DoNotOptimize(schedule.counts.data());
  }
}
BENCHMARK(BM_GrowthSchedule)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
