#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cognisnn/graph.hpp"

namespace cognisnn {

/// Simple input->output path: nodes v1..v(l+1) joined by the l graph edges.
struct Pathway {
  std::vector<int> nodes;
  std::vector<std::pair<int, int>> edges;

  int length() const { return static_cast<int>(edges.size()); }
};

constexpr long long kDefaultPathwayCap = 1'000'000;

/// All simple input->output paths in deterministic lexicographic order.
/// Throws PathwayExplosionError when more than `cap` paths exist.
std::vector<Pathway> enumerate_pathways(const DirectedAcyclicGraph& dag,
                                        long long cap = kDefaultPathwayCap);

/// Betweenness centrality over ordered reachable (s, t) pairs on the directed
/// graph, raw sums without normalization. Node BC excludes endpoints
/// (s != v != t); edge BC counts every pair s != t whose shortest paths
/// traverse the edge. Results indexed by node id / edge index.
std::vector<double> node_betweenness(const DirectedAcyclicGraph& dag);
std::vector<double> edge_betweenness(const DirectedAcyclicGraph& dag);

/// Cumulative BC of a pathway: sum of its node BCs plus its edge BCs.
/// Throws MismatchedGraphError when the pathway references nodes or edges
/// absent from the graph the BC maps were computed on.
double pathway_betweenness(const DirectedAcyclicGraph& dag, const Pathway& p,
                           const std::vector<double>& node_bc,
                           const std::vector<double>& edge_bc);

struct RankedPathway {
  Pathway pathway;
  double bc = 0.0;
};

/// Pathways sorted by BC descending, ties broken by lexicographic node
/// sequence.
struct PathwayRanking {
  std::vector<RankedPathway> pathways;

  int total() const { return static_cast<int>(pathways.size()); }
};

PathwayRanking rank_pathways(const DirectedAcyclicGraph& dag,
                             long long cap = kDefaultPathwayCap);

enum class Scenario { Similar, Dissimilar };

const char* scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

/// Top-K (similar) or bottom-K (dissimilar) pathways of a ranking, plus
/// trainable masks covering every node and edge on a selected pathway.
struct KeyPathwaySelection {
  Scenario scenario = Scenario::Similar;
  int k = 1;
  std::vector<RankedPathway> selected;
  std::vector<char> node_trainable;  // node_count entries
  std::vector<char> edge_trainable;  // edge_count entries, by edge index
};

/// Throws KOutOfRangeError unless 1 <= K <= |P|.
KeyPathwaySelection select_key_pathways(const DirectedAcyclicGraph& dag,
                                        const PathwayRanking& ranking, int k,
                                        Scenario scenario);

/// Cumulative active-pathway counts q(t) for t = 1..T:
/// q(t) = t * floor(|P|/T) for t < T, q(T) = |P|, clamped to >= 1 so the
/// active subgraph is never empty.
std::vector<int> growth_counts(int total_pathways, int timesteps);

/// Nested per-timestep active subgraphs: masks(t) is the union of the
/// top-q(t) ranked pathways; masks(T) covers the whole graph.
struct GrowthSchedule {
  int timesteps = 1;
  std::vector<int> counts;                     // q(t), length T
  std::vector<std::vector<char>> node_active;  // T x node_count
  std::vector<std::vector<char>> edge_active;  // T x edge_count
};

GrowthSchedule build_growth_schedule(const DirectedAcyclicGraph& dag,
                                     const PathwayRanking& ranking,
                                     int timesteps);

}  // namespace cognisnn
