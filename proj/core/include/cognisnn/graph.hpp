#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cognisnn/errors.hpp"

namespace cognisnn {

enum class GraphGenerator { WS, ER };

const char* generator_name(GraphGenerator g);
GraphGenerator generator_from_name(const std::string& name);

/// Parameters for the WS / ER random graph generators. Identical spec + seed
/// always produces an identical graph.
struct RandomGraphSpec {
  GraphGenerator generator = GraphGenerator::ER;
  int node_count = 7;  // >= 3
  int ws_neighbors = 4;        // k, even, < node_count
  double ws_rewire_prob = 0.75;
  double er_edge_prob = 0.2;
  std::uint64_t seed = 0;

  /// Throws InvalidSpecError when a field is out of range.
  void validate() const;
};

/// Random graph topology oriented into a DAG. Every edge runs from a lower to
/// a higher node index, so acyclicity holds by construction. Nodes without
/// predecessors are inputs, nodes without successors are outputs; isolated
/// nodes are pruned and the survivors renumbered at construction time.
struct DirectedAcyclicGraph {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;  // sorted, u < v
  std::vector<int> input_nodes;
  std::vector<int> output_nodes;
  std::vector<std::vector<int>> successors;
  std::vector<std::vector<int>> predecessors;

  GraphGenerator generator = GraphGenerator::ER;
  std::uint64_t seed = 0;

  int edge_count() const { return static_cast<int>(edges.size()); }

  /// Index of edge (u, v) in `edges`, or -1 when absent.
  int edge_index(int u, int v) const;

  bool has_edge(int u, int v) const { return edge_index(u, v) >= 0; }

  /// Normalizes an edge list into a valid DAG: dedupes, sorts, prunes
  /// isolated nodes, renumbers, derives inputs/outputs and adjacency.
  /// Throws DegenerateGraphError when no edges survive.
  static DirectedAcyclicGraph build(int node_count,
                                    std::vector<std::pair<int, int>> edges,
                                    GraphGenerator generator,
                                    std::uint64_t seed);
};

DirectedAcyclicGraph generate_graph(const RandomGraphSpec& spec);

/// Plain-text serialization: header `rga <generator> <n> <seed>`, then one
/// `edge u v` line per edge, sorted.
std::string serialize_graph(const DirectedAcyclicGraph& dag);
DirectedAcyclicGraph parse_graph(const std::string& text);
void save_graph(const std::string& path, const DirectedAcyclicGraph& dag);
DirectedAcyclicGraph load_graph(const std::string& path);

/// DOT export for visualization.
std::string graph_to_dot(const DirectedAcyclicGraph& dag);

}  // namespace cognisnn
