#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "cognisnn/graph.hpp"

using namespace cognisnn;

namespace {

RandomGraphSpec er_spec(int n, double p, std::uint64_t seed) {
  RandomGraphSpec spec;
  spec.generator = GraphGenerator::ER;
  spec.node_count = n;
  spec.er_edge_prob = p;
  spec.seed = seed;
  return spec;
}

RandomGraphSpec ws_spec(int n, int k, double p, std::uint64_t seed) {
  RandomGraphSpec spec;
  spec.generator = GraphGenerator::WS;
  spec.node_count = n;
  spec.ws_neighbors = k;
  spec.ws_rewire_prob = p;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("complete ER graph") {
  auto g = generate_graph(er_spec(7, 1.0, 0));
  CHECK(g.node_count == 7);
  CHECK(g.edge_count() == 21);
  CHECK(g.input_nodes == std::vector<int>{0});
  CHECK(g.output_nodes == std::vector<int>{6});
  for (int u = 0; u < 7; ++u)
    for (int v = u + 1; v < 7; ++v) CHECK(g.has_edge(u, v));
}

TEST_CASE("empty ER graph is degenerate") {
  CHECK_THROWS_AS(generate_graph(er_spec(7, 0.0, 0)), DegenerateGraphError);
}

TEST_CASE("unrewired ring lattice") {
  auto g = generate_graph(ws_spec(8, 4, 0.0, 0));
  CHECK(g.node_count == 8);
  CHECK(g.edge_count() == 16);
  // Ring neighbors at distance 1 and 2, wraparound edges oriented from the
  // lower index.
  CHECK(g.successors[0] == std::vector<int>{1, 2, 6, 7});
  CHECK(g.predecessors[7] == std::vector<int>{0, 1, 5, 6});
  CHECK(g.input_nodes == std::vector<int>{0});
  CHECK(g.output_nodes == std::vector<int>{7});
}

TEST_CASE("generation is deterministic") {
  for (std::uint64_t seed : {0ull, 1ull, 17ull, 123456789ull}) {
    auto a = serialize_graph(generate_graph(er_spec(12, 0.4, seed)));
    auto b = serialize_graph(generate_graph(er_spec(12, 0.4, seed)));
    CHECK(a == b);
    auto c = serialize_graph(generate_graph(ws_spec(12, 4, 0.75, seed)));
    auto d = serialize_graph(generate_graph(ws_spec(12, 4, 0.75, seed)));
    CHECK(c == d);
  }
}

TEST_CASE("different seeds change ER graphs") {
  auto a = serialize_graph(generate_graph(er_spec(12, 0.4, 0)));
  auto b = serialize_graph(generate_graph(er_spec(12, 0.4, 1)));
  CHECK(a != b);
}

TEST_CASE("isolated nodes are pruned and survivors renumbered") {
  auto g = DirectedAcyclicGraph::build(5, {{0, 2}, {2, 4}},
                                       GraphGenerator::ER, 0);
  CHECK(g.node_count == 3);
  CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(g.input_nodes == std::vector<int>{0});
  CHECK(g.output_nodes == std::vector<int>{2});
}

TEST_CASE("build rejects self loops and dedupes") {
  CHECK_THROWS_AS(
      DirectedAcyclicGraph::build(3, {{1, 1}}, GraphGenerator::ER, 0),
      InvalidSpecError);
  auto g = DirectedAcyclicGraph::build(3, {{1, 0}, {0, 1}, {1, 2}},
                                       GraphGenerator::ER, 0);
  CHECK(g.edge_count() == 2);  // (1,0) normalizes to (0,1)
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(generate_graph(er_spec(2, 0.5, 0)), InvalidSpecError);
  CHECK_THROWS_AS(generate_graph(er_spec(7, 1.5, 0)), InvalidSpecError);
  CHECK_THROWS_AS(generate_graph(ws_spec(8, 3, 0.5, 0)), InvalidSpecError);
  CHECK_THROWS_AS(generate_graph(ws_spec(8, 8, 0.5, 0)), InvalidSpecError);
  CHECK_THROWS_AS(generate_graph(ws_spec(8, 4, -0.1, 0)), InvalidSpecError);
}

TEST_CASE("serialization round trip") {
  auto g = generate_graph(er_spec(10, 0.5, 42));
  auto text = serialize_graph(g);
  auto h = parse_graph(text);
  CHECK(h.node_count == g.node_count);
  CHECK(h.edges == g.edges);
  CHECK(h.generator == g.generator);
  CHECK(h.seed == g.seed);
  CHECK(serialize_graph(h) == text);
}

TEST_CASE("serialized text format") {
  auto g = DirectedAcyclicGraph::build(3, {{0, 1}, {1, 2}},
                                       GraphGenerator::ER, 7);
  CHECK(serialize_graph(g) == "rga er 3 7\nedge 0 1\nedge 1 2\n");
}

TEST_CASE("file round trip") {
  auto g = generate_graph(ws_spec(10, 4, 0.75, 3));
  auto path = std::filesystem::temp_directory_path() / "cognisnn_graph.rga";
  save_graph(path.string(), g);
  auto h = load_graph(path.string());
  CHECK(serialize_graph(h) == serialize_graph(g));
  std::filesystem::remove(path);
}

TEST_CASE("parse rejects malformed input") {
  CHECK_THROWS_AS(parse_graph("not a graph"), CorruptFileError);
  CHECK_THROWS_AS(parse_graph("rga lattice 3 0\nedge 0 1\n"), CorruptFileError);
  CHECK_THROWS_AS(parse_graph("rga er 3 0\nedge 0 5\n"), CorruptFileError);
  CHECK_THROWS_AS(parse_graph("rga er 3 0\nedge 1 0\n"), CorruptFileError);
  // node 1 isolated: the file does not describe a pruned graph
  CHECK_THROWS_AS(parse_graph("rga er 3 0\nedge 0 2\n"), CorruptFileError);
  CHECK_THROWS_AS(load_graph("/nonexistent/graph.rga"), DataEmptyError);
}

TEST_CASE("dot export") {
  auto g = DirectedAcyclicGraph::build(3, {{0, 1}, {1, 2}},
                                       GraphGenerator::ER, 0);
  auto dot = graph_to_dot(g);
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("n0 -> n1;") != std::string::npos);
  CHECK(dot.find("n1 -> n2;") != std::string::npos);
}

TEST_CASE("every node keeps degree after pruning") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    DirectedAcyclicGraph g;
    try {
      g = generate_graph(er_spec(9, 0.25, seed));
    } catch (const DegenerateGraphError&) {
      continue;
    }
    CHECK(!g.input_nodes.empty());
    CHECK(!g.output_nodes.empty());
    for (int v = 0; v < g.node_count; ++v)
      CHECK(g.successors[v].size() + g.predecessors[v].size() > 0);
  }
}
