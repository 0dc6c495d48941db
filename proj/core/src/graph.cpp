#include "cognisnn/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cognisnn/rng.hpp"

namespace cognisnn {

const char* generator_name(GraphGenerator g) {
  return g == GraphGenerator::WS ? "ws" : "er";
}

GraphGenerator generator_from_name(const std::string& name) {
  if (name == "ws") return GraphGenerator::WS;
  if (name == "er") return GraphGenerator::ER;
  throw InvalidSpecError("unknown graph generator '" + name + "'");
}

void RandomGraphSpec::validate() const {
  if (node_count < 3)
    throw InvalidSpecError("node_count must be >= 3, got " +
                           std::to_string(node_count));
  if (generator == GraphGenerator::WS) {
    if (ws_neighbors < 2 || ws_neighbors % 2 != 0)
      throw InvalidSpecError("ws_neighbors must be a positive even number, got " +
                             std::to_string(ws_neighbors));
    if (ws_neighbors >= node_count)
      throw InvalidSpecError("ws_neighbors must be < node_count");
    if (ws_rewire_prob < 0.0 || ws_rewire_prob > 1.0)
      throw InvalidSpecError("ws_rewire_prob must lie in [0, 1]");
  } else {
    if (er_edge_prob < 0.0 || er_edge_prob > 1.0)
      throw InvalidSpecError("er_edge_prob must lie in [0, 1]");
  }
}

int DirectedAcyclicGraph::edge_index(int u, int v) const {
  auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(u, v));
  if (it != edges.end() && *it == std::make_pair(u, v))
    return static_cast<int>(it - edges.begin());
  return -1;
}

DirectedAcyclicGraph DirectedAcyclicGraph::build(
    int node_count, std::vector<std::pair<int, int>> raw,
    GraphGenerator generator, std::uint64_t seed) {
  for (auto& [u, v] : raw) {
    if (u > v) std::swap(u, v);
    if (u == v || u < 0 || v >= node_count)
      throw InvalidSpecError("edge (" + std::to_string(u) + ", " +
                             std::to_string(v) + ") out of range");
  }
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  if (raw.empty())
    throw DegenerateGraphError("graph has no edges after pruning");

  // Prune isolated nodes, renumber survivors contiguously.
  std::vector<int> remap(node_count, -1);
  for (auto [u, v] : raw) remap[u] = remap[v] = 0;
  int next = 0;
  for (int i = 0; i < node_count; ++i)
    if (remap[i] == 0) remap[i] = next++;

  DirectedAcyclicGraph g;
  g.node_count = next;
  g.generator = generator;
  g.seed = seed;
  g.edges.reserve(raw.size());
  for (auto [u, v] : raw) g.edges.emplace_back(remap[u], remap[v]);
  std::sort(g.edges.begin(), g.edges.end());

  g.successors.assign(g.node_count, {});
  g.predecessors.assign(g.node_count, {});
  for (auto [u, v] : g.edges) {
    g.successors[u].push_back(v);
    g.predecessors[v].push_back(u);
  }
  for (int i = 0; i < g.node_count; ++i) {
    if (g.predecessors[i].empty()) g.input_nodes.push_back(i);
    if (g.successors[i].empty()) g.output_nodes.push_back(i);
  }
  return g;
}

namespace {

// Watts-Strogatz ring lattice plus rewiring on the undirected graph, then
// every edge is oriented from its lower to its higher index.
std::vector<std::pair<int, int>> ws_edges(const RandomGraphSpec& spec, Rng& rng) {
  const int n = spec.node_count;
  std::set<std::pair<int, int>> und;
  auto norm = [](int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); };
  for (int j = 1; j <= spec.ws_neighbors / 2; ++j)
    for (int i = 0; i < n; ++i) und.insert(norm(i, (i + j) % n));

  std::vector<int> degree(n, 0);
  auto recount = [&] {
    std::fill(degree.begin(), degree.end(), 0);
    for (auto [a, b] : und) { ++degree[a]; ++degree[b]; }
  };
  recount();

  for (int j = 1; j <= spec.ws_neighbors / 2; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!rng.bernoulli(spec.ws_rewire_prob)) continue;
      if (degree[i] >= n - 1) continue;  // already adjacent to every other node
      int w = static_cast<int>(rng.uniform_index(n));
      while (w == i || und.count(norm(i, w)))
        w = static_cast<int>(rng.uniform_index(n));
      int old = (i + j) % n;
      if (und.erase(norm(i, old))) { --degree[i]; --degree[old]; }
      und.insert(norm(i, w));
      ++degree[i];
      ++degree[w];
    }
  }
  return {und.begin(), und.end()};
}

std::vector<std::pair<int, int>> er_edges(const RandomGraphSpec& spec, Rng& rng) {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < spec.node_count - 1; ++u)
    for (int v = u + 1; v < spec.node_count; ++v)
      if (rng.bernoulli(spec.er_edge_prob)) out.emplace_back(u, v);
  return out;
}

}  // namespace

DirectedAcyclicGraph generate_graph(const RandomGraphSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  auto edges = spec.generator == GraphGenerator::WS ? ws_edges(spec, rng)
                                                    : er_edges(spec, rng);
  if (edges.empty())
    throw DegenerateGraphError("generator produced no edges (n=" +
                               std::to_string(spec.node_count) +
                               ", seed=" + std::to_string(spec.seed) + ")");
  return DirectedAcyclicGraph::build(spec.node_count, std::move(edges),
                                     spec.generator, spec.seed);
}

std::string serialize_graph(const DirectedAcyclicGraph& dag) {
  std::ostringstream out;
  out << "rga " << generator_name(dag.generator) << ' ' << dag.node_count << ' '
      << dag.seed << '\n';
  for (auto [u, v] : dag.edges) out << "edge " << u << ' ' << v << '\n';
  return out.str();
}

DirectedAcyclicGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string tag, gen;
  int n = 0;
  std::uint64_t seed = 0;
  if (!(in >> tag >> gen >> n >> seed) || tag != "rga")
    throw CorruptFileError("bad graph header, expected 'rga <generator> <n> <seed>'");
  GraphGenerator generator;
  try {
    generator = generator_from_name(gen);
  } catch (const InvalidSpecError& e) {
    throw CorruptFileError(e.what());
  }
  if (n < 2) throw CorruptFileError("graph header node count must be >= 2");

  std::vector<std::pair<int, int>> edges;
  std::string line;
  std::getline(in, line);  // consume remainder of header line
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int u = -1, v = -1;
    if (!(ls >> tag >> u >> v) || tag != "edge")
      throw CorruptFileError("bad graph line '" + line + "'");
    if (u < 0 || v < 0 || u >= v || v >= n)
      throw CorruptFileError("edge (" + std::to_string(u) + ", " +
                             std::to_string(v) + ") out of range");
    edges.emplace_back(u, v);
  }
  DirectedAcyclicGraph g;
  try {
    g = DirectedAcyclicGraph::build(n, std::move(edges), generator, seed);
  } catch (const Error& e) {
    throw CorruptFileError(std::string("graph file invalid: ") + e.what());
  }
  if (g.node_count != n)
    throw CorruptFileError("graph file contains isolated nodes");
  return g;
}

void save_graph(const std::string& path, const DirectedAcyclicGraph& dag) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataEmptyError("cannot open '" + path + "' for writing");
  out << serialize_graph(dag);
  if (!out) throw DataEmptyError("failed writing graph to '" + path + "'");
}

DirectedAcyclicGraph load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataEmptyError("cannot open graph file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_graph(buf.str());
}

std::string graph_to_dot(const DirectedAcyclicGraph& dag) {
  std::ostringstream out;
  out << "digraph rga {\n  rankdir=LR;\n";
  for (int i = 0; i < dag.node_count; ++i) {
    out << "  n" << i << " [label=\"" << i << "\"";
    bool in = std::find(dag.input_nodes.begin(), dag.input_nodes.end(), i) !=
              dag.input_nodes.end();
    bool outp = std::find(dag.output_nodes.begin(), dag.output_nodes.end(), i) !=
                dag.output_nodes.end();
    if (in) out << " shape=box";
    else if (outp) out << " shape=doublecircle";
    out << "];\n";
  }
  for (auto [u, v] : dag.edges) out << "  n" << u << " -> n" << v << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace cognisnn
