#include "cognisnn/pathway.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace cognisnn {

const char* scenario_name(Scenario s) {
  return s == Scenario::Similar ? "similar" : "dissimilar";
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "similar") return Scenario::Similar;
  if (name == "dissimilar") return Scenario::Dissimilar;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::vector<Pathway> enumerate_pathways(const DirectedAcyclicGraph& dag,
                                        long long cap) {
  if (cap < 1) throw InvalidSpecError("pathway cap must be >= 1");
  std::vector<Pathway> out;
  std::vector<int> stack;
  // Iterative DFS; successor lists are sorted, so paths emerge in
  // lexicographic order of their node sequences.
  struct Frame {
    int node;
    size_t next_child;
  };
  std::vector<Frame> frames;
  for (int input : dag.input_nodes) {
    frames.push_back({input, 0});
    stack.push_back(input);
    while (!frames.empty()) {
      Frame& f = frames.back();
      const auto& succ = dag.successors[f.node];
      if (succ.empty() && f.next_child == 0) {
        if (static_cast<long long>(out.size()) >= cap)
          throw PathwayExplosionError("pathway count exceeds cap " +
                                      std::to_string(cap));
        Pathway p;
        p.nodes = stack;
        for (size_t i = 0; i + 1 < stack.size(); ++i)
          p.edges.emplace_back(stack[i], stack[i + 1]);
        out.push_back(std::move(p));
      }
      if (f.next_child < succ.size()) {
        int child = succ[f.next_child++];
        frames.push_back({child, 0});
        stack.push_back(child);
      } else {
        frames.pop_back();
        stack.pop_back();
      }
    }
  }
  return out;
}

namespace {

// Per-source BFS tables: dist[s][v] (-1 if unreachable) and the number of
// shortest s->v paths sigma[s][v]. Path counts fit a double exactly at desk
// scale (graphs here stay far below 2^53 shortest paths).
struct ShortestPaths {
  std::vector<std::vector<int>> dist;
  std::vector<std::vector<double>> sigma;
};

ShortestPaths all_pairs(const DirectedAcyclicGraph& dag) {
  const int n = dag.node_count;
  ShortestPaths sp;
  sp.dist.assign(n, std::vector<int>(n, -1));
  sp.sigma.assign(n, std::vector<double>(n, 0.0));
  std::deque<int> queue;
  for (int s = 0; s < n; ++s) {
    auto& dist = sp.dist[s];
    auto& sigma = sp.sigma[s];
    dist[s] = 0;
    sigma[s] = 1.0;
    queue.clear();
    queue.push_back(s);
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int v : dag.successors[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
        if (dist[v] == dist[u] + 1) sigma[v] += sigma[u];
      }
    }
  }
  return sp;
}

}  // namespace

std::vector<double> node_betweenness(const DirectedAcyclicGraph& dag) {
  const int n = dag.node_count;
  ShortestPaths sp = all_pairs(dag);
  std::vector<double> bc(n, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      if (s == t || sp.dist[s][t] < 0) continue;
      for (int v = 0; v < n; ++v) {
        if (v == s || v == t) continue;
        if (sp.dist[s][v] < 0 || sp.dist[v][t] < 0) continue;
        if (sp.dist[s][v] + sp.dist[v][t] != sp.dist[s][t]) continue;
        bc[v] += sp.sigma[s][v] * sp.sigma[v][t] / sp.sigma[s][t];
      }
    }
  }
  return bc;
}

std::vector<double> edge_betweenness(const DirectedAcyclicGraph& dag) {
  const int n = dag.node_count;
  ShortestPaths sp = all_pairs(dag);
  std::vector<double> bc(dag.edges.size(), 0.0);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      if (s == t || sp.dist[s][t] < 0) continue;
      for (size_t e = 0; e < dag.edges.size(); ++e) {
        auto [u, v] = dag.edges[e];
        if (sp.dist[s][u] < 0 || sp.dist[v][t] < 0) continue;
        if (sp.dist[s][u] + 1 + sp.dist[v][t] != sp.dist[s][t]) continue;
        bc[e] += sp.sigma[s][u] * sp.sigma[v][t] / sp.sigma[s][t];
      }
    }
  }
  return bc;
}

double pathway_betweenness(const DirectedAcyclicGraph& dag, const Pathway& p,
                           const std::vector<double>& node_bc,
                           const std::vector<double>& edge_bc) {
  if (node_bc.size() != static_cast<size_t>(dag.node_count) ||
      edge_bc.size() != dag.edges.size())
    throw MismatchedGraphError("BC tables do not match the graph");
  double sum = 0.0;
  for (int v : p.nodes) {
    if (v < 0 || v >= dag.node_count)
      throw MismatchedGraphError("pathway node " + std::to_string(v) +
                                 " not in graph");
    sum += node_bc[v];
  }
  for (auto [u, v] : p.edges) {
    int e = dag.edge_index(u, v);
    if (e < 0)
      throw MismatchedGraphError("pathway edge (" + std::to_string(u) + ", " +
                                 std::to_string(v) + ") not in graph");
    sum += edge_bc[e];
  }
  return sum;
}

PathwayRanking rank_pathways(const DirectedAcyclicGraph& dag, long long cap) {
  auto paths = enumerate_pathways(dag, cap);
  auto node_bc = node_betweenness(dag);
  auto edge_bc = edge_betweenness(dag);
  PathwayRanking ranking;
  ranking.pathways.reserve(paths.size());
  for (auto& p : paths) {
    double bc = pathway_betweenness(dag, p, node_bc, edge_bc);
    ranking.pathways.push_back({std::move(p), bc});
  }
  // Enumeration order is lexicographic, so a stable sort on BC keeps the
  // documented tie-break.
  std::stable_sort(ranking.pathways.begin(), ranking.pathways.end(),
                   [](const RankedPathway& a, const RankedPathway& b) {
                     return a.bc > b.bc;
                   });
  return ranking;
}

KeyPathwaySelection select_key_pathways(const DirectedAcyclicGraph& dag,
                                        const PathwayRanking& ranking, int k,
                                        Scenario scenario) {
  const int total = ranking.total();
  if (k < 1 || k > total)
    throw KOutOfRangeError("K = " + std::to_string(k) +
                           " outside [1, " + std::to_string(total) + "]");
  KeyPathwaySelection sel;
  sel.scenario = scenario;
  sel.k = k;
  sel.node_trainable.assign(dag.node_count, 0);
  sel.edge_trainable.assign(dag.edges.size(), 0);
  const int begin = scenario == Scenario::Similar ? 0 : total - k;
  for (int i = begin; i < begin + k; ++i) {
    const RankedPathway& rp = ranking.pathways[i];
    sel.selected.push_back(rp);
    for (int v : rp.pathway.nodes) sel.node_trainable[v] = 1;
    for (auto [u, v] : rp.pathway.edges)
      sel.edge_trainable[dag.edge_index(u, v)] = 1;
  }
  return sel;
}

std::vector<int> growth_counts(int total_pathways, int timesteps) {
  if (total_pathways < 1) throw InvalidSpecError("need at least one pathway");
  if (timesteps < 1) throw InvalidSpecError("timesteps must be >= 1");
  std::vector<int> q(timesteps);
  const int step = total_pathways / timesteps;
  for (int t = 1; t < timesteps; ++t) q[t - 1] = std::max(1, t * step);
  q[timesteps - 1] = total_pathways;
  return q;
}

GrowthSchedule build_growth_schedule(const DirectedAcyclicGraph& dag,
                                     const PathwayRanking& ranking,
                                     int timesteps) {
  if (ranking.total() == 0)
    throw MismatchedGraphError("growth schedule needs a non-empty ranking");
  for (const RankedPathway& rp : ranking.pathways) {
    for (int v : rp.pathway.nodes)
      if (v < 0 || v >= dag.node_count)
        throw MismatchedGraphError("ranked pathway references node " +
                                   std::to_string(v) +
                                   " absent from the graph");
    for (auto [u, v] : rp.pathway.edges)
      if (dag.edge_index(u, v) < 0)
        throw MismatchedGraphError("ranked pathway references edge " +
                                   std::to_string(u) + "->" +
                                   std::to_string(v) +
                                   " absent from the graph");
  }
  GrowthSchedule sched;
  sched.timesteps = timesteps;
  sched.counts = growth_counts(ranking.total(), timesteps);
  sched.node_active.assign(timesteps, std::vector<char>(dag.node_count, 0));
  sched.edge_active.assign(timesteps, std::vector<char>(dag.edges.size(), 0));
  // Prefix unions over the ranked pathway list keep the masks nested.
  std::vector<char> nodes(dag.node_count, 0);
  std::vector<char> edges(dag.edges.size(), 0);
  int covered = 0;
  for (int t = 0; t < timesteps; ++t) {
    for (; covered < sched.counts[t]; ++covered) {
      const Pathway& p = ranking.pathways[covered].pathway;
      for (int v : p.nodes) nodes[v] = 1;
      for (auto [u, v] : p.edges) edges[dag.edge_index(u, v)] = 1;
    }
    sched.node_active[t] = nodes;
    sched.edge_active[t] = edges;
  }
  return sched;
}

}  // namespace cognisnn
