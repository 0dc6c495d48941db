#include "cognisnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cognisnn {

namespace {

// Mirrors standard_pool's guard so geometry can be fixed before any tensor
// exists: pooling applies iff d >= kappa and d / kappa >= eta.
bool pooling_applies(int d, const PoolingPolicy& p) {
  return d >= p.kappa && d / p.kappa >= p.eta;
}

bool downsamples_at(const ModelConfig& config, int depth) {
  return std::find(config.pool_depths.begin(), config.pool_depths.end(),
                   depth) != config.pool_depths.end();
}

std::string edge_label(int u, int v) {
  return "edge." + std::to_string(u) + "-" + std::to_string(v);
}

struct Profile {
  std::vector<ProfiledOp> rows;

  void add(const std::string& label, const char* type, std::int64_t count) {
    for (auto& r : rows) {
      if (r.node == label && r.op_type == type) {
        r.count += count;
        return;
      }
    }
    rows.push_back({label, type, count});
  }
};

void count_triplet(const ConvBNSNTriplet& t, const TripletTrace& trace,
                   const std::string& label, Profile& prof) {
  const auto c = count_conv_ops(trace.conv_in, t.conv_weight.dim(0), t.kernel,
                                1, t.kernel / 2);
  if (c.macs > 0) prof.add(label + ".conv", "mac", c.macs);
  if (c.acs > 0) prof.add(label + ".conv", "ac", c.acs);
  // eval-mode BN folds to one multiply-add per element
  prof.add(label + ".bn", "mac", trace.conv_out.size());
}

Tensor aggregate_impl(const CogniSNNModel& m, int node,
                      const std::vector<Tensor>& preds,
                      const NodeActivityMask* mask, Profile* prof) {
  const auto& pred_ids = m.dag.predecessors[node];
  if (preds.size() != pred_ids.size())
    throw MismatchedGraphError(
        "aggregate_inputs: outputs must align with dag.predecessors[" +
        std::to_string(node) + "]");
  const bool downsample = downsamples_at(m.config, m.node_depth[node]);
  Tensor acc;
  for (std::size_t pi = 0; pi < pred_ids.size(); ++pi) {
    const int i = pred_ids[pi];
    const int e = m.dag.edge_index(i, node);
    if (mask && !mask->edge_active[e]) continue;
    Tensor o = preds[pi];
    if (!o.defined())
      throw NoActiveInputError("edge " + std::to_string(i) + "->" +
                               std::to_string(node) +
                               " is active but its source emitted nothing");
    if (downsample) o = standard_pool(o, m.config.pooling);
    const int kernel = adaptive_pool_kernel(m.edge_dim[e], m.node_dim[node]);
    if (kernel > 1) o = avg_pool2d(o, kernel);
    if (prof) {
      std::int64_t nnz = 0;
      for (double v : o.values())
        if (v != 0.0) ++nnz;
      prof->add(edge_label(i, node), "mac", nnz);
    }
    Tensor gated = scale_by(o, sigmoid(m.edge_gate[e]));
    acc = acc.defined() ? add(acc, gated) : gated;
  }
  if (!acc.defined())
    throw NoActiveInputError("node " + std::to_string(node) +
                             " has no active input");
  return acc;
}

Tensor run_timestep(CogniSNNModel& m, Tensor frame,
                    const NodeActivityMask* mask, const ForwardOptions& opts,
                    Profile* prof) {
  if (!frame.defined() || frame.rank() != 4)
    throw ShapeMismatchError("forward: frame must be NCHW");
  if (frame.dim(1) != m.config.in_channels ||
      frame.dim(2) != m.config.height || frame.dim(3) != m.config.width)
    throw ShapeMismatchError("forward: frame shape " +
                             shape_string(frame.shape()) +
                             " does not match the model configuration");
  if (mask) mask->validate(m.dag);
  if (opts.node_bn_train &&
      static_cast<int>(opts.node_bn_train->size()) != m.dag.node_count)
    throw ConfigError("node_bn_train must cover every node");
  if (opts.use_new_head && !m.has_new_head())
    throw HeadMismatchError("model has no second head");

  TripletTrace stem_trace;
  Tensor x = triplet_forward(m.stem, frame, opts.bn_train,
                             prof ? &stem_trace : nullptr);
  if (prof) {
    // first layer runs on raw sensor values: dense multiply-accumulates
    const auto& w = m.stem.conv_weight;
    const std::int64_t taps =
        static_cast<std::int64_t>(w.dim(1)) * w.dim(2) * w.dim(3);
    prof->add("stem.conv", "mac", stem_trace.conv_out.size() * taps);
    prof->add("stem.bn", "mac", stem_trace.conv_out.size());
  }
  for (int s = 0; s < m.config.stem_pool; ++s)
    x = standard_pool(x, m.config.pooling);

  const int n = m.dag.node_count;
  std::vector<Tensor> node_out(n);
  for (int j = 0; j < n; ++j) {
    if (mask && !mask->node_active[j]) continue;  // LIF state stays untouched
    Tensor current;
    if (m.dag.predecessors[j].empty()) {
      current = x;
    } else {
      std::vector<Tensor> preds;
      preds.reserve(m.dag.predecessors[j].size());
      for (int i : m.dag.predecessors[j]) preds.push_back(node_out[i]);
      current = aggregate_impl(m, j, preds, mask, prof);
    }
    const bool bn_train =
        opts.node_bn_train ? (*opts.node_bn_train)[j] != 0 : opts.bn_train;
    ResNodeTrace trace;
    node_out[j] = resnode_forward(m.nodes[j], current, bn_train,
                                  prof ? &trace : nullptr);
    if (prof) {
      const std::string base = "node" + std::to_string(j);
      count_triplet(m.nodes[j].triplet1, trace.t1, base + ".t1", *prof);
      count_triplet(m.nodes[j].triplet2, trace.t2, base + ".t2", *prof);
    }
    if (opts.exec_order) opts.exec_order->push_back(j);
  }

  Tensor acc;
  int active_outputs = 0;
  for (int o : m.dag.output_nodes) {
    if (mask && !mask->node_active[o]) continue;
    Tensor y = node_out[o];
    const int kernel = adaptive_pool_kernel(m.node_dim[o], m.readout_dim);
    if (kernel > 1) y = avg_pool2d(y, kernel);
    acc = acc.defined() ? add(acc, y) : y;
    ++active_outputs;
  }
  if (active_outputs == 0)
    throw NoActiveInputError("mask leaves no active output node");
  if (active_outputs > 1) acc = scale(acc, 1.0 / active_outputs);

  Tensor features = global_avg_pool(acc);
  if (opts.features_out) *opts.features_out = features;
  Tensor head_w = opts.use_new_head ? m.new_head_weight : m.head_weight;
  Tensor head_b = opts.use_new_head ? m.new_head_bias : m.head_bias;
  if (prof)
    prof->add("head", "mac",
              static_cast<std::int64_t>(features.dim(0)) * head_w.dim(0) *
                  head_w.dim(1));
  return linear(features, head_w, head_b);
}

}  // namespace

void ModelConfig::validate() const {
  if (in_channels < 1) throw ConfigError("in_channels must be >= 1");
  if (channels < 1) throw ConfigError("channels must be >= 1");
  if (class_count < 1) throw ConfigError("class_count must be >= 1");
  if (height < 1 || width < 1)
    throw ConfigError("input height and width must be >= 1");
  if (height != width)
    throw ConfigError("pooling assumes square inputs, got " +
                      std::to_string(height) + "x" + std::to_string(width));
  if (stem_pool < 0) throw ConfigError("stem_pool must be >= 0");
  for (int d : pool_depths)
    if (d < 1) throw ConfigError("pool depths must be >= 1");
  try {
    pooling.validate();
    lif.validate();
  } catch (const InvalidSpecError& e) {
    throw ConfigError(e.what());
  }
}

NodeActivityMask NodeActivityMask::full(const DirectedAcyclicGraph& dag) {
  NodeActivityMask mask;
  mask.node_active.assign(dag.node_count, 1);
  mask.edge_active.assign(dag.edge_count(), 1);
  return mask;
}

void NodeActivityMask::validate(const DirectedAcyclicGraph& dag) const {
  if (static_cast<int>(node_active.size()) != dag.node_count ||
      static_cast<int>(edge_active.size()) != dag.edge_count())
    throw MismatchedGraphError("activity mask sized for a different graph");
  for (int e = 0; e < dag.edge_count(); ++e) {
    if (!edge_active[e]) continue;
    const auto [u, v] = dag.edges[e];
    if (!node_active[u] || !node_active[v])
      throw NoActiveInputError("active edge " + std::to_string(u) + "->" +
                               std::to_string(v) +
                               " requires both endpoints active");
  }
  for (int j = 0; j < dag.node_count; ++j) {
    if (!node_active[j] || dag.predecessors[j].empty()) continue;
    bool fed = false;
    for (int i : dag.predecessors[j])
      if (edge_active[dag.edge_index(i, j)]) {
        fed = true;
        break;
      }
    if (!fed)
      throw NoActiveInputError("active node " + std::to_string(j) +
                               " has every incoming edge masked");
  }
}

std::vector<NodeActivityMask> schedule_masks(const GrowthSchedule& schedule) {
  std::vector<NodeActivityMask> masks;
  masks.reserve(schedule.node_active.size());
  for (std::size_t t = 0; t < schedule.node_active.size(); ++t)
    masks.push_back({schedule.node_active[t], schedule.edge_active[t]});
  return masks;
}

CogniSNNModel build_model(const DirectedAcyclicGraph& dag,
                          const ModelConfig& config) {
  config.validate();
  if (dag.node_count < 1 || dag.edges.empty())
    throw ConfigError("model needs a graph with at least one edge");

  CogniSNNModel m;
  m.dag = dag;
  m.config = config;

  // Geometry is fixed here on the full graph. Masked execution therefore
  // never changes a node's spatial dimension, which keeps LIF state shapes
  // stable while the active subgraph grows.
  int d = config.height;
  for (int s = 0; s < config.stem_pool; ++s) {
    if (!pooling_applies(d, config.pooling)) break;
    if (d % config.pooling.kappa != 0)
      throw ConfigError("stem pooling cannot halve dimension " +
                        std::to_string(d));
    d /= config.pooling.kappa;
  }
  m.stem_dim = d;

  const int n = dag.node_count;
  m.node_depth.assign(n, 0);
  m.node_dim.assign(n, 0);
  m.edge_dim.assign(dag.edge_count(), 0);
  for (int j = 0; j < n; ++j) {  // ids ascend along edges: already topological
    if (dag.predecessors[j].empty()) {
      m.node_dim[j] = m.stem_dim;
      continue;
    }
    int depth = 0;
    for (int i : dag.predecessors[j])
      depth = std::max(depth, m.node_depth[i] + 1);
    m.node_depth[j] = depth;
    const bool downsample = downsamples_at(config, depth);
    int target = 0;
    for (int i : dag.predecessors[j]) {
      int ed = m.node_dim[i];
      if (downsample && pooling_applies(ed, config.pooling)) {
        if (ed % config.pooling.kappa != 0)
          throw ConfigError("downsampling at depth " + std::to_string(depth) +
                            " cannot split dimension " + std::to_string(ed));
        ed /= config.pooling.kappa;
      }
      m.edge_dim[dag.edge_index(i, j)] = ed;
      target = target == 0 ? ed : std::min(target, ed);
    }
    m.node_dim[j] = target;
    for (int i : dag.predecessors[j]) {
      const int ed = m.edge_dim[dag.edge_index(i, j)];
      if (ed % target != 0)
        throw ConfigError("edge " + std::to_string(i) + "->" +
                          std::to_string(j) + " cannot align dimension " +
                          std::to_string(ed) + " to " + std::to_string(target));
    }
  }
  int readout = 0;
  for (int o : dag.output_nodes)
    readout = readout == 0 ? m.node_dim[o] : std::min(readout, m.node_dim[o]);
  for (int o : dag.output_nodes)
    if (m.node_dim[o] % readout != 0)
      throw ConfigError("output node " + std::to_string(o) +
                        " cannot align dimension " +
                        std::to_string(m.node_dim[o]) + " to " +
                        std::to_string(readout));
  m.readout_dim = readout;

  Rng rng(config.init_seed);
  m.stem = ConvBNSNTriplet::create(config.in_channels, config.channels, 3,
                                   config.lif, rng);
  m.nodes.reserve(n);
  for (int j = 0; j < n; ++j)
    m.nodes.push_back(
        ResNode::create(config.channels, config.channels, config.lif, rng));
  m.edge_gate.reserve(dag.edge_count());
  for (int e = 0; e < dag.edge_count(); ++e)
    m.edge_gate.push_back(Tensor::zeros({1}, true));  // sigmoid(0) = 0.5
  m.head_weight = Tensor::zeros({config.class_count, config.channels}, true);
  const double head_std = std::sqrt(2.0 / config.channels);
  for (auto& v : m.head_weight.values()) v = rng.normal() * head_std;
  m.head_bias = Tensor::zeros({config.class_count}, true);
  return m;
}

void CogniSNNModel::reset_state() {
  stem.reset_state();
  for (auto& node : nodes) node.reset_state();
}

void CogniSNNModel::add_new_head(int class_count, std::uint64_t seed) {
  if (has_new_head())
    throw HeadMismatchError("model already has a second head");
  if (class_count < 1) throw ConfigError("class_count must be >= 1");
  Rng rng(seed);
  new_head_weight = Tensor::zeros({class_count, config.channels}, true);
  const double std_dev = std::sqrt(2.0 / config.channels);
  for (auto& v : new_head_weight.values()) v = rng.normal() * std_dev;
  new_head_bias = Tensor::zeros({class_count}, true);
}

std::vector<std::pair<std::string, Tensor>> CogniSNNModel::parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto add_triplet = [&](const std::string& prefix, const ConvBNSNTriplet& t) {
    out.emplace_back(prefix + ".conv.weight", t.conv_weight);
    out.emplace_back(prefix + ".bn.gamma", t.bn.gamma);
    out.emplace_back(prefix + ".bn.beta", t.bn.beta);
  };
  add_triplet("stem", stem);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    add_triplet("node" + std::to_string(j) + ".t1", nodes[j].triplet1);
    add_triplet("node" + std::to_string(j) + ".t2", nodes[j].triplet2);
  }
  for (int e = 0; e < dag.edge_count(); ++e)
    out.emplace_back(
        edge_label(dag.edges[e].first, dag.edges[e].second) + ".weight",
        edge_gate[e]);
  out.emplace_back("head.weight", head_weight);
  out.emplace_back("head.bias", head_bias);
  if (has_new_head()) {
    out.emplace_back("head_new.weight", new_head_weight);
    out.emplace_back("head_new.bias", new_head_bias);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor>> CogniSNNModel::buffers() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto add_bn = [&](const std::string& prefix, const BatchNorm2d& bn) {
    out.emplace_back(prefix + ".running_mean", bn.running_mean);
    out.emplace_back(prefix + ".running_var", bn.running_var);
  };
  add_bn("stem.bn", stem.bn);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    add_bn("node" + std::to_string(j) + ".t1.bn", nodes[j].triplet1.bn);
    add_bn("node" + std::to_string(j) + ".t2.bn", nodes[j].triplet2.bn);
  }
  return out;
}

std::map<std::string, Tensor> CogniSNNModel::state() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, tensor] : parameters()) out.emplace(name, tensor);
  for (const auto& [name, tensor] : buffers()) out.emplace(name, tensor);
  return out;
}

void CogniSNNModel::load_state(const std::map<std::string, Tensor>& entries) {
  const auto registry = state();
  for (const auto& [name, tensor] : registry) {
    const auto it = entries.find(name);
    if (it == entries.end())
      throw DataEmptyError("checkpoint is missing " + name);
    if (!it->second.same_shape(tensor))
      throw ShapeMismatchError("checkpoint entry " + name + " has shape " +
                               shape_string(it->second.shape()) +
                               ", expected " + shape_string(tensor.shape()));
  }
  for (const auto& [name, tensor] : entries)
    if (registry.find(name) == registry.end())
      throw CorruptFileError("checkpoint has unexpected entry " + name);
  for (const auto& [name, tensor] : registry) {
    Tensor dst = tensor;  // shares storage; the registry map itself is const
    dst.values() = entries.at(name).values();
  }
}

Tensor aggregate_inputs(const CogniSNNModel& model, int node,
                        const std::vector<Tensor>& predecessor_outputs,
                        const NodeActivityMask* mask) {
  if (node < 0 || node >= model.dag.node_count)
    throw MismatchedGraphError("aggregate_inputs: node " +
                               std::to_string(node) + " is out of range");
  if (mask) mask->validate(model.dag);
  return aggregate_impl(model, node, predecessor_outputs, mask, nullptr);
}

Tensor forward_timestep(CogniSNNModel& model, Tensor frame,
                        const NodeActivityMask* mask,
                        const ForwardOptions& options) {
  return run_timestep(model, frame, mask, options, nullptr);
}

Tensor forward_sequence(CogniSNNModel& model,
                        const std::vector<Tensor>& frames,
                        const ForwardOptions& options) {
  if (frames.empty()) throw DataEmptyError("forward_sequence: no frames");
  if (options.schedule && options.schedule->size() != frames.size())
    throw ConfigError("schedule covers " +
                      std::to_string(options.schedule->size()) +
                      " timesteps but " + std::to_string(frames.size()) +
                      " frames were given");
  model.reset_state();
  Tensor acc;
  Tensor feature_acc;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const NodeActivityMask* mask =
        options.schedule ? &(*options.schedule)[t] : nullptr;
    Tensor logits = forward_timestep(model, frames[t], mask, options);
    acc = acc.defined() ? add(acc, logits) : logits;
    if (options.features_out)
      feature_acc = feature_acc.defined()
                        ? add(feature_acc, *options.features_out)
                        : *options.features_out;
  }
  if (options.features_out)
    *options.features_out =
        scale(feature_acc, 1.0 / static_cast<double>(frames.size()));
  return scale(acc, 1.0 / static_cast<double>(frames.size()));
}

ConvOpCount count_conv_ops(const Tensor& x, int out_channels, int kernel,
                           int stride, int padding) {
  if (!x.defined() || x.rank() != 4)
    throw ShapeMismatchError("count_conv_ops: input must be NCHW");
  if (out_channels < 1 || kernel < 1 || stride < 1 || padding < 0)
    throw ConfigError("count_conv_ops: invalid conv geometry");
  const int batch = x.dim(0), channels = x.dim(1);
  const int height = x.dim(2), width = x.dim(3);
  const int out_h = (height + 2 * padding - kernel) / stride + 1;
  const int out_w = (width + 2 * padding - kernel) / stride + 1;
  ConvOpCount result;
  if (out_h < 1 || out_w < 1) return result;

  bool binary = true;
  for (double v : x.values())
    if (v != 0.0 && v != 1.0) {
      binary = false;
      break;
    }

  // number of output positions along one axis whose window covers `pos`
  auto coverage = [&](int pos, int out_limit) -> std::int64_t {
    const int p = pos + padding;
    const int first = p - kernel + 1;
    int lo = first <= 0 ? 0 : (first + stride - 1) / stride;
    int hi = std::min(p / stride, out_limit - 1);
    return hi >= lo ? hi - lo + 1 : 0;
  };
  std::vector<std::int64_t> cov_h(height), cov_w(width);
  for (int h = 0; h < height; ++h) cov_h[h] = coverage(h, out_h);
  for (int w = 0; w < width; ++w) cov_w[w] = coverage(w, out_w);

  std::int64_t taps = 0;
  const auto& vals = x.values();
  std::int64_t idx = 0;
  for (int nc = 0; nc < batch * channels; ++nc)
    for (int h = 0; h < height; ++h)
      for (int w = 0; w < width; ++w, ++idx)
        if (vals[idx] != 0.0) taps += cov_h[h] * cov_w[w];
  (binary ? result.acs : result.macs) = taps * out_channels;
  return result;
}

EnergyReport count_ops_and_energy(CogniSNNModel& model,
                                  const std::vector<Tensor>& frames,
                                  const EnergyModel& energy) {
  if (frames.empty())
    throw DataEmptyError("count_ops_and_energy: no frames");
  model.reset_state();
  Profile prof;
  ForwardOptions opts;  // eval mode, full graph, original head
  for (const auto& frame : frames)
    run_timestep(model, frame, nullptr, opts, &prof);
  EnergyReport report;
  report.rows = prof.rows;
  for (const auto& row : report.rows)
    (row.op_type == "mac" ? report.macs : report.acs) += row.count;
  report.energy_pj =
      static_cast<double>(report.macs) * energy.mac_pj +
      static_cast<double>(report.acs) * energy.ac_pj;
  report.energy_mj = report.energy_pj * 1e-9;
  return report;
}

std::string profiling_csv(const EnergyReport& report) {
  std::ostringstream out;
  out << "node,op_type,count\n";
  for (const auto& r : report.rows)
    out << r.node << ',' << r.op_type << ',' << r.count << '\n';
  return out.str();
}

}  // namespace cognisnn
