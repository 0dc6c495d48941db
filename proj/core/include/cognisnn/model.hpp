#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cognisnn/graph.hpp"
#include "cognisnn/pathway.hpp"
#include "cognisnn/spiking.hpp"

namespace cognisnn {

struct ModelConfig {
  int in_channels = 2;
  int channels = 8;
  int class_count = 10;
  int height = 32;
  int width = 32;
  int stem_pool = 1;             // standard_pool stages applied after the stem
  std::vector<int> pool_depths;  // node depths whose incoming edges downsample
  PoolingPolicy pooling;
  LIFParams lif;
  std::uint64_t init_seed = 0;

  void validate() const;  // throws ConfigError
};

/// Active subgraph for one timestep. Construction must keep every active
/// non-input node reachable: at least one active incoming edge.
struct NodeActivityMask {
  std::vector<char> node_active;
  std::vector<char> edge_active;  // by edge index

  static NodeActivityMask full(const DirectedAcyclicGraph& dag);
  void validate(const DirectedAcyclicGraph& dag) const;
};

/// Per-timestep masks lifted out of a growth schedule.
std::vector<NodeActivityMask> schedule_masks(const GrowthSchedule& schedule);

/// Stem triplet, one ResNode per graph vertex, sigmoid-gated edge weights,
/// and a global-average-pool + linear classifier. Spatial dimensions per
/// node are fixed at build time on the full graph, so running under any
/// activity mask never changes a LIF state shape.
struct CogniSNNModel {
  DirectedAcyclicGraph dag;
  ModelConfig config;

  ConvBNSNTriplet stem;
  std::vector<ResNode> nodes;
  std::vector<Tensor> edge_gate;  // raw scalar per edge, sigmoid applied at use
  Tensor head_weight;
  Tensor head_bias;
  Tensor new_head_weight;  // defined only after add_new_head
  Tensor new_head_bias;

  // static geometry
  int stem_dim = 0;             // spatial dim entering the graph
  std::vector<int> node_depth;  // longest path from an input node
  std::vector<int> node_dim;    // spatial dim at each node (in == out)
  std::vector<int> edge_dim;    // source output dim after edge downsampling
  int readout_dim = 0;          // smallest output-node dim

  bool has_new_head() const { return new_head_weight.defined(); }
  void reset_state();
  void add_new_head(int class_count, std::uint64_t seed);

  /// Trainable tensors in stable order; names key checkpoints and freezes.
  std::vector<std::pair<std::string, Tensor>> parameters() const;
  /// Non-trainable running statistics.
  std::vector<std::pair<std::string, Tensor>> buffers() const;
  std::map<std::string, Tensor> state() const;
  void load_state(const std::map<std::string, Tensor>& entries);
};

CogniSNNModel build_model(const DirectedAcyclicGraph& dag,
                          const ModelConfig& config);

struct ForwardOptions {
  const std::vector<NodeActivityMask>* schedule = nullptr;  // one per timestep
  bool bn_train = false;
  /// Per-node batch-norm mode override; the stem keeps bn_train. Lets frozen
  /// nodes hold their running statistics while grafted ones keep adapting.
  const std::vector<char>* node_bn_train = nullptr;
  bool use_new_head = false;
  std::vector<int>* exec_order = nullptr;  // instrumented evaluation order
  /// Receives the pooled pre-head features: per-frame from forward_timestep,
  /// the time-mean from forward_sequence. Lets a caller feed both classifier
  /// heads from a single pass.
  Tensor* features_out = nullptr;
};

/// Gated weighted sum of the pooled predecessor outputs of `node`:
/// I_j = sum over active incoming edges of sigmoid(w_ij) * pool(O_i).
/// `predecessor_outputs` runs parallel to dag.predecessors[node]; entries for
/// inactive edges may be undefined. Throws NoActiveInputError when nothing
/// feeds the node.
Tensor aggregate_inputs(const CogniSNNModel& model, int node,
                        const std::vector<Tensor>& predecessor_outputs,
                        const NodeActivityMask* mask);

/// One frame through stem, graph (topological order, masked nodes skipped
/// with their LIF state untouched), and classifier head.
Tensor forward_timestep(CogniSNNModel& model, Tensor frame,
                        const NodeActivityMask* mask = nullptr,
                        const ForwardOptions& options = {});

/// Resets state, runs every frame, and returns the mean of the per-timestep
/// logits. A schedule applies its mask at each timestep; gradients flow
/// through the whole sequence.
Tensor forward_sequence(CogniSNNModel& model, const std::vector<Tensor>& frames,
                        const ForwardOptions& options = {});

struct EnergyModel {
  double mac_pj = 4.6;  // multiply-accumulate
  double ac_pj = 0.9;   // accumulate
};

struct ConvOpCount {
  std::int64_t macs = 0;
  std::int64_t acs = 0;
};

/// Synaptic operations a convolution performs on this input, skipping zero
/// taps: a binary input drives pure accumulates, anything else multiplies.
ConvOpCount count_conv_ops(const Tensor& x, int out_channels, int kernel,
                           int stride, int padding);

struct ProfiledOp {
  std::string node;     // registry-style label
  std::string op_type;  // "mac" or "ac"
  std::int64_t count = 0;
};

struct EnergyReport {
  std::int64_t macs = 0;
  std::int64_t acs = 0;
  double energy_pj = 0.0;
  double energy_mj = 0.0;
  std::vector<ProfiledOp> rows;
};

/// Profiling forward over the frames (eval mode, full graph, original head):
/// dense MACs for the stem conv, BN eval affines, and the classifier;
/// spike-count-scaled ACs (or MACs, for real-valued currents) inside the
/// graph; one MAC per nonzero pooled element at each edge gate.
EnergyReport count_ops_and_energy(CogniSNNModel& model,
                                  const std::vector<Tensor>& frames,
                                  const EnergyModel& energy = {});

/// `node,op_type,count` rows in execution order.
std::string profiling_csv(const EnergyReport& report);

}  // namespace cognisnn
