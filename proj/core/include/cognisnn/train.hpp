#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cognisnn/data.hpp"
#include "cognisnn/model.hpp"
#include "cognisnn/pathway.hpp"

namespace cognisnn {

struct LrSchedule {
  enum class Kind { Cosine, Step };
  Kind kind = Kind::Cosine;
  int t_max = 64;       // cosine annealing period
  int step_every = 64;  // epochs between step decays
  double step_factor = 0.1;

  void validate() const;
};

/// Cosine: base*(1 + cos(pi*epoch/t_max))/2. Step: base*factor^(epoch/every).
double lr_at(const LrSchedule& schedule, double base_lr, int epoch);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 8;
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0;
  LrSchedule schedule;
  std::uint64_t seed = 0;
  int timesteps = 8;  // frames fed per sample; samples must hold at least this

  void validate() const;
};

/// Per-parameter trainable flags keyed by the model's parameter names.
/// Covers every registered parameter exactly once.
struct FreezeMask {
  std::map<std::string, char> trainable;

  static FreezeMask all_trainable(const CogniSNNModel& model);
  /// Trainable set for continual learning: parameters of nodes on selected
  /// pathways, edge weights whose both endpoints are selected, and the new
  /// classifier head. Stem, old head, and everything else stay frozen.
  static FreezeMask for_continual(const CogniSNNModel& model,
                                  const KeyPathwaySelection& selection);

  bool is_trainable(const std::string& name) const;
  void validate(const CogniSNNModel& model) const;
};

/// Momentum buffers keyed by parameter name, created lazily as zeros.
struct SgdState {
  std::map<std::string, Tensor> velocity;
};

/// v <- momentum*v + grad (+ weight_decay*param); param <- param - lr*v.
/// Parameters marked frozen are untouched, velocity included.
void sgd_momentum_step(
    const std::vector<std::pair<std::string, Tensor>>& params, SgdState& state,
    double lr, double momentum, double weight_decay,
    const FreezeMask* freeze = nullptr);

struct MetricsRow {
  int epoch = 0;
  std::string split;  // train | test
  std::string task;   // single | old | new
  double loss = 0.0;
  double accuracy = 0.0;
};

/// `epoch,split,task,loss,accuracy` with shortest round-trip doubles.
std::string metrics_csv(const std::vector<MetricsRow>& rows);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Eval-mode pass: per-sample state resets, argmax of time-mean logits.
/// `timesteps` may truncate the stored sequences (reduced inference horizon);
/// a perturbation, when given, transforms the inputs first. `stage_masks`,
/// when given, runs timestep t on its t-th mask (growth-staged deployment of
/// a dynamically trained model); it must hold at least `timesteps` entries.
EvalResult evaluate(CogniSNNModel& model, const EventTensorDataset& dataset,
                    int timesteps,
                    const PerturbationSpec* perturbation = nullptr,
                    bool use_new_head = false,
                    const std::vector<NodeActivityMask>* stage_masks = nullptr);

/// Full-graph BPTT: per epoch shuffle, batch, forward the sequence, mean-logit
/// cross-entropy, SGD step. Emits train and test rows per epoch.
std::vector<MetricsRow> train_standard(CogniSNNModel& model,
                                       const SyntheticDataset& data,
                                       const TrainConfig& cfg);

/// Same loop, but timestep t runs the growth-schedule subgraph mask(t) built
/// from the ranking; evaluation afterwards uses the full graph.
std::vector<MetricsRow> train_dgl(CogniSNNModel& model,
                                  const SyntheticDataset& data,
                                  const TrainConfig& cfg,
                                  const PathwayRanking& ranking);

struct ContinualConfig {
  double lambda = 1.0;              // weight of the distillation term
  double distill_temperature = 2.0;
  double reg_coeff = 1e-4;          // pull toward pre-continual weights
  Scenario scenario = Scenario::Similar;
  int k = 1;
  /// Early stop once old-task test accuracy drops more than this below the
  /// old model's baseline; negative disables.
  double max_old_drop = -1.0;
  TrainConfig train;

  void validate() const;
};

struct ContinualResult {
  CogniSNNModel model;
  std::vector<MetricsRow> history;
  double baseline_old_accuracy = 0.0;
};

/// Learning-without-forgetting on the selected pathways: clones the old
/// model, grafts a new head, freezes everything outside the selection + new
/// head, and trains on the new task with loss
///   lambda * distill(old-head outputs vs the old model's)
///   + cross-entropy(new head) + reg_coeff * ||trainable - pre||^2.
/// Per epoch reports new-task train/test rows and an old-task test row.
ContinualResult kp_lwf(CogniSNNModel& old_model,
                       const SyntheticDataset& old_data,
                       const SyntheticDataset& new_data,
                       const ContinualConfig& cfg,
                       const KeyPathwaySelection& selection);

}  // namespace cognisnn
