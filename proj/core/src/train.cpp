#include "cognisnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "cognisnn/config.hpp"
#include "cognisnn/errors.hpp"
#include "cognisnn/ops.hpp"
#include "cognisnn/rng.hpp"

namespace cognisnn {

namespace {

constexpr double kPi = 3.141592653589793;
constexpr int kEvalBatch = 32;

int argmax_row(const std::vector<double>& v, std::int64_t offset, int width) {
  int best = 0;
  for (int i = 1; i < width; ++i)
    if (v[offset + i] > v[offset + best]) best = i;
  return best;
}

/// Collates the batch and truncates it to the requested horizon.
std::vector<Tensor> batch_frames(const EventTensorDataset& dataset,
                                 const std::vector<int>& indices,
                                 int timesteps) {
  std::vector<Tensor> frames = collate_frames(dataset, indices);
  if (static_cast<int>(frames.size()) < timesteps)
    throw ConfigError("samples hold " + std::to_string(frames.size()) +
                      " frames but " + std::to_string(timesteps) +
                      " timesteps were requested");
  frames.resize(static_cast<std::size_t>(timesteps));
  return frames;
}

void require_labels_fit(const EventTensorDataset& dataset,
                        const CogniSNNModel& model) {
  if (dataset.class_count > model.config.class_count)
    throw ConfigError("dataset holds " + std::to_string(dataset.class_count) +
                      " classes but the classifier has " +
                      std::to_string(model.config.class_count) + " outputs");
}

std::vector<MetricsRow> run_training(
    CogniSNNModel& model, const SyntheticDataset& data, const TrainConfig& cfg,
    const std::vector<NodeActivityMask>* masks) {
  cfg.validate();
  data.train.validate();
  require_labels_fit(data.train, model);
  if (!data.test.samples.empty()) data.test.validate();

  const int n = data.train.size();
  const int classes = model.config.class_count;
  std::vector<std::pair<std::string, Tensor>> params = model.parameters();
  SgdState opt;
  std::vector<MetricsRow> rows;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(cfg.schedule, cfg.lr, epoch);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    int correct = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      std::vector<int> idx(
          order.begin() + start,
          order.begin() + std::min(n, start + cfg.batch_size));
      std::vector<Tensor> frames =
          batch_frames(data.train, idx, cfg.timesteps);
      std::vector<int> labels = collate_labels(data.train, idx);

      Tape tape;
      Tensor logits;
      Tensor loss;
      {
        Tape::Scope scope(tape);
        ForwardOptions fwd;
        fwd.bn_train = true;
        fwd.schedule = masks;
        logits = forward_sequence(model, frames, fwd);
        loss = softmax_cross_entropy(logits, labels);
      }
      backward(loss, tape);
      sgd_momentum_step(params, opt, lr, cfg.momentum, cfg.weight_decay);
      for (auto& kv : params) kv.second.zero_grad();

      loss_sum += loss.item() * static_cast<double>(idx.size());
      const std::vector<double>& lv = logits.values();
      for (std::size_t r = 0; r < idx.size(); ++r)
        if (argmax_row(lv, static_cast<std::int64_t>(r) * classes, classes) ==
            labels[r])
          ++correct;
    }
    rows.push_back({epoch, "train", "single", loss_sum / n,
                    static_cast<double>(correct) / n});
    if (!data.test.samples.empty()) {
      EvalResult ev = evaluate(model, data.test, cfg.timesteps);
      rows.push_back({epoch, "test", "single", ev.loss, ev.accuracy});
    }
  }
  return rows;
}

}  // namespace

void LrSchedule::validate() const {
  if (t_max < 1)
    throw ConfigError("cosine period must be >= 1, got " +
                      std::to_string(t_max));
  if (step_every < 1)
    throw ConfigError("step interval must be >= 1, got " +
                      std::to_string(step_every));
  if (!(step_factor > 0.0))
    throw ConfigError("step factor must be positive");
}

double lr_at(const LrSchedule& schedule, double base_lr, int epoch) {
  switch (schedule.kind) {
    case LrSchedule::Kind::Cosine:
      return base_lr *
             (1.0 + std::cos(kPi * epoch / schedule.t_max)) / 2.0;
    case LrSchedule::Kind::Step:
      return base_lr *
             std::pow(schedule.step_factor, epoch / schedule.step_every);
  }
  return base_lr;
}

void TrainConfig::validate() const {
  if (epochs < 1)
    throw ConfigError("epochs must be >= 1, got " + std::to_string(epochs));
  if (batch_size < 1)
    throw ConfigError("batch_size must be >= 1, got " +
                      std::to_string(batch_size));
  // lr 0 is allowed: a frozen run is the cheapest reproducibility probe.
  if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(momentum >= 0.0) || momentum >= 1.0)
    throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (timesteps < 1)
    throw ConfigError("timesteps must be >= 1, got " +
                      std::to_string(timesteps));
  schedule.validate();
}

FreezeMask FreezeMask::all_trainable(const CogniSNNModel& model) {
  FreezeMask mask;
  for (const auto& kv : model.parameters()) mask.trainable[kv.first] = 1;
  return mask;
}

FreezeMask FreezeMask::for_continual(const CogniSNNModel& model,
                                     const KeyPathwaySelection& selection) {
  if (static_cast<int>(selection.node_trainable.size()) !=
      model.dag.node_count)
    throw MismatchedGraphError(
        "selection covers " + std::to_string(selection.node_trainable.size()) +
        " nodes but the graph has " + std::to_string(model.dag.node_count));
  if (selection.selected.empty())
    throw EmptySelectionError("key-pathway selection is empty");
  if (!model.has_new_head())
    throw HeadMismatchError("continual freeze expects the grafted head");

  FreezeMask mask;
  for (const auto& [name, tensor] : model.parameters()) {
    (void)tensor;
    bool trainable = false;
    if (name.rfind("head_new.", 0) == 0) {
      trainable = true;
    } else if (name.rfind("node", 0) == 0) {
      int j = std::atoi(name.c_str() + 4);
      trainable = selection.node_trainable[static_cast<std::size_t>(j)] != 0;
    } else if (name.rfind("edge.", 0) == 0) {
      // edge.{u}-{v}.weight trains only when both endpoints are selected
      std::size_t dash = name.find('-', 5);
      int u = std::atoi(name.substr(5, dash - 5).c_str());
      int v = std::atoi(name.c_str() + dash + 1);
      trainable = selection.node_trainable[static_cast<std::size_t>(u)] &&
                  selection.node_trainable[static_cast<std::size_t>(v)];
    }
    mask.trainable[name] = trainable ? 1 : 0;
  }
  return mask;
}

bool FreezeMask::is_trainable(const std::string& name) const {
  auto it = trainable.find(name);
  if (it == trainable.end())
    throw MismatchedGraphError("freeze mask does not cover parameter '" +
                               name + "'");
  return it->second != 0;
}

void FreezeMask::validate(const CogniSNNModel& model) const {
  std::vector<std::pair<std::string, Tensor>> params = model.parameters();
  for (const auto& kv : params)
    if (!trainable.count(kv.first))
      throw MismatchedGraphError("freeze mask does not cover parameter '" +
                                 kv.first + "'");
  if (trainable.size() != params.size())
    throw MismatchedGraphError(
        "freeze mask holds " + std::to_string(trainable.size()) +
        " entries for " + std::to_string(params.size()) + " parameters");
}

void sgd_momentum_step(
    const std::vector<std::pair<std::string, Tensor>>& params, SgdState& state,
    double lr, double momentum, double weight_decay,
    const FreezeMask* freeze) {
  for (const auto& [name, param] : params) {
    if (freeze && !freeze->is_trainable(name)) continue;
    Tensor p = param;  // shared storage, mutated in place
    auto it = state.velocity.find(name);
    if (it == state.velocity.end())
      it = state.velocity.emplace(name, Tensor::zeros(p.shape())).first;
    Tensor v = it->second;
    if (!v.same_shape(p))
      throw ShapeMismatchError("velocity shape differs from parameter '" +
                               name + "'");
    std::vector<double>& pv = p.values();
    const std::vector<double>& g = p.grad();
    std::vector<double>& vv = v.values();
    for (std::int64_t i = 0; i < p.size(); ++i) {
      double gi = g[i] + weight_decay * pv[i];
      vv[i] = momentum * vv[i] + gi;
      pv[i] -= lr * vv[i];
    }
  }
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "epoch,split,task,loss,accuracy\n";
  for (const MetricsRow& r : rows) {
    out += std::to_string(r.epoch);
    out += ',';
    out += r.split;
    out += ',';
    out += r.task;
    out += ',';
    out += format_double(r.loss);
    out += ',';
    out += format_double(r.accuracy);
    out += '\n';
  }
  return out;
}

EvalResult evaluate(CogniSNNModel& model, const EventTensorDataset& dataset,
                    int timesteps, const PerturbationSpec* perturbation,
                    bool use_new_head,
                    const std::vector<NodeActivityMask>* stage_masks) {
  if (dataset.samples.empty()) throw DataEmptyError("evaluate: empty dataset");
  if (timesteps < 1)
    throw ConfigError("timesteps must be >= 1, got " +
                      std::to_string(timesteps));
  std::vector<NodeActivityMask> stages;
  if (stage_masks) {
    if (static_cast<int>(stage_masks->size()) < timesteps)
      throw ConfigError("stage masks cover " +
                        std::to_string(stage_masks->size()) +
                        " timesteps, need " + std::to_string(timesteps));
    stages.assign(stage_masks->begin(), stage_masks->begin() + timesteps);
  }
  const EventTensorDataset* ds = &dataset;
  EventTensorDataset perturbed;
  if (perturbation) {
    perturbed = perturb_dataset(dataset, *perturbation);
    ds = &perturbed;
  }

  const int n = ds->size();
  const int classes =
      use_new_head ? model.new_head_weight.dim(0) : model.config.class_count;
  double loss_sum = 0.0;
  int correct = 0;
  for (int start = 0; start < n; start += kEvalBatch) {
    std::vector<int> idx(static_cast<std::size_t>(
        std::min(n, start + kEvalBatch) - start));
    std::iota(idx.begin(), idx.end(), start);
    std::vector<Tensor> frames = batch_frames(*ds, idx, timesteps);
    std::vector<int> labels = collate_labels(*ds, idx);

    ForwardOptions fwd;
    fwd.use_new_head = use_new_head;
    if (stage_masks) fwd.schedule = &stages;
    Tensor logits = forward_sequence(model, frames, fwd);
    Tensor loss = softmax_cross_entropy(logits, labels);
    loss_sum += loss.item() * static_cast<double>(idx.size());
    const std::vector<double>& lv = logits.values();
    for (std::size_t r = 0; r < idx.size(); ++r)
      if (argmax_row(lv, static_cast<std::int64_t>(r) * classes, classes) ==
          labels[r])
        ++correct;
  }
  return {loss_sum / n, static_cast<double>(correct) / n};
}

std::vector<MetricsRow> train_standard(CogniSNNModel& model,
                                       const SyntheticDataset& data,
                                       const TrainConfig& cfg) {
  return run_training(model, data, cfg, nullptr);
}

std::vector<MetricsRow> train_dgl(CogniSNNModel& model,
                                  const SyntheticDataset& data,
                                  const TrainConfig& cfg,
                                  const PathwayRanking& ranking) {
  cfg.validate();
  GrowthSchedule schedule =
      build_growth_schedule(model.dag, ranking, cfg.timesteps);
  std::vector<NodeActivityMask> masks = schedule_masks(schedule);
  return run_training(model, data, cfg, &masks);
}

void ContinualConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(distill_temperature > 0.0))
    throw ConfigError("distillation temperature must be positive");
  if (!(reg_coeff >= 0.0)) throw ConfigError("reg_coeff must be >= 0");
  if (k < 1) throw ConfigError("K must be >= 1, got " + std::to_string(k));
  train.validate();
}

ContinualResult kp_lwf(CogniSNNModel& old_model,
                       const SyntheticDataset& old_data,
                       const SyntheticDataset& new_data,
                       const ContinualConfig& cfg,
                       const KeyPathwaySelection& selection) {
  cfg.validate();
  if (old_model.has_new_head())
    throw HeadMismatchError("old model already carries a grafted head");
  if (selection.selected.empty())
    throw EmptySelectionError("key-pathway selection is empty");
  new_data.train.validate();
  if (!new_data.test.samples.empty()) new_data.test.validate();
  old_data.test.validate();  // forgetting metrics need the old test split
  require_labels_fit(old_data.test, old_model);

  const int T = cfg.train.timesteps;
  const int new_classes = new_data.train.class_count;

  ContinualResult result{build_model(old_model.dag, old_model.config),
                         {},
                         0.0};
  CogniSNNModel& model = result.model;
  model.load_state(old_model.state());
  model.add_new_head(new_classes, mix_seed(cfg.train.seed, 0x68656164));

  FreezeMask freeze = FreezeMask::for_continual(model, selection);
  freeze.validate(model);
  std::vector<std::pair<std::string, Tensor>> params = model.parameters();

  // Anchors hold the pre-continual values the regularizer pulls toward.
  std::map<std::string, Tensor> anchors;
  for (const auto& [name, p] : params)
    if (freeze.is_trainable(name))
      anchors.emplace(name, Tensor::from(p.shape(), p.values()));

  std::vector<char> node_bn(model.nodes.size());
  for (std::size_t j = 0; j < node_bn.size(); ++j)
    node_bn[j] = selection.node_trainable[j];

  result.baseline_old_accuracy =
      evaluate(old_model, old_data.test, T).accuracy;

  // The old model is fixed, so its softened targets on the new task's
  // training inputs are computed once up front.
  const int n = new_data.train.size();
  std::vector<std::vector<double>> old_targets(static_cast<std::size_t>(n));
  for (int start = 0; start < n; start += kEvalBatch) {
    std::vector<int> idx(static_cast<std::size_t>(
        std::min(n, start + kEvalBatch) - start));
    std::iota(idx.begin(), idx.end(), start);
    std::vector<Tensor> frames = batch_frames(new_data.train, idx, T);
    Tensor y_old = forward_sequence(old_model, frames, {});
    std::vector<std::vector<double>> soft =
        softmax_rows(y_old, cfg.distill_temperature);
    for (std::size_t r = 0; r < idx.size(); ++r)
      old_targets[static_cast<std::size_t>(idx[r])] = std::move(soft[r]);
  }

  SgdState opt;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    const double lr = lr_at(cfg.train.schedule, cfg.train.lr, epoch);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(cfg.train.seed, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double new_loss_sum = 0.0, old_loss_sum = 0.0;
    int new_correct = 0, old_agree = 0;
    for (int start = 0; start < n; start += cfg.train.batch_size) {
      std::vector<int> idx(
          order.begin() + start,
          order.begin() + std::min(n, start + cfg.train.batch_size));
      std::vector<Tensor> frames = batch_frames(new_data.train, idx, T);
      std::vector<int> labels = collate_labels(new_data.train, idx);
      std::vector<std::vector<double>> targets;
      targets.reserve(idx.size());
      for (int i : idx) targets.push_back(old_targets[static_cast<std::size_t>(i)]);

      Tape tape;
      Tensor old_logits, new_logits, total;
      double batch_old_loss = 0.0, batch_new_loss = 0.0;
      {
        Tape::Scope scope(tape);
        Tensor features;
        ForwardOptions fwd;
        fwd.node_bn_train = &node_bn;  // frozen nodes keep their statistics
        fwd.features_out = &features;
        old_logits = forward_sequence(model, frames, fwd);
        new_logits =
            linear(features, model.new_head_weight, model.new_head_bias);
        Tensor l_old =
            soft_cross_entropy(old_logits, targets, cfg.distill_temperature);
        Tensor l_new = softmax_cross_entropy(new_logits, labels);
        total = add(scale(l_old, cfg.lambda), l_new);
        if (cfg.reg_coeff > 0.0) {
          Tensor reg;
          for (const auto& [name, p] : params) {
            if (!freeze.is_trainable(name)) continue;
            Tensor d = sub(p, anchors.at(name));
            Tensor sq = sum(mul(d, d));
            reg = reg.defined() ? add(reg, sq) : sq;
          }
          total = add(total, scale(reg, cfg.reg_coeff));
        }
        batch_old_loss = l_old.item();
        batch_new_loss = l_new.item();
      }
      backward(total, tape);
      sgd_momentum_step(params, opt, lr, cfg.train.momentum,
                        cfg.train.weight_decay, &freeze);
      for (auto& kv : params) kv.second.zero_grad();

      old_loss_sum += batch_old_loss * static_cast<double>(idx.size());
      new_loss_sum += batch_new_loss * static_cast<double>(idx.size());
      const std::vector<double>& nv = new_logits.values();
      const std::vector<double>& ov = old_logits.values();
      const int old_classes = old_model.config.class_count;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        if (argmax_row(nv, static_cast<std::int64_t>(r) * new_classes,
                       new_classes) == labels[r])
          ++new_correct;
        int target_best = argmax_row(targets[r], 0, old_classes);
        if (argmax_row(ov, static_cast<std::int64_t>(r) * old_classes,
                       old_classes) == target_best)
          ++old_agree;
      }
    }

    result.history.push_back({epoch, "train", "new", new_loss_sum / n,
                              static_cast<double>(new_correct) / n});
    result.history.push_back({epoch, "train", "old", old_loss_sum / n,
                              static_cast<double>(old_agree) / n});
    if (!new_data.test.samples.empty()) {
      EvalResult ev = evaluate(model, new_data.test, T, nullptr, true);
      result.history.push_back({epoch, "test", "new", ev.loss, ev.accuracy});
    }
    EvalResult ev_old = evaluate(model, old_data.test, T);
    result.history.push_back(
        {epoch, "test", "old", ev_old.loss, ev_old.accuracy});
    if (cfg.max_old_drop >= 0.0 &&
        result.baseline_old_accuracy - ev_old.accuracy > cfg.max_old_drop)
      break;  // comparable-forgetting stop
  }
  return result;
}

}  // namespace cognisnn
