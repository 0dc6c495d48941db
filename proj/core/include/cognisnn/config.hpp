#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cognisnn/data.hpp"
#include "cognisnn/graph.hpp"
#include "cognisnn/model.hpp"
#include "cognisnn/train.hpp"

namespace cognisnn {

/// Shortest decimal text that reparses to the same double. Shared by metrics
/// CSVs and resolved-config echoes so replays compare byte-identical.
std::string format_double(double value);

/// Parsers for `key = value` payloads. Full-consumption: trailing garbage is
/// an error, not a warning. All throw ConfigError naming the offending text.
std::int64_t parse_int(const std::string& text);
std::uint64_t parse_u64(const std::string& text);
double parse_double(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);  // comma-split
std::vector<int> parse_int_list(const std::string& text);
std::vector<std::string> parse_name_list(const std::string& text);

/// Flat run settings resolved in three layers: struct defaults, then a config
/// file of `key = value` lines, then CLI flags. Unknown and duplicate keys are
/// rejected. Every command echoes the fully resolved set next to its outputs,
/// and that echo reparses to an identical RunConfig, so any run can be
/// replayed from its artifacts alone.
struct RunConfig {
  // graph topology
  std::string graph_gen = "er";
  int graph_nodes = 7;
  double graph_er_p = 0.6;
  int graph_ws_k = 4;
  double graph_ws_beta = 0.75;
  std::uint64_t graph_seed = 0;

  // model geometry and init
  int model_channels = 8;
  int model_stem_pool = 1;
  std::uint64_t model_seed = 0;
  double lif_tau = 0.5;
  double lif_threshold = 1.0;

  // synthetic event task (the old task under continual learning)
  std::string data_family = "moving-bar";
  int data_classes = 4;
  int data_timesteps = 8;
  int data_channels = 2;
  int data_height = 16;
  int data_width = 16;
  double data_fg = 1.0;
  double data_bg = 0.0;
  int data_samples_per_class = 100;
  std::uint64_t data_seed = 0;

  // the new task grafted during continual learning; shares the old task's
  // frame geometry because the network's shapes are fixed at build time
  std::string new_family = "rotation";
  int new_classes = 4;
  double new_fg = 1.0;
  double new_bg = 0.0;
  int new_samples_per_class = 100;
  std::uint64_t new_data_seed = 1;

  // optimization
  int train_epochs = 10;
  int train_batch = 8;
  double train_lr = 0.001;
  double train_momentum = 0.9;
  double train_weight_decay = 0.0;
  std::string train_schedule = "cosine";
  int train_t_max = 64;
  int train_step_every = 64;
  double train_step_factor = 0.1;
  std::uint64_t train_seed = 0;
  int train_timesteps = 8;

  // continual learning
  double continual_lambda = 1.0;
  double continual_temperature = 2.0;
  double continual_reg = 0.0001;
  std::string continual_scenario = "similar";
  int continual_k = 1;
  double continual_max_old_drop = -1.0;

  // single-perturbation evaluation
  std::string perturb_kind = "salt-pepper";
  double perturb_rho = 0.0;
  double perturb_lambda0 = 0.01;
  std::uint64_t perturb_seed = 0;

  // sweep axes, comma-separated
  std::string eval_kinds = "salt-pepper,frame-loss";
  std::string eval_rhos = "0,2,4,6,8";
  std::string eval_timesteps = "1,2,4,8";

  // paths; empty graph_file means "generate from the graph keys"
  std::string out_dir = "out";
  std::string graph_file;
  std::string checkpoint_in;

  /// Sets one key from its text form. Throws ConfigError for unknown keys or
  /// unparsable values.
  void set(const std::string& key, const std::string& value);

  /// Every key in sorted order, one `key = value` line each.
  std::string resolved_text() const;

  // Materialized engine configs. Range checking stays with the engine
  // validators, so a bad value fails the same way from every entry point.
  RandomGraphSpec graph_spec() const;
  ModelConfig model_config() const;
  SyntheticTaskSpec task_spec() const;
  SyntheticTaskSpec new_task_spec() const;
  TrainConfig train_config() const;
  ContinualConfig continual_config() const;
  PerturbationSpec perturbation_spec() const;
};

/// Applies `key = value` lines on top of cfg. Blank lines and `#` comments are
/// skipped; a key may appear at most once per text.
void apply_config_text(RunConfig& cfg, const std::string& text);

/// Reads and applies a config file. A missing file is a ConfigError.
void apply_config_file(RunConfig& cfg, const std::string& path);

void save_run_config(const std::string& path, const RunConfig& cfg);

}  // namespace cognisnn
