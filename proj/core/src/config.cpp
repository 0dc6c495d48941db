#include "cognisnn/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "cognisnn/errors.hpp"
#include "cognisnn/pathway.hpp"

namespace cognisnn {

std::string format_double(double value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::int64_t parse_int(const std::string& text) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("expected an integer, got '" + text + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("expected an unsigned integer, got '" + text + "'");
  return v;
}

double parse_double(const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("expected a number, got '" + text + "'");
  return v;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = text.find(',', start);
    std::string piece = trim(text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start));
    if (piece.empty())
      throw ConfigError("empty entry in list '" + text + "'");
    out.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& piece : parse_name_list(text))
    out.push_back(parse_double(piece));
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const std::string& piece : parse_name_list(text)) {
    std::int64_t v = parse_int(piece);
    if (v < std::numeric_limits<int>::min() ||
        v > std::numeric_limits<int>::max())
      throw ConfigError("integer out of range: '" + piece + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

namespace {

struct KeyOps {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

KeyOps bind_field(int RunConfig::*field) {
  return {[field](RunConfig& c, const std::string& v) {
            std::int64_t parsed = parse_int(v);
            if (parsed < std::numeric_limits<int>::min() ||
                parsed > std::numeric_limits<int>::max())
              throw ConfigError("integer out of range: '" + v + "'");
            c.*field = static_cast<int>(parsed);
          },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

KeyOps bind_field(double RunConfig::*field) {
  return {[field](RunConfig& c, const std::string& v) {
            c.*field = parse_double(v);
          },
          [field](const RunConfig& c) { return format_double(c.*field); }};
}

KeyOps bind_field(std::uint64_t RunConfig::*field) {
  return {
      [field](RunConfig& c, const std::string& v) { c.*field = parse_u64(v); },
      [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

KeyOps bind_field(std::string RunConfig::*field) {
  return {[field](RunConfig& c, const std::string& v) { c.*field = v; },
          [field](const RunConfig& c) { return c.*field; }};
}

// Sorted by key; resolved_text() emits in table order.
const std::vector<std::pair<std::string, KeyOps>>& key_table() {
  static const std::vector<std::pair<std::string, KeyOps>> table = {
      {"checkpoint_in", bind_field(&RunConfig::checkpoint_in)},
      {"continual_k", bind_field(&RunConfig::continual_k)},
      {"continual_lambda", bind_field(&RunConfig::continual_lambda)},
      {"continual_max_old_drop", bind_field(&RunConfig::continual_max_old_drop)},
      {"continual_reg", bind_field(&RunConfig::continual_reg)},
      {"continual_scenario", bind_field(&RunConfig::continual_scenario)},
      {"continual_temperature", bind_field(&RunConfig::continual_temperature)},
      {"data_bg", bind_field(&RunConfig::data_bg)},
      {"data_channels", bind_field(&RunConfig::data_channels)},
      {"data_classes", bind_field(&RunConfig::data_classes)},
      {"data_family", bind_field(&RunConfig::data_family)},
      {"data_fg", bind_field(&RunConfig::data_fg)},
      {"data_height", bind_field(&RunConfig::data_height)},
      {"data_samples_per_class", bind_field(&RunConfig::data_samples_per_class)},
      {"data_seed", bind_field(&RunConfig::data_seed)},
      {"data_timesteps", bind_field(&RunConfig::data_timesteps)},
      {"data_width", bind_field(&RunConfig::data_width)},
      {"eval_kinds", bind_field(&RunConfig::eval_kinds)},
      {"eval_rhos", bind_field(&RunConfig::eval_rhos)},
      {"eval_timesteps", bind_field(&RunConfig::eval_timesteps)},
      {"graph_er_p", bind_field(&RunConfig::graph_er_p)},
      {"graph_file", bind_field(&RunConfig::graph_file)},
      {"graph_gen", bind_field(&RunConfig::graph_gen)},
      {"graph_nodes", bind_field(&RunConfig::graph_nodes)},
      {"graph_seed", bind_field(&RunConfig::graph_seed)},
      {"graph_ws_beta", bind_field(&RunConfig::graph_ws_beta)},
      {"graph_ws_k", bind_field(&RunConfig::graph_ws_k)},
      {"lif_tau", bind_field(&RunConfig::lif_tau)},
      {"lif_threshold", bind_field(&RunConfig::lif_threshold)},
      {"model_channels", bind_field(&RunConfig::model_channels)},
      {"model_seed", bind_field(&RunConfig::model_seed)},
      {"model_stem_pool", bind_field(&RunConfig::model_stem_pool)},
      {"new_bg", bind_field(&RunConfig::new_bg)},
      {"new_classes", bind_field(&RunConfig::new_classes)},
      {"new_data_seed", bind_field(&RunConfig::new_data_seed)},
      {"new_family", bind_field(&RunConfig::new_family)},
      {"new_fg", bind_field(&RunConfig::new_fg)},
      {"new_samples_per_class", bind_field(&RunConfig::new_samples_per_class)},
      {"out_dir", bind_field(&RunConfig::out_dir)},
      {"perturb_kind", bind_field(&RunConfig::perturb_kind)},
      {"perturb_lambda0", bind_field(&RunConfig::perturb_lambda0)},
      {"perturb_rho", bind_field(&RunConfig::perturb_rho)},
      {"perturb_seed", bind_field(&RunConfig::perturb_seed)},
      {"train_batch", bind_field(&RunConfig::train_batch)},
      {"train_epochs", bind_field(&RunConfig::train_epochs)},
      {"train_lr", bind_field(&RunConfig::train_lr)},
      {"train_momentum", bind_field(&RunConfig::train_momentum)},
      {"train_schedule", bind_field(&RunConfig::train_schedule)},
      {"train_seed", bind_field(&RunConfig::train_seed)},
      {"train_step_every", bind_field(&RunConfig::train_step_every)},
      {"train_step_factor", bind_field(&RunConfig::train_step_factor)},
      {"train_t_max", bind_field(&RunConfig::train_t_max)},
      {"train_timesteps", bind_field(&RunConfig::train_timesteps)},
      {"train_weight_decay", bind_field(&RunConfig::train_weight_decay)},
  };
  return table;
}

const KeyOps* find_key(const std::string& key) {
  for (const auto& kv : key_table())
    if (kv.first == key) return &kv.second;
  return nullptr;
}

LrSchedule::Kind schedule_kind_from_name(const std::string& name) {
  if (name == "cosine") return LrSchedule::Kind::Cosine;
  if (name == "step") return LrSchedule::Kind::Step;
  throw ConfigError("unknown schedule '" + name + "', expected cosine or step");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeyOps* ops = find_key(key);
  if (!ops) throw ConfigError("unknown config key '" + key + "'");
  try {
    ops->set(*this, value);
  } catch (const ConfigError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& kv : key_table()) {
    out += kv.first;
    out += " = ";
    out += kv.second.get(*this);
    out += '\n';
  }
  return out;
}

RandomGraphSpec RunConfig::graph_spec() const {
  RandomGraphSpec spec;
  spec.generator = generator_from_name(graph_gen);
  spec.node_count = graph_nodes;
  spec.ws_neighbors = graph_ws_k;
  spec.ws_rewire_prob = graph_ws_beta;
  spec.er_edge_prob = graph_er_p;
  spec.seed = graph_seed;
  return spec;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig cfg;
  cfg.in_channels = data_channels;
  cfg.channels = model_channels;
  cfg.class_count = data_classes;
  cfg.height = data_height;
  cfg.width = data_width;
  cfg.stem_pool = model_stem_pool;
  cfg.lif.tau = lif_tau;
  cfg.lif.u_th = lif_threshold;
  cfg.init_seed = model_seed;
  return cfg;
}

SyntheticTaskSpec RunConfig::task_spec() const {
  SyntheticTaskSpec spec;
  spec.class_count = data_classes;
  spec.timesteps = data_timesteps;
  spec.channels = data_channels;
  spec.height = data_height;
  spec.width = data_width;
  spec.family = pattern_from_name(data_family);
  spec.spike_prob_fg = data_fg;
  spec.spike_prob_bg = data_bg;
  spec.samples_per_class = data_samples_per_class;
  spec.seed = data_seed;
  return spec;
}

SyntheticTaskSpec RunConfig::new_task_spec() const {
  SyntheticTaskSpec spec = task_spec();
  spec.class_count = new_classes;
  spec.family = pattern_from_name(new_family);
  spec.spike_prob_fg = new_fg;
  spec.spike_prob_bg = new_bg;
  spec.samples_per_class = new_samples_per_class;
  spec.seed = new_data_seed;
  return spec;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.epochs = train_epochs;
  cfg.batch_size = train_batch;
  cfg.lr = train_lr;
  cfg.momentum = train_momentum;
  cfg.weight_decay = train_weight_decay;
  cfg.schedule.kind = schedule_kind_from_name(train_schedule);
  cfg.schedule.t_max = train_t_max;
  cfg.schedule.step_every = train_step_every;
  cfg.schedule.step_factor = train_step_factor;
  cfg.seed = train_seed;
  cfg.timesteps = train_timesteps;
  return cfg;
}

ContinualConfig RunConfig::continual_config() const {
  ContinualConfig cfg;
  cfg.lambda = continual_lambda;
  cfg.distill_temperature = continual_temperature;
  cfg.reg_coeff = continual_reg;
  cfg.scenario = scenario_from_name(continual_scenario);
  cfg.k = continual_k;
  cfg.max_old_drop = continual_max_old_drop;
  cfg.train = train_config();
  return cfg;
}

PerturbationSpec RunConfig::perturbation_spec() const {
  PerturbationSpec spec;
  spec.kind = perturbation_from_name(perturb_kind);
  spec.rho = perturb_rho;
  spec.lambda0 = perturb_lambda0;
  spec.seed = perturb_seed;
  return spec;
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        " is not 'key = value': '" + stripped + "'");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no) + " has no key");
    if (!seen.insert(key).second)
      throw ConfigError("duplicate config key '" + key + "'");
    cfg.set(key, value);
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    apply_config_text(cfg, buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataEmptyError("cannot open '" + path + "' for writing");
  out << cfg.resolved_text();
  if (!out) throw DataEmptyError("failed writing config '" + path + "'");
}

}  // namespace cognisnn
