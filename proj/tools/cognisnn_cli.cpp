// Command-line front end: wires RunConfig to the engine and leaves every run
// replayable from its artifacts (resolved.cfg + seeds => identical outputs).
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "cognisnn/checkpoint.hpp"
#include "cognisnn/config.hpp"
#include "cognisnn/data.hpp"
#include "cognisnn/errors.hpp"
#include "cognisnn/graph.hpp"
#include "cognisnn/model.hpp"
#include "cognisnn/pathway.hpp"
#include "cognisnn/train.hpp"

namespace {

using namespace cognisnn;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataEmptyError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw DataEmptyError("failed writing '" + path + "'");
}

std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + cfg.out_dir + "'");
  return dir;
}

DirectedAcyclicGraph resolve_graph(const RunConfig& cfg) {
  if (!cfg.graph_file.empty()) return load_graph(cfg.graph_file);
  return generate_graph(cfg.graph_spec());
}

CogniSNNModel restore_model(const RunConfig& cfg,
                            const DirectedAcyclicGraph& dag) {
  if (cfg.checkpoint_in.empty())
    throw ConfigError("this command needs --from with a trained checkpoint");
  CogniSNNModel model = build_model(dag, cfg.model_config());
  model.load_state(load_checkpoint(cfg.checkpoint_in));
  return model;
}

std::string joined_nodes(const Pathway& p) {
  std::string out;
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(p.nodes[i]);
  }
  return out;
}

/// `rank,bc,length,nodes` rows; ranks refer to positions in the full ranking.
std::string pathway_csv(const PathwayRanking& ranking,
                        const std::vector<RankedPathway>& rows) {
  std::string out = "rank,bc,length,nodes\n";
  for (const RankedPathway& rp : rows) {
    int rank = 0;
    for (int i = 0; i < ranking.total(); ++i)
      if (ranking.pathways[i].pathway.nodes == rp.pathway.nodes) {
        rank = i + 1;
        break;
      }
    out += std::to_string(rank);
    out += ',';
    out += format_double(rp.bc);
    out += ',';
    out += std::to_string(rp.pathway.length());
    out += ',';
    out += joined_nodes(rp.pathway);
    out += '\n';
  }
  return out;
}

void print_final_metrics(const std::vector<MetricsRow>& history) {
  const MetricsRow* last_test = nullptr;
  const MetricsRow* last_train = nullptr;
  for (const MetricsRow& row : history) {
    if (row.split == "test") last_test = &row;
    if (row.split == "train") last_train = &row;
  }
  if (last_train)
    std::cout << "final train accuracy " << format_double(last_train->accuracy)
              << " loss " << format_double(last_train->loss) << "\n";
  if (last_test)
    std::cout << "final test accuracy " << format_double(last_test->accuracy)
              << " loss " << format_double(last_test->loss) << "\n";
}

void cmd_generate_graph(const RunConfig& cfg) {
  DirectedAcyclicGraph dag = generate_graph(cfg.graph_spec());
  auto dir = prepare_out_dir(cfg);
  save_graph((dir / "graph.rga").string(), dag);
  write_text((dir / "graph.dot").string(), graph_to_dot(dag));
  save_run_config((dir / "resolved.cfg").string(), cfg);
  std::cout << "graph: " << dag.node_count << " nodes, " << dag.edge_count()
            << " edges, " << dag.input_nodes.size() << " inputs, "
            << dag.output_nodes.size() << " outputs\n"
            << "wrote " << (dir / "graph.rga").string() << "\n";
}

void cmd_analyze_pathways(const RunConfig& cfg) {
  DirectedAcyclicGraph dag = resolve_graph(cfg);
  PathwayRanking ranking = rank_pathways(dag);
  KeyPathwaySelection sel = select_key_pathways(
      dag, ranking, cfg.continual_k, scenario_from_name(cfg.continual_scenario));
  auto dir = prepare_out_dir(cfg);
  write_text((dir / "pathways.csv").string(),
             pathway_csv(ranking, ranking.pathways));
  write_text((dir / "selection.csv").string(), pathway_csv(ranking, sel.selected));
  save_run_config((dir / "resolved.cfg").string(), cfg);

  std::cout << "pathways: " << ranking.total() << "\n";
  for (const RankedPathway& rp : sel.selected)
    std::cout << "selected bc=" << format_double(rp.bc) << " nodes "
              << joined_nodes(rp.pathway) << "\n";
  std::string nodes, edges;
  for (int j = 0; j < dag.node_count; ++j)
    if (sel.node_trainable[j]) {
      if (!nodes.empty()) nodes += ',';
      nodes += std::to_string(j);
    }
  for (int e = 0; e < dag.edge_count(); ++e)
    if (sel.edge_trainable[e]) {
      if (!edges.empty()) edges += ',';
      edges += std::to_string(dag.edges[e].first) + "-" +
               std::to_string(dag.edges[e].second);
    }
  std::cout << "trainable nodes: " << nodes << "\n"
            << "trainable edges: " << edges << "\n";
}

void run_training(const RunConfig& cfg, bool dynamic_growth) {
  DirectedAcyclicGraph dag = resolve_graph(cfg);
  CogniSNNModel model = build_model(dag, cfg.model_config());
  SyntheticDataset data = generate_synthetic(cfg.task_spec());
  std::vector<MetricsRow> history;
  if (dynamic_growth) {
    PathwayRanking ranking = rank_pathways(dag);
    history = train_dgl(model, data, cfg.train_config(), ranking);
  } else {
    history = train_standard(model, data, cfg.train_config());
  }
  auto dir = prepare_out_dir(cfg);
  write_text((dir / "metrics.csv").string(), metrics_csv(history));
  save_checkpoint((dir / "model.ckpt").string(), model.state());
  save_graph((dir / "graph.rga").string(), dag);
  save_run_config((dir / "resolved.cfg").string(), cfg);
  print_final_metrics(history);
  std::cout << "wrote " << (dir / "metrics.csv").string() << "\n";
}

void cmd_continual(const RunConfig& cfg) {
  if (cfg.checkpoint_in.empty())
    throw ConfigError("continual requires --from with the old-task checkpoint");
  DirectedAcyclicGraph dag = resolve_graph(cfg);
  CogniSNNModel old_model = restore_model(cfg, dag);
  ContinualConfig continual = cfg.continual_config();
  PathwayRanking ranking = rank_pathways(dag);
  KeyPathwaySelection sel =
      select_key_pathways(dag, ranking, continual.k, continual.scenario);
  SyntheticDataset old_data = generate_synthetic(cfg.task_spec());
  SyntheticDataset new_data = generate_synthetic(cfg.new_task_spec());
  ContinualResult result = kp_lwf(old_model, old_data, new_data, continual, sel);
  auto dir = prepare_out_dir(cfg);
  write_text((dir / "metrics.csv").string(), metrics_csv(result.history));
  save_checkpoint((dir / "model.ckpt").string(), result.model.state());
  save_graph((dir / "graph.rga").string(), dag);
  save_run_config((dir / "resolved.cfg").string(), cfg);
  std::cout << "baseline old-task accuracy "
            << format_double(result.baseline_old_accuracy) << "\n";
  print_final_metrics(result.history);
  std::cout << "wrote " << (dir / "metrics.csv").string() << "\n";
}

void cmd_perturb_eval(const RunConfig& cfg) {
  DirectedAcyclicGraph dag = resolve_graph(cfg);
  CogniSNNModel model = restore_model(cfg, dag);
  SyntheticDataset data = generate_synthetic(cfg.task_spec());
  std::vector<std::string> kinds = parse_name_list(cfg.eval_kinds);
  std::vector<double> rhos = parse_double_list(cfg.eval_rhos);
  std::string csv = "kind,rho,loss,accuracy\n";
  for (const std::string& kind : kinds) {
    for (double rho : rhos) {
      PerturbationSpec spec;
      spec.kind = perturbation_from_name(kind);
      spec.rho = rho;
      spec.lambda0 = cfg.perturb_lambda0;
      spec.seed = cfg.perturb_seed;
      EvalResult r = evaluate(model, data.test, cfg.train_timesteps, &spec);
      csv += kind + "," + format_double(rho) + "," + format_double(r.loss) +
             "," + format_double(r.accuracy) + "\n";
    }
  }
  auto dir = prepare_out_dir(cfg);
  write_text((dir / "perturb.csv").string(), csv);
  save_run_config((dir / "resolved.cfg").string(), cfg);
  std::cout << csv;
}

void cmd_timestep_eval(const RunConfig& cfg, bool growth) {
  DirectedAcyclicGraph dag = resolve_graph(cfg);
  CogniSNNModel model = restore_model(cfg, dag);
  SyntheticDataset data = generate_synthetic(cfg.task_spec());
  std::vector<NodeActivityMask> stages;
  if (growth) {
    PathwayRanking ranking = rank_pathways(dag);
    stages = schedule_masks(
        build_growth_schedule(dag, ranking, cfg.train_timesteps));
  }
  std::string csv = "t_prime,loss,accuracy\n";
  for (int t_prime : parse_int_list(cfg.eval_timesteps)) {
    if (growth && t_prime > cfg.train_timesteps)
      throw ConfigError("growth-staged eval needs t_prime <= train_timesteps, "
                        "got " + std::to_string(t_prime));
    EvalResult r = evaluate(model, data.test, t_prime, nullptr, false,
                            growth ? &stages : nullptr);
    csv += std::to_string(t_prime) + "," + format_double(r.loss) + "," +
           format_double(r.accuracy) + "\n";
  }
  auto dir = prepare_out_dir(cfg);
  write_text((dir / "timesteps.csv").string(), csv);
  save_run_config((dir / "resolved.cfg").string(), cfg);
  std::cout << csv;
}

void print_fixture(const char* name, const ConvOpCount& count,
                   const EnergyModel& energy) {
  double pj = static_cast<double>(count.macs) * energy.mac_pj +
              static_cast<double>(count.acs) * energy.ac_pj;
  std::cout << "fixture " << name << ": macs=" << count.macs
            << " acs=" << count.acs << " energy_pj=" << format_double(pj)
            << "\n";
}

void cmd_energy(const RunConfig& cfg, const std::string& fixture) {
  EnergyModel energy;
  if (!fixture.empty()) {
    // Closed-form check points for the op counter: a binary all-ones 4x4
    // frame drives pure accumulates, a 0.5-valued one pure multiplies.
    if (fixture == "conv3x3") {
      auto ones = Tensor::full({1, 1, 4, 4}, 1.0);
      print_fixture("conv3x3", count_conv_ops(ones, 1, 3, 1, 0), energy);
    } else if (fixture == "conv3x3-real") {
      auto half = Tensor::full({1, 1, 4, 4}, 0.5);
      print_fixture("conv3x3-real", count_conv_ops(half, 2, 3, 1, 0), energy);
    } else {
      throw ConfigError("unknown fixture '" + fixture +
                        "', expected conv3x3 or conv3x3-real");
    }
    return;
  }
  DirectedAcyclicGraph dag = resolve_graph(cfg);
  CogniSNNModel model = restore_model(cfg, dag);
  SyntheticDataset data = generate_synthetic(cfg.task_spec());
  int count = std::min(cfg.train_batch, data.test.size());
  if (count <= 0) throw DataEmptyError("no test samples to profile");
  std::vector<int> picks(count);
  std::iota(picks.begin(), picks.end(), 0);
  std::vector<Tensor> frames = collate_frames(data.test, picks);
  if (static_cast<int>(frames.size()) < cfg.train_timesteps)
    throw ConfigError("samples hold " + std::to_string(frames.size()) +
                      " frames but " + std::to_string(cfg.train_timesteps) +
                      " were requested");
  frames.resize(cfg.train_timesteps);
  EnergyReport report = count_ops_and_energy(model, frames, energy);
  auto dir = prepare_out_dir(cfg);
  write_text((dir / "profile.csv").string(), profiling_csv(report));
  save_run_config((dir / "resolved.cfg").string(), cfg);
  std::cout << "macs=" << report.macs << " acs=" << report.acs
            << " energy_pj=" << format_double(report.energy_pj)
            << " energy_mj=" << format_double(report.energy_mj) << "\n";
}

/// Declared CLI flags funnel into RunConfig keys, so file values and flag
/// overrides share one parser and one error path.
class FlagSet {
 public:
  explicit FlagSet(CLI::App* cmd) : cmd_(cmd) {}

  void add(const std::string& flag, const std::string& key,
           const std::string& help) {
    auto entry = std::make_unique<Entry>();
    entry->key = key;
    entry->opt = cmd_->add_option(flag, entry->value, help);
    entries_.push_back(std::move(entry));
  }

  void apply(RunConfig& cfg) const {
    for (const auto& entry : entries_)
      if (entry->opt->count() > 0) cfg.set(entry->key, entry->value);
  }

 private:
  struct Entry {
    std::string key;
    std::string value;
    CLI::Option* opt = nullptr;
  };

  CLI::App* cmd_;
  std::vector<std::unique_ptr<Entry>> entries_;
};

struct Command {
  CLI::App* sub = nullptr;
  std::string config_path;
  std::string fixture;
  bool growth = false;
  std::unique_ptr<FlagSet> flags;
  std::function<void(const RunConfig&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking network training and analysis over random graphs"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto add_command = [&](const std::string& name, const std::string& help) {
    auto cmd = std::make_unique<Command>();
    cmd->sub = app.add_subcommand(name, help);
    cmd->sub->add_option("--config", cmd->config_path,
                         "file of key = value settings, applied before flags");
    cmd->flags = std::make_unique<FlagSet>(cmd->sub);
    commands.push_back(std::move(cmd));
    return commands.back().get();
  };

  Command* gen = add_command("generate-graph",
                             "draw a random DAG and write .rga + .dot files");
  gen->flags->add("--gen", "graph_gen", "generator: er or ws");
  gen->flags->add("--n", "graph_nodes", "node count");
  gen->flags->add("--p", "graph_er_p", "ER edge probability");
  gen->flags->add("--k", "graph_ws_k", "WS ring neighbors (even)");
  gen->flags->add("--beta", "graph_ws_beta", "WS rewire probability");
  gen->flags->add("--seed", "graph_seed", "generator seed");
  gen->flags->add("--out-dir", "out_dir", "output directory");
  gen->run = cmd_generate_graph;

  Command* ana = add_command(
      "analyze-pathways",
      "rank input->output pathways by betweenness and select the key ones");
  ana->flags->add("--graph", "graph_file", ".rga file; omit to generate");
  ana->flags->add("--scenario", "continual_scenario", "similar or dissimilar");
  ana->flags->add("--k", "continual_k", "number of pathways to select");
  ana->flags->add("--out-dir", "out_dir", "output directory");
  ana->run = cmd_analyze_pathways;

  auto add_train_flags = [](Command* cmd) {
    cmd->flags->add("--graph", "graph_file", ".rga file; omit to generate");
    cmd->flags->add("--epochs", "train_epochs", "training epochs");
    cmd->flags->add("--batch", "train_batch", "minibatch size");
    cmd->flags->add("--lr", "train_lr", "base learning rate");
    cmd->flags->add("--momentum", "train_momentum", "SGD momentum");
    cmd->flags->add("--seed", "train_seed", "shuffle seed");
    cmd->flags->add("--timesteps", "train_timesteps", "simulation timesteps");
    cmd->flags->add("--out-dir", "out_dir", "output directory");
  };

  Command* tr = add_command("train", "train on the synthetic event task");
  add_train_flags(tr);
  tr->run = [](const RunConfig& cfg) { run_training(cfg, false); };

  Command* dgl = add_command(
      "train-dgl", "train with the pathway set growing across timesteps");
  add_train_flags(dgl);
  dgl->run = [](const RunConfig& cfg) { run_training(cfg, true); };

  Command* cont = add_command(
      "continual", "graft a new head and fine-tune the key pathways only");
  add_train_flags(cont);
  cont->flags->add("--from", "checkpoint_in", "old-task checkpoint");
  cont->flags->add("--scenario", "continual_scenario", "similar or dissimilar");
  cont->flags->add("--k", "continual_k", "number of pathways to select");
  cont->flags->add("--lambda", "continual_lambda", "distillation weight");
  cont->flags->add("--temperature", "continual_temperature",
                   "distillation temperature");
  cont->flags->add("--reg", "continual_reg", "pre-weight pull coefficient");
  cont->flags->add("--max-old-drop", "continual_max_old_drop",
                   "early-stop drop budget; negative disables");
  cont->run = cmd_continual;

  Command* pert = add_command(
      "perturb-eval", "accuracy under event noise across kinds and strengths");
  pert->flags->add("--graph", "graph_file", ".rga file; omit to generate");
  pert->flags->add("--from", "checkpoint_in", "trained checkpoint");
  pert->flags->add("--kinds", "eval_kinds", "comma list of perturbation kinds");
  pert->flags->add("--rhos", "eval_rhos", "comma list of strengths");
  pert->flags->add("--seed", "perturb_seed", "perturbation seed");
  pert->flags->add("--timesteps", "train_timesteps", "evaluation horizon");
  pert->flags->add("--out-dir", "out_dir", "output directory");
  pert->run = cmd_perturb_eval;

  Command* tstep = add_command(
      "timestep-eval", "accuracy across reduced inference horizons");
  tstep->flags->add("--graph", "graph_file", ".rga file; omit to generate");
  tstep->flags->add("--from", "checkpoint_in", "trained checkpoint");
  tstep->flags->add("--tprimes", "eval_timesteps", "comma list of horizons");
  tstep->sub->add_flag("--growth", tstep->growth,
                       "deploy a dynamically trained model through its "
                       "growth stages instead of the full graph");
  tstep->flags->add("--timesteps", "train_timesteps",
                    "training horizon the growth schedule was built for");
  tstep->flags->add("--out-dir", "out_dir", "output directory");
  Command* tstep_ptr = tstep;
  tstep->run = [tstep_ptr](const RunConfig& cfg) {
    cmd_timestep_eval(cfg, tstep_ptr->growth);
  };

  Command* en = add_command(
      "energy", "synaptic op counts and energy for a model or a fixture");
  en->sub->add_option("--fixture", en->fixture,
                      "closed-form fixture: conv3x3 or conv3x3-real");
  en->flags->add("--graph", "graph_file", ".rga file; omit to generate");
  en->flags->add("--from", "checkpoint_in", "trained checkpoint");
  en->flags->add("--batch", "train_batch", "samples to profile");
  en->flags->add("--timesteps", "train_timesteps", "profiling horizon");
  en->flags->add("--out-dir", "out_dir", "output directory");
  Command* en_ptr = en;
  en->run = [en_ptr](const RunConfig& cfg) { cmd_energy(cfg, en_ptr->fixture); };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const auto& cmd : commands) {
      if (!cmd->sub->parsed()) continue;
      RunConfig cfg;
      if (!cmd->config_path.empty()) apply_config_file(cfg, cmd->config_path);
      cmd->flags->apply(cfg);
      cmd->run(cfg);
    }
  } catch (const ConfigFailure& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataFailure& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const EngineFailure& e) {
    std::cerr << "engine error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
