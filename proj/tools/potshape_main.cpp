#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "potshape/harness.hpp"

namespace fs = std::filesystem;
using namespace potshape;

namespace {

Env resolve_env(const std::string& name) {
  try {
    return make_env(name);
  } catch (const std::invalid_argument&) {
    if (fs::exists(name)) {
      Env env;
      env.name = fs::path(name).stem().string();
      env.mdp = load_mdp_file(name);
      return env;
    }
    throw;
  }
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
  std::vector<uint64_t> seeds;
  std::string field;
  std::stringstream ss(text);
  while (std::getline(ss, field, ','))
    if (!field.empty()) seeds.push_back(std::stoull(field));
  if (seeds.empty()) throw std::invalid_argument("seed list is empty: '" + text + "'");
  return seeds;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::string field;
  std::stringstream ss(text);
  while (std::getline(ss, field, ','))
    if (!field.empty()) out.push_back(std::stod(field));
  if (out.empty()) throw std::invalid_argument(std::string(what) + " list is empty");
  return out;
}

/// Everything the run-style subcommands share; config file values fill
/// options the command line left untouched.
struct CommonOpts {
  std::string config_path;
  std::string env = "fourrooms";
  std::string potential = "gcn";
  double alpha = 0.6;
  double eta = 10.0;
  double lambda = 0.9;
  int episodes = 300;
  std::string seeds = "0,1,2,3,4,5,6,7,8,9";
  std::string out = "out";
  bool reset_graph = false;
  int retrain_every = 1;
  double actor_lr = 0.1;
  double critic_lr = 0.1;
  double temperature = 0.1;
  int gcn_iterations = 200;
  int hidden = 64;
  int workers = 0;

  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* cmd) {
    opts["config"] = cmd->add_option("--config", config_path, "key=value config file");
    opts["env"] = cmd->add_option("--env", env, "environment name or MDP file path");
    opts["potential"] =
        cmd->add_option("--potential", potential, "gcn | ab | l2 | const | zero");
    opts["alpha"] = cmd->add_option("--alpha", alpha, "weight of the unshaped return");
    opts["eta"] = cmd->add_option("--eta", eta, "propagation loss weight");
    opts["lambda"] = cmd->add_option("--lambda", lambda, "lambda-return parameter");
    opts["episodes"] = cmd->add_option("--episodes", episodes, "episodes per seed");
    opts["seeds"] = cmd->add_option("--seeds", seeds, "comma-separated seed list");
    opts["out"] = cmd->add_option("--out", out, "output directory");
    opts["reset_graph"] = cmd->add_flag("--reset-graph", reset_graph,
                                        "drop the graph before every episode");
    opts["retrain_every"] =
        cmd->add_option("--retrain-every", retrain_every, "episodes between retraining");
    opts["actor_lr"] = cmd->add_option("--actor-lr", actor_lr, "actor step size");
    opts["critic_lr"] = cmd->add_option("--critic-lr", critic_lr, "critic step size");
    opts["temperature"] = cmd->add_option("--temperature", temperature, "softmax temperature");
    opts["gcn_iterations"] =
        cmd->add_option("--gcn-iterations", gcn_iterations, "gradient steps per retraining");
    opts["hidden"] = cmd->add_option("--hidden", hidden, "hidden width of the model");
    opts["workers"] = cmd->add_option("--workers", workers, "seed worker threads (0 = auto)");
  }

  void apply_config_file() {
    if (config_path.empty()) return;
    std::ifstream f(config_path);
    if (!f) throw std::runtime_error("cannot read config file: " + config_path);
    const auto kv = parse_config_file(f);
    auto flag_set = [&](const char* key) {
      auto it = opts.find(key);
      return it != opts.end() && it->second->count() > 0;
    };
    for (const auto& [key, value] : kv) {
      if (flag_set(key.c_str())) continue;  // command line wins
      if (key == "env") env = value;
      else if (key == "potential") potential = value;
      else if (key == "alpha") alpha = std::stod(value);
      else if (key == "eta") eta = std::stod(value);
      else if (key == "lambda") lambda = std::stod(value);
      else if (key == "episodes") episodes = std::stoi(value);
      else if (key == "seeds") seeds = value;
      else if (key == "out") out = value;
      else if (key == "reset_graph") reset_graph = value == "1" || value == "true";
      else if (key == "retrain_every") retrain_every = std::stoi(value);
      else if (key == "actor_lr") actor_lr = std::stod(value);
      else if (key == "critic_lr") critic_lr = std::stod(value);
      else if (key == "temperature") temperature = std::stod(value);
      else if (key == "gcn_iterations") gcn_iterations = std::stoi(value);
      else if (key == "hidden") hidden = std::stoi(value);
      else if (key == "workers") workers = std::stoi(value);
      else throw std::runtime_error("unknown config key: " + key);
    }
  }

  RunConfig to_run_config() const {
    RunConfig cfg;
    cfg.env_name = env;
    cfg.provenance = provenance_from_string(potential);
    cfg.episodes = episodes;
    cfg.agent.alpha = alpha;
    cfg.agent.lambda = lambda;
    cfg.agent.actor_lr = actor_lr;
    cfg.agent.critic_lr = critic_lr;
    cfg.agent.temperature = temperature;
    cfg.gcn.eta = eta;
    cfg.gcn.iterations = gcn_iterations;
    cfg.gcn.hidden = hidden;
    cfg.retrain_every = retrain_every;
    cfg.reset_graph = reset_graph;
    return cfg;
  }
};

PotentialTable offline_potential(const Env& env, const std::string& potential, double eta,
                                 int hidden, int iterations, uint64_t seed) {
  const Provenance prov = provenance_from_string(potential);
  switch (prov) {
    case Provenance::Zero:
      return PotentialTable::zero(env.mdp.num_states);
    case Provenance::Constant:
      return PotentialTable::constant(env.mdp.num_states, 0.5);
    case Provenance::L2:
      if (!env.layout) throw std::invalid_argument("distance potential needs a grid environment");
      return l2_potential(*env.layout);
    case Provenance::AlphaBeta:
      return alpha_beta_potential(env.mdp, env.mdp.max_steps);
    case Provenance::Gcn: {
      GcnConfig cfg;
      cfg.eta = eta;
      cfg.hidden = hidden;
      cfg.iterations = iterations;
      cfg.seed = seed;
      GcnModel model(cfg);
      const TrajectoryGraph graph = build_full_graph(env.mdp);
      return train_potential(model, graph, env.mdp.num_states);
    }
  }
  throw std::logic_error("offline_potential: unhandled provenance");
}

int cmd_run(const CommonOpts& o, bool dump_graph, const std::string& save_mdp_path) {
  const Env env = resolve_env(o.env);
  SuiteConfig cfg;
  cfg.run = o.to_run_config();
  cfg.seeds = parse_seed_list(o.seeds);
  cfg.out_dir = o.out;
  cfg.workers = o.workers;

  if (!save_mdp_path.empty()) {
    std::ofstream f(save_mdp_path);
    if (!f) throw std::runtime_error("cannot write MDP file: " + save_mdp_path);
    save_mdp(env.mdp, f);
  }

  const SuiteResult res = run_suite(env, cfg);
  const std::string tag = config_tag(cfg.run);

  int failures = 0;
  for (const SeedOutcome& oc : res.outcomes) {
    if (oc.ok) continue;
    ++failures;
    std::cerr << "seed " << oc.seed << " failed: " << oc.error << "\n";
  }

  for (const SeedOutcome& oc : res.outcomes) {
    if (!oc.ok) continue;
    if (dump_graph) {
      std::ofstream g(cfg.out_dir /
                      ("graph_" + tag + "_seed" + std::to_string(oc.seed) + ".txt"));
      oc.trace.graph.dump(g);
    }
    if (oc.trace.model) {
      std::ofstream w(cfg.out_dir /
                          ("weights_" + tag + "_seed" + std::to_string(oc.seed) + ".bin"),
                      std::ios::binary);
      save_weights(*oc.trace.model, w);
    }
  }

  double endpoint = 0.0;
  int ok = 0;
  for (const SeedOutcome& oc : res.outcomes)
    if (oc.ok) {
      endpoint += static_cast<double>(oc.trace.episodes.back().cumulative_steps);
      ++ok;
    }
  std::cout << "env " << env.name << " potential " << o.potential << " seeds " << ok << "/"
            << res.outcomes.size() << " mean final cumulative steps "
            << endpoint / std::max(1, ok) << "\n";
  std::cout << "aggregate: " << res.aggregate_csv.string() << "\n";
  return failures == 0 ? 0 : 1;
}

int cmd_alpha_sweep(const CommonOpts& o, const std::string& alphas_text) {
  const Env env = resolve_env(o.env);
  SuiteConfig base;
  base.run = o.to_run_config();
  base.seeds = parse_seed_list(o.seeds);
  base.out_dir = o.out;
  base.workers = o.workers;

  std::vector<double> alphas;
  if (alphas_text.empty())
    for (int i = 0; i <= 10; ++i) alphas.push_back(0.1 * i);
  else
    alphas = parse_double_list(alphas_text, "alpha");

  const std::vector<SuiteResult> results = run_alpha_sweep(env, base, alphas);
  for (size_t i = 0; i < results.size(); ++i)
    std::cout << "alpha " << alphas[i] << " curve " << results[i].aggregate_csv.string() << "\n";
  return 0;
}

int cmd_toy_sweep(const std::string& lambdas_text, long max_iterations, int window,
                  double eta, int hidden, int gcn_iterations, uint64_t seed,
                  const std::string& out_dir) {
  const Env env = make_env("two-arm-chain");
  const PotentialTable phi =
      offline_potential(env, "gcn", eta, hidden, gcn_iterations, seed);

  ToySweepConfig cfg;
  if (!lambdas_text.empty()) cfg.lambdas = parse_double_list(lambdas_text, "lambda");
  cfg.max_iterations = max_iterations;
  cfg.stable_window = window;

  const std::vector<ToySweepPoint> points = toy_lambda_sweep(env.mdp, phi, cfg);

  fs::create_directories(out_dir);
  const fs::path p = fs::path(out_dir) / "toy_sweep.csv";
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  write_toy_sweep_csv(points, f);

  std::printf("%8s %18s %18s\n", "lambda", "plain", "shaped");
  for (const ToySweepPoint& pt : points)
    std::printf("%8.3f %15ld%s %15ld%s\n", pt.lambda, pt.plain_iterations,
                pt.plain_censored ? " (c)" : "    ", pt.shaped_iterations,
                pt.shaped_censored ? " (c)" : "    ");
  std::cout << "sweep: " << p.string() << "\n";
  return 0;
}

int cmd_heatmap(const std::string& env_name, const std::string& potential, double eta,
                int hidden, int gcn_iterations, uint64_t seed, const std::string& out_dir) {
  const Env env = resolve_env(env_name);
  if (!env.layout) throw std::invalid_argument("heatmap needs a grid environment");
  const PotentialTable phi =
      offline_potential(env, potential, eta, hidden, gcn_iterations, seed);
  const HeatmapGrid grid = heatmap_from_potential(phi, *env.layout);

  fs::create_directories(out_dir);
  char name[128];
  std::snprintf(name, sizeof name, "heatmap_%s_%s_eta%g_seed%llu.csv", env.name.c_str(),
                potential.c_str(), eta, static_cast<unsigned long long>(seed));
  const fs::path p = fs::path(out_dir) / name;
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  write_heatmap_csv(grid, f);
  std::cout << "heatmap: " << p.string() << "\n";
  return 0;
}

int cmd_compare(const std::string& env_name, double eta, int hidden, int gcn_iterations,
                uint64_t seed, const std::string& out_dir) {
  const Env env = resolve_env(env_name);
  const PotentialTable gcn = offline_potential(env, "gcn", eta, hidden, gcn_iterations, seed);
  const PotentialTable ab = offline_potential(env, "ab", eta, hidden, gcn_iterations, seed);
  const PotentialComparison cmp = compare_potentials(gcn, ab);

  fs::create_directories(out_dir);
  std::ofstream fg(fs::path(out_dir) / ("potential_" + env.name + "_gcn.csv"));
  write_potential_csv(gcn, fg);
  std::ofstream fa(fs::path(out_dir) / ("potential_" + env.name + "_ab.csv"));
  write_potential_csv(ab, fa);
  std::cout << "spearman " << cmp.spearman << " max_abs_diff " << cmp.max_abs_diff << "\n";
  return 0;
}

int cmd_gradvar(const CommonOpts& o, int rollouts, uint64_t seed) {
  const Env env = resolve_env(o.env);
  const PotentialTable phi =
      offline_potential(env, o.potential, o.eta, o.hidden, o.gcn_iterations, seed);
  AgentConfig acfg;
  acfg.alpha = o.alpha;
  acfg.lambda = o.lambda;
  acfg.temperature = o.temperature;

  const std::vector<GradientVarianceRow> rows =
      gradient_variance(env, phi, acfg, rollouts, seed);

  fs::create_directories(o.out);
  const fs::path p = fs::path(o.out) / ("gradvar_" + env.name + "_" + o.potential + ".csv");
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  write_gradient_variance_csv(rows, f);

  double mp = 0.0, mm = 0.0;
  for (const GradientVarianceRow& r : rows) {
    mp += r.variance_plain;
    mm += r.variance_mixed;
  }
  const double n = std::max<size_t>(1, rows.size());
  std::cout << "states " << rows.size() << " mean variance plain " << mp / n << " mixed "
            << mm / n << "\n";
  std::cout << "rows: " << p.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"potential shaping experiments"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  bool dump_graph = false;
  std::string save_mdp_path;
  CLI::App* run = app.add_subcommand("run", "train agents and emit trace/curve CSVs");
  run_opts.attach(run);
  run->add_flag("--dump-graph", dump_graph, "write the final graph per seed");
  run->add_option("--save-mdp", save_mdp_path, "also write the environment's MDP file");

  CommonOpts alpha_opts;
  std::string alphas_text;
  CLI::App* alpha = app.add_subcommand("alpha-sweep", "one curve per mixing weight");
  alpha_opts.attach(alpha);
  alpha->add_option("--alphas", alphas_text, "comma list (default 0.0,0.1,...,1.0)");

  std::string toy_lambdas;
  long toy_max = 1000000;
  int toy_window = 10;
  double toy_eta = 10.0;
  int toy_hidden = 64;
  int toy_iters = 1500;
  uint64_t toy_seed = 0;
  std::string toy_out = "out";
  CLI::App* toy = app.add_subcommand("toy-sweep", "two-arm chain lambda sweep");
  toy->add_option("--lambdas", toy_lambdas, "comma list (default 0.1,...,1.0)");
  toy->add_option("--max-iterations", toy_max, "censoring bound");
  toy->add_option("--window", toy_window, "consecutive sweeps for commitment");
  toy->add_option("--eta", toy_eta, "propagation loss weight");
  toy->add_option("--hidden", toy_hidden, "hidden width of the model");
  toy->add_option("--gcn-iterations", toy_iters, "training budget for the potential");
  toy->add_option("--seed", toy_seed, "model seed");
  toy->add_option("--out", toy_out, "output directory");

  std::string hm_env = "fourrooms", hm_potential = "gcn", hm_out = "out";
  double hm_eta = 10.0;
  int hm_hidden = 64, hm_iters = 1500;
  uint64_t hm_seed = 0;
  CLI::App* heat = app.add_subcommand("heatmap", "potential values on the grid");
  heat->add_option("--env", hm_env, "grid environment name");
  heat->add_option("--potential", hm_potential, "gcn | ab | l2 | const | zero");
  heat->add_option("--eta", hm_eta, "propagation loss weight");
  heat->add_option("--hidden", hm_hidden, "hidden width of the model");
  heat->add_option("--gcn-iterations", hm_iters, "training budget");
  heat->add_option("--seed", hm_seed, "model seed");
  heat->add_option("--out", hm_out, "output directory");

  std::string cp_env = "fourrooms", cp_out = "out";
  double cp_eta = 10.0;
  int cp_hidden = 64, cp_iters = 1500;
  uint64_t cp_seed = 0;
  CLI::App* comp = app.add_subcommand("compare", "trained potential vs message potential");
  comp->add_option("--env", cp_env, "environment name");
  comp->add_option("--eta", cp_eta, "propagation loss weight");
  comp->add_option("--hidden", cp_hidden, "hidden width of the model");
  comp->add_option("--gcn-iterations", cp_iters, "training budget");
  comp->add_option("--seed", cp_seed, "model seed");
  comp->add_option("--out", cp_out, "output directory");

  CommonOpts gv_opts;
  int gv_rollouts = 200;
  uint64_t gv_seed = 0;
  CLI::App* gv = app.add_subcommand("gradvar", "per-state target spread diagnostic");
  gv_opts.attach(gv);
  gv->add_option("--rollouts", gv_rollouts, "rollouts of the uniform policy");
  gv->add_option("--seed", gv_seed, "environment seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      run_opts.apply_config_file();
      return cmd_run(run_opts, dump_graph, save_mdp_path);
    }
    if (alpha->parsed()) {
      alpha_opts.apply_config_file();
      return cmd_alpha_sweep(alpha_opts, alphas_text);
    }
    if (toy->parsed())
      return cmd_toy_sweep(toy_lambdas, toy_max, toy_window, toy_eta, toy_hidden, toy_iters,
                           toy_seed, toy_out);
    if (heat->parsed())
      return cmd_heatmap(hm_env, hm_potential, hm_eta, hm_hidden, hm_iters, hm_seed, hm_out);
    if (comp->parsed())
      return cmd_compare(cp_env, cp_eta, cp_hidden, cp_iters, cp_seed, cp_out);
    if (gv->parsed()) {
      gv_opts.apply_config_file();
      return cmd_gradvar(gv_opts, gv_rollouts, gv_seed);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
