// End-to-end acceptance checks. Each criterion prints one line:
//   [PASS] <n>. <what it established> (<seconds>)
// and the process exits nonzero if any criterion failed. Criteria can be
// run individually by passing their numbers as arguments.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "potshape/dp.hpp"
#include "potshape/harness.hpp"
#include "potshape/random.hpp"

using namespace potshape;
namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

struct Check {
  std::vector<std::string> fails;
  int detail_budget = 6;

  void fail(const std::string& msg) {
    if (detail_budget > 0)
      fails.push_back(msg);
    else if (detail_budget == 0)
      fails.push_back("(further failures suppressed)");
    --detail_budget;
  }
  void require(bool ok, const std::string& msg) {
    if (!ok) fail(msg);
  }
  bool ok() const { return fails.empty(); }
};

// Learning-curve endpoints shared between the statistical criteria, so
// the expensive training arms run once.
struct RunCache {
  std::map<std::string, std::vector<double>> endpoints;

  const std::vector<double>& get(const std::string& env_name, Provenance prov) {
    const std::string key = env_name + "/" + to_string(prov);
    auto it = endpoints.find(key);
    if (it != endpoints.end()) return it->second;

    const Env env = make_env(env_name);
    RunConfig cfg;
    cfg.env_name = env_name;
    cfg.provenance = prov;
    cfg.episodes = 300;
    cfg.full_graph = true;  // tabular protocol: train once on the exact graph
    std::vector<double> ends;
    for (uint64_t seed = 0; seed < 10; ++seed) {
      const ExperimentTrace t = run_experiment(env, cfg, seed);
      ends.push_back(static_cast<double>(t.episodes.back().cumulative_steps));
    }
    return endpoints.emplace(key, std::move(ends)).first->second;
  }
};

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// ---------------------------------------------------------------- 1

void check_message_products(Check& c, RunCache&) {
  std::mt19937_64 rng(1001);
  long entries = 0, bad = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const MdpSpec mdp = testing::random_mdp(rng, 5, 3);
    const int horizon = std::uniform_int_distribution<int>(1, 5)(rng);
    const OptimalityModel model = OptimalityModel::from(mdp);
    const std::vector<Matrix> fw = testing::unnormalized_forward(
        forward_messages(mdp, model, horizon));
    const std::vector<Matrix> bw = testing::unnormalized_backward(
        backward_messages(mdp, model, horizon));
    const std::vector<Matrix> want = testing::enumerate_message_products(mdp, horizon);
    for (int t = 0; t < horizon; ++t) {
      const Matrix got = fw[static_cast<size_t>(t)].cwiseProduct(bw[static_cast<size_t>(t)]);
      const Matrix& ref = want[static_cast<size_t>(t)];
      for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
          ++entries;
          const double denom = std::max({std::abs(ref(s, a)), std::abs(got(s, a)), 1e-300});
          const double rel = std::abs(got(s, a) - ref(s, a)) / denom;
          worst = std::max(worst, rel);
          if (rel >= 1e-10) {
            ++bad;
            if (bad <= 3)
              c.fail(fmt("rep %d t=%d (s=%d,a=%d): product %.17g vs enumeration %.17g rel %.3g",
                         rep, t, s, a, got(s, a), ref(s, a), rel));
          }
        }
    }
  }
  c.require(bad == 0, fmt("%ld of %ld entries off by more than 1e-10 (worst %.3g)",
                          bad, entries, worst));
}

// ---------------------------------------------------------------- 2

void check_gradients(Check& c, RunCache&) {
  std::mt19937_64 rng(2002);
  const double etas[3] = {0.1, 1.0, 10.0};
  int accepted = 0, attempts = 0;
  long checked = 0, bad = 0;
  double worst = 0.0;
  while (accepted < 20 && attempts < 200) {
    ++attempts;
    const TrajectoryGraph g = testing::random_marked_graph(rng, 10);
    const SpectralOps ops = build_spectral(g);
    GcnConfig cfg;
    cfg.hidden = 8;
    cfg.eta = etas[accepted % 3];
    cfg.seed = 100 + static_cast<uint64_t>(attempts);
    GcnModel model(cfg);
    model.ensure_input_dim(static_cast<int>(ops.states.size()));
    // Finite differences degrade next to a relu kink; resample instead.
    if ((ops.t_hat * model.w0()).cwiseAbs().minCoeff() < 1e-3) continue;
    ++accepted;

    const BaseCaseSet bases = select_base_cases(g, ops);
    const GcnModel::Gradients grads = model.gradients(ops, bases);
    c.require(std::abs(grads.loss - model.loss(ops, bases)) <=
                  1e-12 * std::max(1.0, std::abs(grads.loss)),
              fmt("attempt %d: gradient pass loss disagrees with plain loss", attempts));

    auto check_entry = [&](bool in_w0, int i, int j, double got) {
      const double fd = testing::fd_loss_derivative(model, ops, bases, in_w0, i, j, 1e-5);
      // Central differences carry O(step^2) truncation noise, so entries
      // near zero get an absolute allowance on top of the relative bound.
      const double err = std::abs(got - fd);
      const double rel = err / std::max(1e-9, std::max(std::abs(got), std::abs(fd)));
      worst = std::max(worst, rel);
      ++checked;
      if (err >= 1e-9 + 1e-4 * std::max(std::abs(got), std::abs(fd))) {
        ++bad;
        if (bad <= 3)
          c.fail(fmt("attempt %d %s(%d,%d): analytic %.10g vs fd %.10g rel %.3g",
                     attempts, in_w0 ? "w0" : "w1", i, j, got, fd, rel));
      }
    };
    for (int i = 0; i < model.w0().rows(); ++i)
      for (int j = 0; j < model.w0().cols(); ++j) check_entry(true, i, j, grads.w0(i, j));
    for (int i = 0; i < model.w1().rows(); ++i)
      for (int j = 0; j < model.w1().cols(); ++j) check_entry(false, i, j, grads.w1(i, j));
  }
  c.require(accepted >= 20, fmt("only %d kink-free graphs in %d attempts", accepted, attempts));
  c.require(bad == 0, fmt("%ld of %ld weight entries off by more than 1e-4 (worst %.3g)",
                          bad, checked, worst));
}

// ---------------------------------------------------------------- 3

void check_policy_invariance(Check& c, RunCache&) {
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const MdpSpec mdp = testing::random_mdp(rng, 8, 3);
    Vector phi(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) phi(s) = mdp.is_terminal(s) ? 0.0 : u(rng);

    const DpResult plain = value_iteration(mdp);
    const TransitionReward shaped_reward = [&](int s, int a, int s2) {
      return mdp.reward(s, a) + mdp.gamma * phi(s2) - phi(s);
    };
    const DpResult shaped = value_iteration(mdp, 1e-13, 200000, shaped_reward);

    if (greedy_sets(plain.q) != greedy_sets(shaped.q)) {
      c.fail(fmt("rep %d: greedy action sets changed under shaping", rep));
      continue;
    }
    Matrix expect = plain.q;
    expect.colwise() -= phi;
    const double diff = (shaped.q - expect).cwiseAbs().maxCoeff();
    c.require(diff <= 1e-9, fmt("rep %d: |Q_shaped - (Q - phi)| = %.3g", rep, diff));
  }
}

// ---------------------------------------------------------------- 4

void check_learning_speedup(Check& c, RunCache& cache) {
  for (const char* env_name : {"fourrooms", "fourrooms-traps"}) {
    const std::vector<double>& shaped = cache.get(env_name, Provenance::Gcn);
    const std::vector<double>& unshaped = cache.get(env_name, Provenance::Zero);
    const double p = paired_t_pvalue_less(shaped, unshaped);
    c.require(p < 0.05,
              fmt("%s: p=%.4g (shaped mean %.0f steps vs unshaped %.0f over %zu seeds)",
                  env_name, p, mean_of(shaped), mean_of(unshaped), shaped.size()));
  }
}

// ---------------------------------------------------------------- 5

void check_potential_agreement(Check& c, RunCache& cache) {
  // Learning curves: trained potential versus the exact message potential.
  const double a = mean_of(cache.get("fourrooms", Provenance::Gcn));
  const double b = mean_of(cache.get("fourrooms", Provenance::AlphaBeta));
  const double rel = 2.0 * std::abs(a - b) / (a + b);
  c.require(rel < 0.2, fmt("endpoint means %.0f vs %.0f differ by %.1f%%", a, b, 100.0 * rel));

  // Potentials themselves: rank agreement on the full transition graph.
  const Env env = make_env("fourrooms");
  const TrajectoryGraph g = build_full_graph(env.mdp);
  GcnConfig cfg;
  cfg.iterations = 1500;
  cfg.seed = 0;
  GcnModel model(cfg);
  const PotentialTable trained = train_potential(model, g, env.mdp.num_states);
  const PotentialTable exact = alpha_beta_potential(env.mdp, env.mdp.max_steps);
  const double rho = compare_potentials(trained, exact).spearman;
  c.require(rho > 0.8, fmt("rank correlation %.3f <= 0.8", rho));
}

// ---------------------------------------------------------------- 6

void check_toy_chain(Check& c, RunCache&) {
  const Env chain = make_env("two-arm-chain");
  const TrajectoryGraph g = build_full_graph(chain.mdp);
  GcnConfig cfg;
  cfg.iterations = 1500;
  cfg.seed = 0;
  GcnModel model(cfg);
  const PotentialTable phi = train_potential(model, g, chain.mdp.num_states);

  ToySweepConfig tcfg;
  for (int i = 1; i <= 9; ++i) tcfg.lambdas.push_back(0.1 * i);
  const std::vector<ToySweepPoint> pts = toy_lambda_sweep(chain.mdp, phi, tcfg);
  long shaped_min = pts[0].shaped_iterations, shaped_max = pts[0].shaped_iterations;
  for (size_t i = 0; i < pts.size(); ++i) {
    c.require(!pts[i].plain_censored && !pts[i].shaped_censored,
              fmt("lambda %.1f: sweep censored", pts[i].lambda));
    if (i > 0)
      c.require(pts[i].plain_iterations < pts[i - 1].plain_iterations,
                fmt("plain sweeps not strictly decreasing at lambda %.1f (%ld -> %ld)",
                    pts[i].lambda, pts[i - 1].plain_iterations, pts[i].plain_iterations));
    shaped_min = std::min(shaped_min, pts[i].shaped_iterations);
    shaped_max = std::max(shaped_max, pts[i].shaped_iterations);
  }
  c.require(static_cast<double>(shaped_max) / static_cast<double>(shaped_min) < 2.0,
            fmt("shaped sweep counts spread [%ld, %ld]", shaped_min, shaped_max));

  ToySweepConfig mc;
  mc.lambdas = {1.0};
  const std::vector<ToySweepPoint> full = toy_lambda_sweep(chain.mdp, phi, mc);
  c.require(full[0].plain_iterations == full[0].shaped_iterations,
            fmt("at lambda 1 plain took %ld sweeps, shaped %ld",
                full[0].plain_iterations, full[0].shaped_iterations));
}

// ---------------------------------------------------------------- 7

void check_entropy_bound(Check& c, RunCache&) {
  std::mt19937_64 rng(7007);
  for (int rep = 0; rep < 100; ++rep) {
    MdpSpec mdp = testing::random_mdp(rng, 6, 3);
    mdp.max_steps = 30;
    const Matrix policy = testing::random_policy(rng, mdp.num_states, mdp.num_actions);

    TrajectoryGraph g;
    for (int ep = 0; ep < 5; ++ep) {
      int s = sample_categorical(mdp.start_distribution, rng);
      Transition t;
      t.done = false;
      for (int k = 0; k < mdp.max_steps; ++k) {
        const Vector row = policy.row(s).transpose();
        t = step(mdp, s, sample_categorical(row, rng), rng);
        g.add_transition(t);
        if (t.done) break;
        s = t.next_state;
      }
      if (!t.done) g.end_episode(t.next_state);
    }

    // Policy transition kernel, marginalised over actions.
    Matrix kernel = Matrix::Zero(mdp.num_states, mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s)
      for (int a = 0; a < mdp.num_actions; ++a)
        kernel.row(s) += policy(s, a) * mdp.transition[static_cast<size_t>(a)].row(s);

    const SpectralOps ops = build_spectral(g);
    const Vector h_uniform = entropy_rate_rows(random_walk_matrix(ops));
    int compared = 0;
    for (size_t i = 0; i < ops.states.size(); ++i) {
      const int s = ops.states[i];
      // Restrict the kernel row to the closed graph neighborhood.
      double mass = kernel(s, s);
      std::vector<double> probs = {mass};
      for (size_t j = 0; j < ops.states.size(); ++j)
        if (ops.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) {
          probs.push_back(kernel(s, ops.states[j]));
          mass += probs.back();
        }
      if (mass <= 0.0) continue;
      ++compared;
      double h = 0.0;
      for (double p : probs)
        if (p > 0.0) h -= (p / mass) * std::log(p / mass);
      if (h > h_uniform(static_cast<Eigen::Index>(i)) + 1e-12)
        c.fail(fmt("rep %d state %d: policy entropy %.12f beats uniform %.12f",
                   rep, s, h, h_uniform(static_cast<Eigen::Index>(i))));
    }
    c.require(compared >= 1, fmt("rep %d: no comparable rows", rep));
  }
}

// ---------------------------------------------------------------- 8

void check_smoothing_energy(Check& c, RunCache&) {
  const Env env = make_env("smaze");
  const TrajectoryGraph g = build_full_graph(env.mdp);
  const SpectralOps ops = build_spectral(g);

  auto energy_at = [&](double eta, uint64_t seed, PotentialTable* out) {
    GcnConfig cfg;
    cfg.eta = eta;
    cfg.iterations = 1500;
    cfg.seed = seed;
    GcnModel model(cfg);
    const PotentialTable phi = train_potential(model, g, env.mdp.num_states);
    Vector f(static_cast<Eigen::Index>(ops.states.size()));
    for (size_t i = 0; i < ops.states.size(); ++i)
      f(static_cast<Eigen::Index>(i)) = phi(ops.states[i]);
    if (out) *out = phi;
    return dirichlet_energy(ops, f);
  };

  double rough = 0.0, smooth = 0.0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    rough += energy_at(0.1, seed, nullptr);
    smooth += energy_at(10.0, seed, nullptr);
  }
  c.require(smooth < rough,
            fmt("mean graph energy %.4f at strong smoothing vs %.4f at weak",
                smooth / 10.0, rough / 10.0));

  // The potential fields render as heatmaps across the smoothing range.
  const fs::path dir = fs::temp_directory_path() / "potshape_acceptance";
  fs::create_directories(dir);
  for (double eta : {0.1, 1.0, 10.0}) {
    PotentialTable phi;
    energy_at(eta, 0, &phi);
    const HeatmapGrid grid = heatmap_from_potential(phi, *env.layout);
    const fs::path file = dir / fmt("heatmap_eta%g.csv", eta);
    std::ofstream out(file);
    write_heatmap_csv(grid, out);
    out.close();
    std::ifstream in(file);
    const HeatmapGrid back = parse_heatmap_csv(in);
    c.require(back.width == 9 && back.height == 9,
              fmt("heatmap at eta %g reparsed as %dx%d", eta, back.width, back.height));
    c.require(std::isnan(back.values(0, 0)) && !std::isnan(back.values(1, 7)),
              fmt("heatmap at eta %g lost the wall/goal distinction", eta));
  }
}

// ---------------------------------------------------------------- 9

void check_plain_mix_identity(Check& c, RunCache&) {
  const Env env = make_env("fourrooms");
  RunConfig shaped;
  shaped.env_name = "fourrooms";
  shaped.provenance = Provenance::Gcn;
  shaped.episodes = 60;
  shaped.gcn.iterations = 40;
  shaped.agent.alpha = 1.0;
  RunConfig unshaped = shaped;
  unshaped.provenance = Provenance::Zero;

  const ExperimentTrace a = run_experiment(env, shaped, 7);
  const ExperimentTrace b = run_experiment(env, unshaped, 7);
  for (size_t e = 0; e < a.episodes.size(); ++e) {
    if (a.episodes[e].steps != b.episodes[e].steps ||
        a.episodes[e].discounted_return != b.episodes[e].discounted_return) {
      c.fail(fmt("episode %zu diverged (%d vs %d steps)", e, a.episodes[e].steps,
                 b.episodes[e].steps));
      break;
    }
  }
  c.require((a.final_agent.theta - b.final_agent.theta).cwiseAbs().maxCoeff() == 0.0,
            "final preferences differ");
  c.require((a.final_agent.v - b.final_agent.v).cwiseAbs().maxCoeff() == 0.0,
            "final critic values differ");

  // The mixing-weight grid runs end to end and emits one curve per alpha.
  const Env maze = make_env("smaze");
  SuiteConfig sweep;
  sweep.run.env_name = "smaze";
  sweep.run.provenance = Provenance::Gcn;
  sweep.run.episodes = 20;
  sweep.run.gcn.iterations = 60;
  sweep.seeds = {0};
  sweep.out_dir = fs::temp_directory_path() / "potshape_acceptance" / "alpha_sweep";
  fs::remove_all(sweep.out_dir);
  sweep.emit_potentials = false;
  std::vector<double> alphas;
  for (int i = 0; i <= 10; ++i) alphas.push_back(0.1 * i);
  const std::vector<SuiteResult> results = run_alpha_sweep(maze, sweep, alphas);
  c.require(results.size() == 11, fmt("%zu curves for 11 alphas", results.size()));
  std::set<std::string> names;
  for (const SuiteResult& r : results) {
    names.insert(r.aggregate_csv.string());
    std::ifstream in(r.aggregate_csv);
    try {
      const CsvTable t = read_csv(in);
      if (t.rows.size() != 20)
        c.fail(fmt("%s has %zu rows, want 20", r.aggregate_csv.filename().c_str(),
                   t.rows.size()));
    } catch (const std::exception& ex) {
      c.fail(fmt("cannot reparse %s: %s", r.aggregate_csv.filename().c_str(), ex.what()));
    }
  }
  c.require(names.size() == 11, "alpha curves collide on one file name");
}

struct Criterion {
  int id;
  const char* name;
  void (*body)(Check&, RunCache&);
};

const Criterion kCriteria[] = {
    {1, "message products match brute-force trajectory enumeration", check_message_products},
    {2, "analytic loss gradients match finite differences", check_gradients},
    {3, "shaping preserves greedy policies and shifts Q by the potential",
     check_policy_invariance},
    {4, "trained shaping speeds up four-rooms and trap gridworlds", check_learning_speedup},
    {5, "trained potential agrees with the exact message potential", check_potential_agreement},
    {6, "shaping flattens the two-arm chain's lambda sensitivity", check_toy_chain},
    {7, "sampled-policy kernels never beat the uniform walk's entropy", check_entropy_bound},
    {8, "stronger smoothing lowers the potential's graph energy", check_smoothing_energy},
    {9, "a pure plain mix reproduces the unshaped run bit for bit", check_plain_mix_identity},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0, ran = 0;
  RunCache cache;
  for (const Criterion& cr : kCriteria) {
    if (!wanted.empty() && !wanted.count(cr.id)) continue;
    ++ran;
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(check, cache);
    } catch (const std::exception& ex) {
      check.fail(fmt("exception: %s", ex.what()));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %d. %s (%.1fs)\n", check.ok() ? "PASS" : "FAIL", cr.id, cr.name, secs);
    for (const std::string& msg : check.fails) std::printf("       - %s\n", msg.c_str());
    std::fflush(stdout);
    if (!check.ok()) ++failed;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
