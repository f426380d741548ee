#include "potshape/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "potshape/random.hpp"

namespace potshape {

namespace fs = std::filesystem;

namespace {

std::string g17(double x) {
  if (std::isnan(x)) return "NaN";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_alpha(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
  return f;
}

PotentialTable initial_potential(const Env& env, const RunConfig& cfg) {
  const int n = env.mdp.num_states;
  switch (cfg.provenance) {
    case Provenance::Zero:
      return PotentialTable::zero(n);
    case Provenance::Constant:
      return PotentialTable::constant(n, cfg.constant_value);
    case Provenance::L2:
      if (!env.layout)
        throw std::invalid_argument("distance potential needs a grid environment");
      return l2_potential(*env.layout);
    case Provenance::AlphaBeta: {
      const int horizon = cfg.message_horizon > 0 ? cfg.message_horizon : env.mdp.max_steps;
      return alpha_beta_potential(env.mdp, horizon, cfg.collapse);
    }
    case Provenance::Gcn: {
      // Flat prior until the first training call.
      PotentialTable t = PotentialTable::constant(n, 0.5);
      t.provenance = Provenance::Gcn;
      return t;
    }
  }
  throw std::logic_error("initial_potential: unhandled provenance");
}

// Welford accumulator for per-state target spread.
struct Spread {
  long n = 0;
  double mean_p = 0.0, m2_p = 0.0;
  double mean_m = 0.0, m2_m = 0.0;

  void add(double p, double m) {
    ++n;
    double d = p - mean_p;
    mean_p += d / static_cast<double>(n);
    m2_p += d * (p - mean_p);
    d = m - mean_m;
    mean_m += d / static_cast<double>(n);
    m2_m += d * (m - mean_m);
  }
};

}  // namespace

ExperimentTrace run_experiment(const Env& env, const RunConfig& cfg, uint64_t seed) {
  const MdpSpec& mdp = env.mdp;
  if (cfg.episodes < 1) throw std::invalid_argument("run_experiment: episodes < 1");
  if (cfg.retrain_every < 1) throw std::invalid_argument("run_experiment: retrain cadence < 1");

  std::mt19937_64 env_rng = env_stream(seed);
  GcnConfig gcn_cfg = cfg.gcn;
  gcn_cfg.seed = seed;

  ExperimentTrace trace;
  AgentState agent = AgentState::zeros(mdp.num_states, mdp.num_actions);
  PotentialTable phi = initial_potential(env, cfg);
  if (cfg.provenance == Provenance::Gcn) trace.model.emplace(gcn_cfg);
  if (cfg.provenance == Provenance::Gcn && cfg.full_graph) {
    trace.graph = build_full_graph(mdp);
    phi = train_potential(*trace.model, trace.graph, mdp.num_states);
  }

  long cum = 0;
  for (int e = 0; e < cfg.episodes; ++e) {
    const std::vector<Transition> episode = rollout(mdp, agent, cfg.agent.temperature, env_rng);
    if (!cfg.full_graph) {
      if (cfg.reset_graph) trace.graph.reset();
      for (const Transition& t : episode) trace.graph.add_transition(t);
      if (!episode.empty() && !episode.back().done)
        trace.graph.end_episode(episode.back().next_state);
    }

    if (cfg.provenance == Provenance::Gcn && !cfg.full_graph &&
        (e + 1) % cfg.retrain_every == 0) {
      // A reset graph renumbers nodes, so stale rows must not carry over.
      if (cfg.reset_graph) trace.model.emplace(gcn_cfg);
      phi = train_potential(*trace.model, trace.graph, mdp.num_states);
    }

    update_from_episode(agent, episode, phi, mdp.gamma, cfg.agent);

    EpisodeStat stat;
    stat.steps = static_cast<int>(episode.size());
    stat.discounted_return = discounted_return(episode, mdp.gamma);
    cum += stat.steps;
    stat.cumulative_steps = cum;
    trace.episodes.push_back(stat);
  }

  trace.final_agent = std::move(agent);
  trace.final_potential = std::move(phi);
  return trace;
}

std::string config_tag(const RunConfig& cfg) {
  std::string canon = cfg.env_name + "|" + to_string(cfg.provenance) + "|" +
                      g17(cfg.agent.alpha) + "|" + g17(cfg.gcn.eta) + "|" +
                      g17(cfg.agent.lambda) + "|" + std::to_string(cfg.episodes) + "|" +
                      std::to_string(cfg.retrain_every) + "|" +
                      (cfg.full_graph ? "full" : "sampled") + "|" +
                      (cfg.reset_graph ? "reset" : "keep") + "|" +
                      std::to_string(cfg.gcn.hidden) + "|" + g17(cfg.gcn.learning_rate) + "|" +
                      std::to_string(cfg.gcn.iterations) + "|" + g17(cfg.agent.actor_lr) + "|" +
                      g17(cfg.agent.critic_lr) + "|" + g17(cfg.agent.temperature) + "|" +
                      g17(cfg.constant_value) + "|" + std::to_string(cfg.message_horizon) + "|" +
                      (cfg.collapse == Collapse::MeanOverTime ? "mean" : "fixed") + "|" +
                      (cfg.agent.critic_target == CriticTarget::Plain ? "plain" : "mixed");
  char hash[20];
  std::snprintf(hash, sizeof hash, "%08llx",
                static_cast<unsigned long long>(fnv1a(canon) & 0xffffffffULL));
  return cfg.env_name + "_" + to_string(cfg.provenance) + "_a" + fmt_alpha(cfg.agent.alpha) +
         "_" + hash;
}

SuiteResult run_suite(const Env& env, const SuiteConfig& cfg) {
  if (cfg.seeds.empty()) throw std::invalid_argument("run_suite: empty seed list");
  fs::create_directories(cfg.out_dir);
  const std::string tag = config_tag(cfg.run);

  SuiteResult res;
  res.outcomes.resize(cfg.seeds.size());

  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i; (i = next.fetch_add(1)) < cfg.seeds.size();) {
      SeedOutcome& o = res.outcomes[i];
      o.seed = cfg.seeds[i];
      try {
        o.trace = run_experiment(env, cfg.run, o.seed);
        o.ok = true;
      } catch (const std::exception& ex) {
        o.ok = false;
        o.error = ex.what();
      }
    }
  };

  int workers = cfg.workers > 0 ? cfg.workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, static_cast<int>(cfg.seeds.size())));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();

  int ok_count = 0;
  for (const SeedOutcome& o : res.outcomes) ok_count += o.ok ? 1 : 0;
  if (ok_count == 0) {
    std::string first;
    for (const SeedOutcome& o : res.outcomes)
      if (!o.ok) {
        first = o.error;
        break;
      }
    throw std::runtime_error("run_suite: every seed failed; first error: " + first);
  }

  for (const SeedOutcome& o : res.outcomes) {
    if (!o.ok) continue;
    fs::path p = cfg.out_dir / ("trace_" + tag + "_seed" + std::to_string(o.seed) + ".csv");
    std::ofstream f = open_out(p);
    f << "seed,episode,steps,return,cum_steps\n";
    for (size_t e = 0; e < o.trace.episodes.size(); ++e) {
      const EpisodeStat& st = o.trace.episodes[e];
      f << o.seed << "," << e << "," << st.steps << "," << g17(st.discounted_return) << ","
        << st.cumulative_steps << "\n";
    }
    res.trace_files.push_back(p);

    if (cfg.emit_potentials) {
      fs::path pp = cfg.out_dir / ("potential_" + tag + "_seed" + std::to_string(o.seed) + ".csv");
      std::ofstream pf = open_out(pp);
      write_potential_csv(o.trace.final_potential, pf);
    }
  }

  res.aggregate_csv = cfg.out_dir / ("curve_" + tag + ".csv");
  std::ofstream agg = open_out(res.aggregate_csv);
  agg << "episode,mean_cum_steps,std_cum_steps,stderr_cum_steps\n";
  for (int e = 0; e < cfg.run.episodes; ++e) {
    std::vector<double> xs;
    for (const SeedOutcome& o : res.outcomes)
      if (o.ok) xs.push_back(static_cast<double>(o.trace.episodes[static_cast<size_t>(e)]
                                                     .cumulative_steps));
    const MeanStd ms = mean_std_one_pass(xs);
    agg << e << "," << g17(ms.mean) << "," << g17(ms.stddev) << ","
        << g17(ms.stddev / std::sqrt(static_cast<double>(xs.size()))) << "\n";
  }
  return res;
}

std::vector<SuiteResult> run_alpha_sweep(const Env& env, const SuiteConfig& base,
                                         const std::vector<double>& alphas) {
  if (alphas.empty()) throw std::invalid_argument("run_alpha_sweep: empty alpha list");
  std::vector<SuiteResult> out;
  for (double a : alphas) {
    if (a < 0.0 || a > 1.0) throw std::invalid_argument("run_alpha_sweep: alpha outside [0,1]");
    SuiteConfig cfg = base;
    cfg.run.agent.alpha = a;
    out.push_back(run_suite(env, cfg));
  }
  return out;
}

HeatmapGrid heatmap_from_potential(const PotentialTable& phi, const GridLayout& layout) {
  HeatmapGrid g;
  g.width = layout.width;
  g.height = layout.height;
  g.values = Matrix::Constant(layout.height, layout.width,
                              std::numeric_limits<double>::quiet_NaN());
  for (int r = 0; r < layout.height; ++r)
    for (int c = 0; c < layout.width; ++c)
      if (!layout.is_wall(r, c)) g.values(r, c) = phi(layout.state_of(r, c));
  return g;
}

void write_heatmap_csv(const HeatmapGrid& grid, std::ostream& out) {
  out << "# heatmap " << grid.width << " " << grid.height << "\n";
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      if (c) out << ",";
      out << g17(grid.values(r, c));
    }
    out << "\n";
  }
}

HeatmapGrid parse_heatmap_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("heatmap: empty input");
  HeatmapGrid g;
  if (std::sscanf(line.c_str(), "# heatmap %d %d", &g.width, &g.height) != 2 || g.width < 1 ||
      g.height < 1)
    throw std::runtime_error("heatmap: bad header line");
  g.values.resize(g.height, g.width);
  for (int r = 0; r < g.height; ++r) {
    if (!std::getline(in, line)) throw std::runtime_error("heatmap: truncated grid");
    const std::vector<std::string> fields = split_commas(line);
    if (static_cast<int>(fields.size()) != g.width)
      throw std::runtime_error("heatmap: row width mismatch");
    for (int c = 0; c < g.width; ++c) g.values(r, c) = std::stod(fields[static_cast<size_t>(c)]);
  }
  return g;
}

namespace {

Vector average_ranks(const Vector& x) {
  const auto n = x.size();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
  Vector ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x(order[static_cast<size_t>(j + 1)]) == x(order[static_cast<size_t>(i)]))
      ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based positions i+1 .. j+1
    for (Eigen::Index k = i; k <= j; ++k) ranks(order[static_cast<size_t>(k)]) = avg;
    i = j + 1;
  }
  return ranks;
}

Vector max_normalized(const Vector& x) {
  const double m = x.maxCoeff();
  return m > 0.0 ? Vector(x / m) : x;
}

}  // namespace

PotentialComparison compare_potentials(const PotentialTable& a, const PotentialTable& b) {
  if (a.phi.size() != b.phi.size())
    throw std::invalid_argument("compare_potentials: tables cover different state spaces");
  PotentialComparison out;
  if (a.phi.size() == 0) {
    out.spearman = 1.0;
    return out;
  }

  const Vector na = max_normalized(a.phi), nb = max_normalized(b.phi);
  out.max_abs_diff = (na - nb).cwiseAbs().maxCoeff();

  const Vector ra = average_ranks(a.phi), rb = average_ranks(b.phi);
  const double ma = ra.mean(), mb = rb.mean();
  const Vector ca = ra.array() - ma, cb = rb.array() - mb;
  const double va = ca.squaredNorm(), vb = cb.squaredNorm();
  if (va == 0.0 || vb == 0.0)
    out.spearman = va == vb ? 1.0 : 0.0;  // constant table(s); correlation undefined
  else
    out.spearman = ca.dot(cb) / std::sqrt(va * vb);
  return out;
}

void write_potential_csv(const PotentialTable& phi, std::ostream& out) {
  out << "# provenance " << to_string(phi.provenance) << " default " << g17(phi.default_phi)
      << "\n";
  out << "state,phi\n";
  for (Eigen::Index s = 0; s < phi.phi.size(); ++s) out << s << "," << g17(phi.phi(s)) << "\n";
}

PotentialTable parse_potential_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("potential: empty input");
  char prov[32] = {};
  double def = 0.0;
  if (std::sscanf(line.c_str(), "# provenance %31s default %lf", prov, &def) != 2)
    throw std::runtime_error("potential: bad provenance header");
  if (!std::getline(in, line) || trim(line) != "state,phi")
    throw std::runtime_error("potential: bad column header");

  std::vector<double> values;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_commas(line);
    if (fields.size() != 2) throw std::runtime_error("potential: bad row: " + line);
    const size_t s = std::stoul(fields[0]);
    if (s != values.size()) throw std::runtime_error("potential: rows out of order");
    values.push_back(std::stod(fields[1]));
  }
  PotentialTable t = PotentialTable::zero(static_cast<int>(values.size()));
  for (size_t s = 0; s < values.size(); ++s) t.phi(static_cast<Eigen::Index>(s)) = values[s];
  t.provenance = provenance_from_string(prov);
  t.default_phi = def;
  return t;
}

void write_toy_sweep_csv(const std::vector<ToySweepPoint>& points, std::ostream& out) {
  out << "lambda,plain_iterations,plain_censored,shaped_iterations,shaped_censored\n";
  for (const ToySweepPoint& p : points)
    out << g17(p.lambda) << "," << p.plain_iterations << "," << (p.plain_censored ? 1 : 0) << ","
        << p.shaped_iterations << "," << (p.shaped_censored ? 1 : 0) << "\n";
}

std::vector<GradientVarianceRow> gradient_variance(const Env& env, const PotentialTable& phi,
                                                   const AgentConfig& agent_cfg, int rollouts,
                                                   uint64_t seed) {
  if (rollouts < 2) throw std::invalid_argument("gradient_variance: needs at least 2 rollouts");
  const MdpSpec& mdp = env.mdp;
  const AgentState agent = AgentState::zeros(mdp.num_states, mdp.num_actions);
  std::mt19937_64 rng = env_stream(seed);

  std::vector<Spread> acc(static_cast<size_t>(mdp.num_states));
  for (int k = 0; k < rollouts; ++k) {
    const std::vector<Transition> episode = rollout(mdp, agent, agent_cfg.temperature, rng);
    if (episode.empty()) continue;
    const Vector gp = lambda_returns(episode, plain_rewards(episode), agent.v, mdp.gamma,
                                     agent_cfg.lambda);
    const Vector gs = lambda_returns(episode, shaped_rewards(episode, phi, mdp.gamma), agent.v,
                                     mdp.gamma, agent_cfg.lambda);
    for (size_t t = 0; t < episode.size(); ++t) {
      const auto ti = static_cast<Eigen::Index>(t);
      acc[static_cast<size_t>(episode[t].state)].add(
          gp(ti), mix_returns(gp(ti), gs(ti), agent_cfg.alpha));
    }
  }

  std::vector<GradientVarianceRow> rows;
  for (int s = 0; s < mdp.num_states; ++s) {
    const Spread& a = acc[static_cast<size_t>(s)];
    if (a.n == 0) continue;
    GradientVarianceRow r;
    r.state = s;
    r.visits = a.n;
    r.variance_plain = a.m2_p / static_cast<double>(a.n);
    r.variance_mixed = a.m2_m / static_cast<double>(a.n);
    rows.push_back(r);
  }
  return rows;
}

void write_gradient_variance_csv(const std::vector<GradientVarianceRow>& rows,
                                 std::ostream& out) {
  out << "state,visits,variance_plain,variance_mixed\n";
  for (const GradientVarianceRow& r : rows)
    out << r.state << "," << r.visits << "," << g17(r.variance_plain) << ","
        << g17(r.variance_mixed) << "\n";
}

std::map<std::string, std::string> parse_config_file(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split_commas(line);
      continue;
    }
    std::vector<std::string> row = split_commas(line);
    if (row.size() != t.header.size())
      throw std::runtime_error("csv row has " + std::to_string(row.size()) + " fields, header " +
                               std::to_string(t.header.size()));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw std::runtime_error("csv: no header line");
  return t;
}

MeanStd mean_std_one_pass(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_std: empty sample");
  MeanStd out;
  double m2 = 0.0;
  long n = 0;
  for (double x : xs) {
    ++n;
    const double d = x - out.mean;
    out.mean += d / static_cast<double>(n);
    m2 += d * (x - out.mean);
  }
  out.stddev = std::sqrt(m2 / static_cast<double>(n));
  return out;
}

MeanStd mean_std_two_pass(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_std: empty sample");
  MeanStd out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += (x - out.mean) * (x - out.mean);
  out.stddev = std::sqrt(acc / static_cast<double>(xs.size()));
  return out;
}

double paired_t_pvalue_less(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("paired test: length mismatch");
  const size_t n = x.size();
  if (n < 2) throw std::invalid_argument("paired test: needs at least 2 pairs");

  double mean = 0.0;
  for (size_t i = 0; i < n; ++i) mean += x[i] - y[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) return mean < 0.0 ? 0.0 : 1.0;

  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::cdf(dist, t);
}

}  // namespace potshape
