#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "potshape/agent.hpp"
#include "potshape/envs.hpp"
#include "potshape/gcn.hpp"
#include "potshape/inference.hpp"
#include "potshape/shaping.hpp"
#include "potshape/toy.hpp"

namespace potshape {

/// One training run: environment, potential provider and agent settings.
struct RunConfig {
  std::string env_name = "fourrooms";
  Provenance provenance = Provenance::Gcn;
  int episodes = 300;
  AgentConfig agent;
  GcnConfig gcn;           // seed is replaced by the per-run seed
  int retrain_every = 1;   // episodes between potential refreshes
  bool full_graph = false; // train once on the exhaustive transition graph
                           // before the first episode and keep the result,
                           // instead of refreshing on the sampled graph
  bool reset_graph = false;
  double constant_value = 0.5;
  int message_horizon = 0; // 0 uses the environment's step limit
  Collapse collapse = Collapse::MeanOverTime;
};

struct EpisodeStat {
  int steps = 0;
  double discounted_return = 0.0;
  long cumulative_steps = 0;
};

struct ExperimentTrace {
  std::vector<EpisodeStat> episodes;
  AgentState final_agent;
  PotentialTable final_potential;
  TrajectoryGraph graph;
  std::optional<GcnModel> model;  // present for the trained provider
};

/// Runs the training loop for one seed: roll out, grow the graph,
/// refresh the potential on the configured cadence, update the agent
/// from mixed returns. Environment and model randomness come from
/// separate streams, so the action/transition draws do not depend on
/// the potential provider.
ExperimentTrace run_experiment(const Env& env, const RunConfig& cfg, uint64_t seed);

struct SuiteConfig {
  RunConfig run;
  std::vector<uint64_t> seeds;
  std::filesystem::path out_dir;
  int workers = 0;             // 0 picks the hardware concurrency
  bool emit_potentials = true; // per-seed final potential CSVs
};

struct SeedOutcome {
  uint64_t seed = 0;
  bool ok = false;
  std::string error;
  ExperimentTrace trace;
};

struct SuiteResult {
  std::vector<SeedOutcome> outcomes;  // in seed-list order
  std::filesystem::path aggregate_csv;
  std::vector<std::filesystem::path> trace_files;
};

/// Fans seeds out over worker threads, then aggregates. A failing seed
/// is recorded in its outcome without stopping the others. Emits one
/// trace CSV per seed (`seed,episode,steps,return,cum_steps`) and one
/// aggregate CSV (`episode,mean_cum_steps,std_cum_steps,stderr_cum_steps`)
/// over the seeds that succeeded.
SuiteResult run_suite(const Env& env, const SuiteConfig& cfg);

/// One suite per alpha value; each aggregate file name carries its alpha.
std::vector<SuiteResult> run_alpha_sweep(const Env& env, const SuiteConfig& base,
                                         const std::vector<double>& alphas);

/// Width x height grid of potential values in layout coordinates; wall
/// cells are NaN.
struct HeatmapGrid {
  int width = 0;
  int height = 0;
  Matrix values;
};

HeatmapGrid heatmap_from_potential(const PotentialTable& phi, const GridLayout& layout);
void write_heatmap_csv(const HeatmapGrid& grid, std::ostream& out);
HeatmapGrid parse_heatmap_csv(std::istream& in);

struct PotentialComparison {
  double spearman = 0.0;      // rank correlation with average ranks on ties
  double max_abs_diff = 0.0;  // sup distance after max-normalizing both tables
};

PotentialComparison compare_potentials(const PotentialTable& a, const PotentialTable& b);

void write_potential_csv(const PotentialTable& phi, std::ostream& out);
PotentialTable parse_potential_csv(std::istream& in);

void write_toy_sweep_csv(const std::vector<ToySweepPoint>& points, std::ostream& out);

/// Per-state spread of the actor's per-visit targets across rollouts of
/// a fixed policy, with the plain lambda-return target versus the mixed
/// target that folds in the potential. Descriptive diagnostic only.
struct GradientVarianceRow {
  int state = 0;
  long visits = 0;
  double variance_plain = 0.0;
  double variance_mixed = 0.0;
};

std::vector<GradientVarianceRow> gradient_variance(const Env& env, const PotentialTable& phi,
                                                   const AgentConfig& agent_cfg, int rollouts,
                                                   uint64_t seed);
void write_gradient_variance_csv(const std::vector<GradientVarianceRow>& rows, std::ostream& out);

/// Plain-text `key=value` configuration; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(std::istream& in);

/// Reads back any CSV this harness emits: '#' comment lines are
/// skipped and the first remaining line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(std::istream& in);

/// Stable tag for output file names: provenance, alpha and a hash of the
/// remaining run settings.
std::string config_tag(const RunConfig& cfg);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population (divide by n)
};

MeanStd mean_std_one_pass(const std::vector<double>& xs);
MeanStd mean_std_two_pass(const std::vector<double>& xs);

/// One-sided paired test of mean(x - y) < 0; returns the p-value.
double paired_t_pvalue_less(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace potshape
