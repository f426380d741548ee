#pragma once

#include <vector>

#include "potshape/mdp.hpp"
#include "potshape/shaping.hpp"

namespace potshape {

struct ToySweepConfig {
  std::vector<double> lambdas;   // defaults to {0.1, 0.2, ..., 1.0} when empty
  long max_iterations = 1000000; // censoring bound
  int stable_window = 10;        // consecutive sweeps the greedy choice must hold
  /// The sweeps use undiscounted returns regardless of the chain's own
  /// discount: with discounting, a bounded potential cannot keep the
  /// long arm preferred at every lookahead depth, and the diagnostic
  /// stops separating the two reward streams.
  double sweep_gamma = 1.0;
};

struct ToySweepPoint {
  double lambda = 0.0;
  long plain_iterations = 0;
  long shaped_iterations = 0;
  bool plain_censored = false;
  bool shaped_censored = false;
};

/// Synchronous expected lambda-return sweeps on a deterministic two-arm
/// chain: every sweep recomputes, from the previous sweep's values, the
/// lambda-return of each state along both arms and of both start-state
/// actions. Returns the first iteration whose greedy start action is the
/// long arm and remains so for cfg.stable_window consecutive sweeps;
/// returns cfg.max_iterations when that never happens (censoring, flagged
/// via *_censored in the sweep results). The chain must be deterministic
/// with a single start state and exactly two actions.
long iterations_to_long_arm(const MdpSpec& chain, const PotentialTable& phi, double lambda,
                            const ToySweepConfig& cfg, bool* censored = nullptr);

/// Runs the sweep per lambda under the plain rewards (zero potential)
/// and under rewards shaped by `phi`.
std::vector<ToySweepPoint> toy_lambda_sweep(const MdpSpec& chain, const PotentialTable& phi,
                                            const ToySweepConfig& cfg);

}  // namespace potshape
