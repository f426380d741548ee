#pragma once

#include <vector>

#include "potshape/mdp.hpp"
#include "potshape/shaping.hpp"

namespace potshape {

/// Trajectory-optimality observation model: each step is "good" with
/// probability sigmoid(reward(s, a)), and actions carry a uniform prior.
/// Rewards of zero give 1/2, so unrewarded steps are uninformative.
struct OptimalityModel {
  Matrix optimality;          // S x A, sigmoid of the reward table
  double action_prior = 0.0;  // 1 / num_actions

  static OptimalityModel from(const MdpSpec& mdp);
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Time-indexed message slices, each sum-normalised over (state, action)
/// with the pre-normalisation sum recorded. slices[t] corresponds to
/// time t for both directions; a backward table is filled from the last
/// slice toward the first.
struct MessageTable {
  std::vector<Matrix> slices;
  std::vector<double> scale;

  int horizon() const { return static_cast<int>(slices.size()); }
};

/// Backward recursion
///   beta_t(s,a) = opt(s,a) * sum_{s'} P(s'|s,a) * prior * sum_{a'} beta_{t+1}(s',a')
/// with base case beta_{H-1} = opt. Horizon must be >= 1.
MessageTable backward_messages(const MdpSpec& mdp, const OptimalityModel& model, int horizon);

/// Forward recursion
///   alpha_t(s,a) = prior * sum_{s0,a0} P(s|s0,a0) * opt(s0,a0) * alpha_{t-1}(s0,a0)
/// with base case alpha_0(s,a) = start(s) * prior.
MessageTable forward_messages(const MdpSpec& mdp, const OptimalityModel& model, int horizon);

enum class Collapse {
  MeanOverTime,  // average the per-slice state posteriors
  FixedPoint,    // stationary messages, iterated to tolerance 1e-10
};

/// State potential from the product of action-marginalised forward and
/// backward messages, collapsed over time and rescaled so the maximum
/// is 1. Values lie in [0, 1].
Vector potential_from_messages(const MdpSpec& mdp, const OptimalityModel& model, int horizon,
                               Collapse collapse = Collapse::MeanOverTime);

/// Convenience wrapper producing a shaping-ready table.
PotentialTable alpha_beta_potential(const MdpSpec& mdp, int horizon,
                                    Collapse collapse = Collapse::MeanOverTime);

}  // namespace potshape
