#pragma once

#include <functional>
#include <vector>

#include "potshape/mdp.hpp"

namespace potshape {

struct DpResult {
  Vector v;        // optimal state values
  Matrix q;        // S x A action values
  int iterations = 0;
  double residual = 0.0;  // final sup-norm change
};

/// Optional per-transition reward override. When set, the immediate
/// reward for (s, a, s') is taken from this function instead of the
/// reward table; used to evaluate shaped rewards that depend on the
/// successor state.
using TransitionReward = std::function<double(int s, int a, int s_next)>;

/// Value iteration to sup-norm tolerance `tol` on successive iterates.
DpResult value_iteration(const MdpSpec& mdp, double tol = 1e-13, int max_iterations = 200000,
                         const TransitionReward& reward_override = nullptr);

/// Exact policy evaluation by iteration. `policy` is S x A, rows sum
/// to 1.
Vector policy_evaluation(const MdpSpec& mdp, const Matrix& policy, double tol = 1e-13,
                         int max_iterations = 200000);

/// Per-state sets of actions within `tie_tol` of the row maximum.
std::vector<std::vector<int>> greedy_sets(const Matrix& q, double tie_tol = 1e-9);

}  // namespace potshape
