#include "potshape/dp.hpp"

#include <cmath>
#include <stdexcept>

namespace potshape {

namespace {
Matrix expected_reward(const MdpSpec& mdp, const TransitionReward& f) {
  Matrix r(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a) {
      const Matrix& P = mdp.transition[static_cast<size_t>(a)];
      double acc = 0.0;
      for (int t = 0; t < mdp.num_states; ++t)
        if (P(s, t) > 0.0) acc += P(s, t) * f(s, a, t);
      r(s, a) = acc;
    }
  return r;
}
}  // namespace

DpResult value_iteration(const MdpSpec& mdp, double tol, int max_iterations,
                         const TransitionReward& reward_override) {
  Matrix r = reward_override
                 ? expected_reward(mdp, reward_override)
                 : mdp.reward;

  DpResult res;
  res.v = Vector::Zero(mdp.num_states);
  res.q = Matrix::Zero(mdp.num_states, mdp.num_actions);
  for (int it = 0; it < max_iterations; ++it) {
    for (int a = 0; a < mdp.num_actions; ++a)
      res.q.col(a) = r.col(a) + mdp.gamma * (mdp.transition[static_cast<size_t>(a)] * res.v);
    Vector v_new = res.q.rowwise().maxCoeff();
    res.residual = (v_new - res.v).cwiseAbs().maxCoeff();
    res.v = v_new;
    res.iterations = it + 1;
    if (res.residual < tol) return res;
  }
  throw std::runtime_error("value_iteration did not converge");
}

Vector policy_evaluation(const MdpSpec& mdp, const Matrix& policy, double tol,
                         int max_iterations) {
  if (policy.rows() != mdp.num_states || policy.cols() != mdp.num_actions)
    throw std::invalid_argument("policy has wrong shape");

  // Collapse the policy into a single reward vector and kernel.
  Vector r = Vector::Zero(mdp.num_states);
  Matrix P = Matrix::Zero(mdp.num_states, mdp.num_states);
  for (int a = 0; a < mdp.num_actions; ++a) {
    r += policy.col(a).cwiseProduct(mdp.reward.col(a));
    P += policy.col(a).asDiagonal() * mdp.transition[static_cast<size_t>(a)];
  }

  Vector v = Vector::Zero(mdp.num_states);
  for (int it = 0; it < max_iterations; ++it) {
    Vector v_new = r + mdp.gamma * (P * v);
    double diff = (v_new - v).cwiseAbs().maxCoeff();
    v = v_new;
    if (diff < tol) return v;
  }
  throw std::runtime_error("policy_evaluation did not converge");
}

std::vector<std::vector<int>> greedy_sets(const Matrix& q, double tie_tol) {
  std::vector<std::vector<int>> sets(static_cast<size_t>(q.rows()));
  for (int s = 0; s < q.rows(); ++s) {
    double best = q.row(s).maxCoeff();
    for (int a = 0; a < q.cols(); ++a)
      if (q(s, a) >= best - tie_tol) sets[static_cast<size_t>(s)].push_back(a);
  }
  return sets;
}

}  // namespace potshape
