#pragma once

#include <functional>
#include <random>
#include <vector>

#include "potshape/gcn.hpp"
#include "potshape/graph.hpp"
#include "potshape/inference.hpp"
#include "potshape/mdp.hpp"

namespace potshape::testing {

/// Dense random MDP, validated. The last `k` states (k random, possibly
/// zero) are absorbing zero-reward terminals; the start distribution
/// covers the non-terminal states.
inline MdpSpec random_mdp(std::mt19937_64& rng, int max_states = 5, int max_actions = 3,
                          bool with_terminals = true) {
  std::uniform_int_distribution<int> state_d(2, max_states);
  std::uniform_int_distribution<int> action_d(2, max_actions);
  const int s_n = state_d(rng);
  const int a_n = action_d(rng);

  MdpSpec m;
  m.num_states = s_n;
  m.num_actions = a_n;
  m.gamma = 0.9;
  m.max_steps = 50;
  m.terminal.assign(static_cast<size_t>(s_n), 0);
  int terminals = 0;
  if (with_terminals && s_n > 2)
    terminals = std::uniform_int_distribution<int>(0, s_n - 2)(rng);
  for (int s = s_n - terminals; s < s_n; ++s) m.terminal[static_cast<size_t>(s)] = 1;

  std::gamma_distribution<double> weight(1.0, 1.0);
  m.transition.assign(static_cast<size_t>(a_n), Matrix::Zero(s_n, s_n));
  m.reward = Matrix::Zero(s_n, a_n);
  std::uniform_real_distribution<double> reward_d(-2.0, 2.0);
  for (int s = 0; s < s_n; ++s)
    for (int a = 0; a < a_n; ++a) {
      Matrix& p = m.transition[static_cast<size_t>(a)];
      if (m.is_terminal(s)) {
        p(s, s) = 1.0;
        continue;
      }
      double total = 0.0;
      for (int t = 0; t < s_n; ++t) {
        p(s, t) = weight(rng) + 1e-3;
        total += p(s, t);
      }
      p.row(s) /= total;
      m.reward(s, a) = reward_d(rng);
    }

  m.start_distribution = Vector::Zero(s_n);
  double total = 0.0;
  for (int s = 0; s < s_n; ++s)
    if (!m.is_terminal(s)) {
      m.start_distribution[s] = weight(rng) + 1e-3;
      total += m.start_distribution[s];
    }
  m.start_distribution /= total;

  validate(m);
  return m;
}

/// Random row-stochastic policy.
inline Matrix random_policy(std::mt19937_64& rng, int num_states, int num_actions) {
  std::gamma_distribution<double> weight(1.0, 1.0);
  Matrix pi(num_states, num_actions);
  for (int s = 0; s < num_states; ++s) {
    double total = 0.0;
    for (int a = 0; a < num_actions; ++a) {
      pi(s, a) = weight(rng) + 1e-3;
      total += pi(s, a);
    }
    pi.row(s) /= total;
  }
  return pi;
}

/// Exhaustive trajectory sum: out[t](s, a) is the total weight
///   start(s_0) * prod_k prior * prod_k optimality(s_k, a_k)
///                              * prod_{k<H-1} P(s_{k+1} | s_k, a_k)
/// over all length-`horizon` state-action trajectories passing through
/// (s, a) at time t. The independent reference for the message product.
inline std::vector<Matrix> enumerate_message_products(const MdpSpec& mdp, int horizon) {
  const OptimalityModel model = OptimalityModel::from(mdp);
  std::vector<Matrix> mass(static_cast<size_t>(horizon),
                           Matrix::Zero(mdp.num_states, mdp.num_actions));
  std::vector<std::pair<int, int>> path(static_cast<size_t>(horizon));

  std::function<void(int, int, double)> walk = [&](int t, int s, double w) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      const double wa = w * model.action_prior * model.optimality(s, a);
      path[static_cast<size_t>(t)] = {s, a};
      if (t == horizon - 1) {
        for (int k = 0; k < horizon; ++k)
          mass[static_cast<size_t>(k)](path[static_cast<size_t>(k)].first,
                                       path[static_cast<size_t>(k)].second) += wa;
        continue;
      }
      const Matrix& p = mdp.transition[static_cast<size_t>(a)];
      for (int next = 0; next < mdp.num_states; ++next)
        if (p(s, next) > 0.0) walk(t + 1, next, wa * p(s, next));
    }
  };
  for (int s = 0; s < mdp.num_states; ++s)
    if (mdp.start_distribution[s] > 0.0) walk(0, s, mdp.start_distribution[s]);
  return mass;
}

/// Undoes the per-slice normalisation: entry t carries the product of
/// recorded scales from the table's base slice up to (and including) t.
inline std::vector<Matrix> unnormalized_forward(const MessageTable& fw) {
  std::vector<Matrix> out(fw.slices.size());
  double acc = 1.0;
  for (size_t t = 0; t < fw.slices.size(); ++t) {
    acc *= fw.scale[t];
    out[t] = fw.slices[t] * acc;
  }
  return out;
}

inline std::vector<Matrix> unnormalized_backward(const MessageTable& bw) {
  std::vector<Matrix> out(bw.slices.size());
  double acc = 1.0;
  for (size_t i = bw.slices.size(); i-- > 0;) {
    acc *= bw.scale[i];
    out[i] = bw.slices[i] * acc;
  }
  return out;
}

/// Central finite difference of the training loss in one weight entry.
inline double fd_loss_derivative(GcnModel& model, const SpectralOps& ops,
                                 const BaseCaseSet& bases, bool in_w0, int i, int j,
                                 double step) {
  const Matrix w0 = model.w0(), w1 = model.w1();
  Matrix p0 = w0, p1 = w1;
  (in_w0 ? p0(i, j) : p1(i, j)) += step;
  model.set_weights(p0, p1);
  const double up = model.loss(ops, bases);
  p0 = w0;
  p1 = w1;
  (in_w0 ? p0(i, j) : p1(i, j)) -= step;
  model.set_weights(p0, p1);
  const double down = model.loss(ops, bases);
  model.set_weights(w0, w1);
  return (up - down) / (2.0 * step);
}

/// Connected random graph with start/end/reward markers, for model tests.
inline TrajectoryGraph random_marked_graph(std::mt19937_64& rng, int max_nodes = 10) {
  const int n = std::uniform_int_distribution<int>(3, max_nodes)(rng);
  TrajectoryGraph g;
  for (int v = 1; v < n; ++v)
    g.add_edge(std::uniform_int_distribution<int>(0, v - 1)(rng), v);
  const int extra = std::uniform_int_distribution<int>(0, n)(rng);
  for (int k = 0; k < extra; ++k) {
    const int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
    if (a != b) g.add_edge(a, b);
  }
  g.mark_first(0);
  g.mark_last(n - 1);
  std::uniform_real_distribution<double> reward(-2.0, 2.0);
  const int marked = std::uniform_int_distribution<int>(1, std::max(1, n / 2))(rng);
  for (int k = 0; k < marked; ++k)
    g.mark_reward(std::uniform_int_distribution<int>(0, n - 1)(rng), reward(rng));
  return g;
}

}  // namespace potshape::testing
