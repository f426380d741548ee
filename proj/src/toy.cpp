#include "potshape/toy.hpp"

#include <cmath>
#include <stdexcept>

namespace potshape {
namespace {

int single_start_state(const MdpSpec& mdp) {
  int s0 = -1;
  for (int s = 0; s < mdp.num_states; ++s)
    if (mdp.start_distribution[s] > 0.0) {
      if (s0 >= 0) throw std::invalid_argument("toy sweep: more than one start state");
      s0 = s;
    }
  if (s0 < 0) throw std::invalid_argument("toy sweep: no start state");
  return s0;
}

int deterministic_successor(const MdpSpec& mdp, int s, int a) {
  const Matrix& p = mdp.transition[static_cast<size_t>(a)];
  int succ = -1;
  for (int t = 0; t < mdp.num_states; ++t)
    if (p(s, t) > 0.0) {
      if (p(s, t) != 1.0 || succ >= 0)
        throw std::invalid_argument("toy sweep: chain must be deterministic");
      succ = t;
    }
  return succ;
}

struct Arm {
  std::vector<int> states;    // successor chain, start state excluded
  std::vector<double> reward; // reward[i]: entering states[i]
};

// Follows one action from the start state to a terminal.
Arm trace_arm(const MdpSpec& mdp, int s0, int a) {
  Arm arm;
  int s = s0;
  while (!mdp.is_terminal(s)) {
    const int next = deterministic_successor(mdp, s, a);
    arm.reward.push_back(mdp.reward(s, a));
    arm.states.push_back(next);
    s = next;
    if (arm.states.size() > static_cast<size_t>(mdp.num_states))
      throw std::invalid_argument("toy sweep: arm does not reach a terminal");
  }
  return arm;
}

}  // namespace

long iterations_to_long_arm(const MdpSpec& chain, const PotentialTable& phi, double lambda,
                            const ToySweepConfig& cfg, bool* censored) {
  if (chain.num_actions != 2) throw std::invalid_argument("toy sweep: chain needs two actions");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("toy sweep: lambda outside [0,1]");
  const int s0 = single_start_state(chain);
  const double gamma = cfg.sweep_gamma;

  Arm arms[2] = {trace_arm(chain, s0, 0), trace_arm(chain, s0, 1)};
  const int long_arm = arms[1].states.size() >= arms[0].states.size() ? 1 : 0;

  // Shaped per-step rewards along each arm; the plain sweep passes a
  // zero potential so both streams share one code path.
  std::vector<double> shaped[2];
  for (int a = 0; a < 2; ++a) {
    const auto& arm = arms[a];
    shaped[a].resize(arm.states.size());
    for (size_t i = 0; i < arm.states.size(); ++i) {
      const int src = i == 0 ? s0 : arm.states[i - 1];
      Transition t;
      t.state = src;
      t.action = a;
      t.reward = arm.reward[i];
      t.next_state = arm.states[i];
      t.done = chain.is_terminal(arm.states[i]);
      shaped[a][i] = t.reward + shaping_bonus(phi, t, gamma);
    }
  }

  Vector v = Vector::Zero(chain.num_states);
  Vector fresh[2];
  long commit_start = 0;  // first sweep of the current all-long-arm streak
  int streak = 0;
  for (long k = 1; k <= cfg.max_iterations; ++k) {
    double q[2];
    for (int a = 0; a < 2; ++a) {
      const Arm& arm = arms[a];
      const auto n = static_cast<Eigen::Index>(arm.states.size());
      fresh[a].resize(n);
      double ahead = 0.0;
      for (Eigen::Index i = n - 1; i >= 0; --i) {
        const int s = arm.states[static_cast<size_t>(i)];
        const bool terminal = chain.is_terminal(s);
        const double boot = terminal ? 0.0 : v(s);
        fresh[a](i) = shaped[a][static_cast<size_t>(i)] +
                      gamma * ((1.0 - lambda) * boot + lambda * ahead);
        // The continuation for the next-earlier step is this step's full
        // return; only the landing beyond the arm end contributes zero.
        ahead = fresh[a](i);
      }
      q[a] = fresh[a](0);
    }

    // Synchronous write-back after both arms were evaluated on old values.
    for (int a = 0; a < 2; ++a)
      for (Eigen::Index i = 0; i < fresh[a].size(); ++i) {
        const int s = arms[a].states[static_cast<size_t>(i)];
        if (!chain.is_terminal(s)) v(s) = fresh[a](i);
      }
    v(s0) = std::max(q[0], q[1]);

    if (q[long_arm] > q[1 - long_arm]) {
      if (streak == 0) commit_start = k;
      if (++streak >= cfg.stable_window) {
        if (censored) *censored = false;
        return commit_start;
      }
    } else {
      streak = 0;
    }
  }
  if (censored) *censored = true;
  return cfg.max_iterations;
}

std::vector<ToySweepPoint> toy_lambda_sweep(const MdpSpec& chain, const PotentialTable& phi,
                                            const ToySweepConfig& cfg) {
  std::vector<double> lambdas = cfg.lambdas;
  if (lambdas.empty())
    for (int i = 1; i <= 10; ++i) lambdas.push_back(0.1 * i);

  const PotentialTable zero = PotentialTable::zero(chain.num_states);
  std::vector<ToySweepPoint> out;
  for (double lam : lambdas) {
    ToySweepPoint p;
    p.lambda = lam;
    p.plain_iterations = iterations_to_long_arm(chain, zero, lam, cfg, &p.plain_censored);
    p.shaped_iterations = iterations_to_long_arm(chain, phi, lam, cfg, &p.shaped_censored);
    out.push_back(p);
  }
  return out;
}

}  // namespace potshape
