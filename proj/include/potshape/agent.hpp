#pragma once

#include <random>
#include <vector>

#include "potshape/mdp.hpp"
#include "potshape/shaping.hpp"

namespace potshape {

/// Which return stream the critic regresses on. Mixed runs ordinary
/// actor-critic on the blended reward r + (1 - alpha) * bonus, critic
/// included. Plain keeps the critic on the environment's own values; the
/// blend then telescopes to a potential baseline on the actor's target,
/// which in practice drowns the advantage signal in baseline noise, so
/// Mixed is the default.
enum class CriticTarget { Plain, Mixed };

struct AgentConfig {
  double actor_lr = 0.1;
  double critic_lr = 0.1;
  double temperature = 0.1;
  // Short-horizon lambda keeps the return target local. Reward information
  // then travels slowly on its own, which is the regime the shaping bonus
  // is built for: the bonus carries goal information in every single step.
  double lambda = 0.3;
  double alpha = 0.6;  // weight of the unshaped return in the mixed target
  CriticTarget critic_target = CriticTarget::Mixed;
};

struct AgentState {
  Matrix theta;  // S x A preference table; softmax of theta/temperature
  Vector v;      // S state values

  static AgentState zeros(int num_states, int num_actions);
};

Vector policy_probabilities(const AgentState& agent, int state, double temperature);

int sample_action(const AgentState& agent, int state, double temperature, std::mt19937_64& rng);

/// Samples one episode from the start distribution; stops on a terminal
/// transition or after mdp.max_steps steps (truncation leaves the final
/// transition's done flag unset).
std::vector<Transition> rollout(const MdpSpec& mdp, const AgentState& agent,
                                double temperature, std::mt19937_64& rng);

Vector plain_rewards(const std::vector<Transition>& episode);

/// Per-step r_t + gamma phi(s_{t+1}) - phi(s_t), with the successor
/// potential read as 0 on terminal transitions.
Vector shaped_rewards(const std::vector<Transition>& episode, const PotentialTable& phi,
                      double gamma);

/// Backward recursion G_t = r_t + gamma ((1 - lambda) v(s_{t+1}) + lambda G_{t+1});
/// the final step bootstraps v(s_T) when the episode was truncated and 0
/// when it terminated.
Vector lambda_returns(const std::vector<Transition>& episode, const Vector& rewards,
                      const Vector& v, double gamma, double lambda);

/// Sequential in-place update over the episode. At each step the policy
/// gradient uses the live preferences and critic, weighted by gamma^t:
///   theta(s_t, b) += actor_lr gamma^t (mixed_t - v(s_t)) (1[b = a_t] - pi(b|s_t)) / tau
/// and the critic then moves towards its configured return stream:
///   v(s_t) += critic_lr (target_t - v(s_t)).
/// The mixed target is alpha * plain_t + (1 - alpha) * shaped_t.
void update_from_episode(AgentState& agent, const std::vector<Transition>& episode,
                         const PotentialTable& phi, double gamma, const AgentConfig& cfg);

double discounted_return(const std::vector<Transition>& episode, double gamma);

}  // namespace potshape
