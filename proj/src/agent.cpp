#include "potshape/agent.hpp"

#include <cmath>
#include <stdexcept>

#include "potshape/random.hpp"

namespace potshape {

AgentState AgentState::zeros(int num_states, int num_actions) {
  AgentState a;
  a.theta = Matrix::Zero(num_states, num_actions);
  a.v = Vector::Zero(num_states);
  return a;
}

Vector policy_probabilities(const AgentState& agent, int state, double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("policy_probabilities: temperature <= 0");
  Vector logits = agent.theta.row(state) / temperature;
  logits.array() -= logits.maxCoeff();
  Vector p = logits.array().exp();
  return p / p.sum();
}

int sample_action(const AgentState& agent, int state, double temperature, std::mt19937_64& rng) {
  return sample_categorical(policy_probabilities(agent, state, temperature), rng);
}

std::vector<Transition> rollout(const MdpSpec& mdp, const AgentState& agent,
                                double temperature, std::mt19937_64& rng) {
  std::vector<Transition> episode;
  int s = sample_categorical(mdp.start_distribution, rng);
  for (int t = 0; t < mdp.max_steps; ++t) {
    const int a = sample_action(agent, s, temperature, rng);
    const Transition tr = step(mdp, s, a, rng);
    episode.push_back(tr);
    if (tr.done) break;
    s = tr.next_state;
  }
  return episode;
}

Vector plain_rewards(const std::vector<Transition>& episode) {
  Vector r(static_cast<Eigen::Index>(episode.size()));
  for (size_t t = 0; t < episode.size(); ++t) r(static_cast<Eigen::Index>(t)) = episode[t].reward;
  return r;
}

Vector shaped_rewards(const std::vector<Transition>& episode, const PotentialTable& phi,
                      double gamma) {
  Vector r(static_cast<Eigen::Index>(episode.size()));
  for (size_t t = 0; t < episode.size(); ++t)
    r(static_cast<Eigen::Index>(t)) = episode[t].reward + shaping_bonus(phi, episode[t], gamma);
  return r;
}

Vector lambda_returns(const std::vector<Transition>& episode, const Vector& rewards,
                      const Vector& v, double gamma, double lambda) {
  const auto n = static_cast<Eigen::Index>(episode.size());
  if (n == 0) throw std::invalid_argument("lambda_returns: empty episode");
  if (rewards.size() != n) throw std::invalid_argument("lambda_returns: reward length mismatch");

  Vector g(n);
  const Transition& tail = episode.back();
  g(n - 1) = rewards(n - 1) + gamma * (tail.done ? 0.0 : v(tail.next_state));
  for (Eigen::Index t = n - 2; t >= 0; --t)
    g(t) = rewards(t) + gamma * ((1.0 - lambda) * v(episode[static_cast<size_t>(t)].next_state) +
                                 lambda * g(t + 1));
  return g;
}

void update_from_episode(AgentState& agent, const std::vector<Transition>& episode,
                         const PotentialTable& phi, double gamma, const AgentConfig& cfg) {
  if (episode.empty()) return;
  const auto n = static_cast<Eigen::Index>(episode.size());
  const Vector plain = plain_rewards(episode);
  const Vector shaped = shaped_rewards(episode, phi, gamma);

  // Per-step convex mix of the two reward streams: r + (1 - alpha) * bonus.
  Vector blended(n);
  for (Eigen::Index t = 0; t < n; ++t)
    blended(t) = mix_returns(plain(t), shaped(t), cfg.alpha);

  Vector actor_target(n), critic_goal(n);
  if (cfg.critic_target == CriticTarget::Mixed) {
    // The critic estimates the blended stream's own values, so bootstrapping
    // it on itself is exact and the whole update is plain actor-critic run on
    // the reshaped reward. The blend telescopes, so greedy optima match the
    // original task.
    actor_target = lambda_returns(episode, blended, agent.v, gamma, cfg.lambda);
    critic_goal = actor_target;
  } else {
    // Plain critic: the bonuses telescope out of the blended return exactly
    // when the shaped half bootstraps on v - phi, leaving the plain return
    // minus a potential baseline at the visited state. Bootstrapping the
    // shaped half on the plain v instead would leak one un-telescoped
    // potential term into every bootstrap and pay the agent for idling next
    // to high ground.
    const Vector g_plain = lambda_returns(episode, plain, agent.v, gamma, cfg.lambda);
    for (Eigen::Index t = 0; t < n; ++t)
      actor_target(t) =
          g_plain(t) - (1.0 - cfg.alpha) * phi(episode[static_cast<size_t>(t)].state);
    critic_goal = g_plain;
  }

  double discount = 1.0;
  for (size_t t = 0; t < episode.size(); ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    const int s = episode[t].state;
    const int a = episode[t].action;

    const Vector pi = policy_probabilities(agent, s, cfg.temperature);
    const double adv = actor_target(ti) - agent.v(s);
    const double scale = cfg.actor_lr * discount * adv / cfg.temperature;
    for (int b = 0; b < agent.theta.cols(); ++b)
      agent.theta(s, b) += scale * ((b == a ? 1.0 : 0.0) - pi(b));

    agent.v(s) += cfg.critic_lr * (critic_goal(ti) - agent.v(s));
    discount *= gamma;
  }
}

double discounted_return(const std::vector<Transition>& episode, double gamma) {
  double g = 0.0, discount = 1.0;
  for (const Transition& t : episode) {
    g += discount * t.reward;
    discount *= gamma;
  }
  return g;
}

}  // namespace potshape
