#include "potshape/graph.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace potshape {

namespace {
constexpr double kRewardEps = 1e-9;
}

void TrajectoryGraph::touch(int state) {
  if (index_.emplace(state, static_cast<int>(nodes_.size())).second) nodes_.push_back(state);
}

void TrajectoryGraph::add_edge(int s, int s_prime) {
  touch(s);
  touch(s_prime);
  if (s == s_prime) return;
  auto key = s < s_prime ? std::make_pair(s, s_prime) : std::make_pair(s_prime, s);
  ++edges_[key];
}

void TrajectoryGraph::mark_first(int state) {
  touch(state);
  first_.insert(state);
}

void TrajectoryGraph::mark_last(int state) {
  touch(state);
  last_.insert(state);
}

void TrajectoryGraph::mark_reward(int state, double reward) {
  touch(state);
  if (std::abs(reward) > kRewardEps) rewards_[state] = reward;
}

void TrajectoryGraph::add_transition(const Transition& t) {
  if (expecting_start_) {
    mark_first(t.state);
    expecting_start_ = false;
  }
  add_edge(t.state, t.next_state);
  mark_reward(t.next_state, t.reward);
  if (t.done) {
    mark_last(t.next_state);
    expecting_start_ = true;
  }
}

void TrajectoryGraph::end_episode(int state) {
  mark_last(state);
  expecting_start_ = true;
}

void TrajectoryGraph::reset() {
  nodes_.clear();
  index_.clear();
  edges_.clear();
  first_.clear();
  last_.clear();
  rewards_.clear();
  expecting_start_ = true;
}

int TrajectoryGraph::node_of(int state) const {
  auto it = index_.find(state);
  return it == index_.end() ? -1 : it->second;
}

void TrajectoryGraph::dump(std::ostream& out) const {
  out << "graph " << num_nodes() << " " << num_edges() << "\n";
  for (const auto& [key, count] : edges_)
    out << "e " << key.first << " " << key.second << " " << count << "\n";
  out << "markers\n";
  for (int s : nodes_) {
    bool f = first_.count(s), l = last_.count(s);
    auto r = rewards_.find(s);
    if (!f && !l && r == rewards_.end()) continue;
    out << "m " << s;
    if (f) out << " first";
    if (l) out << " last";
    if (r != rewards_.end()) out << " reward " << r->second;
    out << "\n";
  }
}

SpectralOps build_spectral(const TrajectoryGraph& g) {
  const int n = g.num_nodes();
  if (n == 0) throw std::invalid_argument("build_spectral: empty graph");

  SpectralOps ops;
  ops.states = g.states();
  for (int i = 0; i < n; ++i) ops.index[ops.states[static_cast<size_t>(i)]] = i;

  ops.adjacency = Matrix::Zero(n, n);
  for (const auto& [key, count] : g.edges()) {
    (void)count;  // binarised
    int i = ops.index.at(key.first), j = ops.index.at(key.second);
    ops.adjacency(i, j) = 1.0;
    ops.adjacency(j, i) = 1.0;
  }

  // A + I row sums; every node has degree >= 1 via its self-loop.
  ops.degree = ops.adjacency.rowwise().sum() + Vector::Ones(n);
  Vector d_inv_sqrt = ops.degree.cwiseSqrt().cwiseInverse();
  Matrix a_tilde = ops.adjacency + Matrix::Identity(n, n);
  ops.t_hat = d_inv_sqrt.asDiagonal() * a_tilde * d_inv_sqrt.asDiagonal();
  return ops;
}

double dirichlet_energy(const SpectralOps& ops, const Vector& f) {
  const int n = static_cast<int>(ops.states.size());
  if (f.size() != n) throw std::invalid_argument("dirichlet_energy: node-value length mismatch");
  double total = 0.0;
  for (int v = 0; v < n; ++v)
    for (int w = 0; w < n; ++w)
      if (ops.adjacency(v, w) != 0.0) {
        double d = f[v] - f[w];
        total += d * d;
      }
  return total;
}

Matrix random_walk_matrix(const SpectralOps& ops) {
  const int n = static_cast<int>(ops.states.size());
  Matrix a_tilde = ops.adjacency + Matrix::Identity(n, n);
  return ops.degree.cwiseInverse().asDiagonal() * a_tilde;
}

Vector entropy_rate_rows(const Matrix& p) {
  Vector h(p.rows());
  for (int i = 0; i < p.rows(); ++i) {
    double sum = 0.0, acc = 0.0;
    for (int j = 0; j < p.cols(); ++j) {
      double x = p(i, j);
      if (x < 0.0) throw std::invalid_argument("entropy_rate_rows: negative entry");
      sum += x;
      if (x > 0.0) acc -= x * std::log(x);
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("entropy_rate_rows: row " + std::to_string(i) +
                                  " sums to " + std::to_string(sum));
    h[i] = acc;
  }
  return h;
}

TrajectoryGraph build_full_graph(const MdpSpec& mdp) {
  TrajectoryGraph g;
  for (int s = 0; s < mdp.num_states; ++s) g.touch(s);
  for (int s = 0; s < mdp.num_states; ++s) {
    if (mdp.start_distribution[s] > 0.0) g.mark_first(s);
    if (mdp.is_terminal(s)) g.mark_last(s);
    for (int a = 0; a < mdp.num_actions; ++a) {
      const Matrix& P = mdp.transition[static_cast<size_t>(a)];
      int modal = 0;
      for (int t = 0; t < mdp.num_states; ++t) {
        if (P(s, t) > 0.0) g.add_edge(s, t);
        if (P(s, t) > P(s, modal)) modal = t;
      }
      g.mark_reward(modal, mdp.reward(s, a));
    }
  }
  return g;
}

}  // namespace potshape
