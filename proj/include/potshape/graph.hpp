#pragma once

#include <iosfwd>
#include <map>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "potshape/mdp.hpp"

namespace potshape {

/// Undirected graph over visited states, grown from streamed transitions.
/// Edges are binarised for spectral purposes; per-edge visit counts are
/// kept for diagnostics only. States are also tagged with the boundary
/// information the potential model trains on: first/last states of
/// episodes and the last nonzero reward observed at a state.
class TrajectoryGraph {
 public:
  /// Records s -> s' as an undirected edge (self-transitions register the
  /// node but no edge). The first transition after construction, reset()
  /// or a done-flagged transition marks its source as an episode start;
  /// a done-flagged transition marks its successor as an episode end.
  /// Rewards with |r| > 1e-9 are attached to the successor state.
  void add_transition(const Transition& t);

  void reset();

  /// Closes the current episode at `state` without a done transition,
  /// for rollouts cut off by the step budget. The next streamed
  /// transition opens a new episode.
  void end_episode(int state);

  /// Direct marker access, for graphs assembled from a known model
  /// rather than sampled experience.
  void touch(int state);
  void add_edge(int s, int s_prime);
  void mark_first(int state);
  void mark_last(int state);
  void mark_reward(int state, double reward);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  bool has_node(int state) const { return index_.count(state) != 0; }
  /// Node index of a state in insertion order; -1 if absent.
  int node_of(int state) const;
  const std::vector<int>& states() const { return nodes_; }

  const std::map<std::pair<int, int>, long>& edges() const { return edges_; }
  const std::unordered_set<int>& episode_starts() const { return first_; }
  const std::unordered_set<int>& episode_ends() const { return last_; }
  const std::unordered_map<int, double>& reward_marks() const { return rewards_; }

  /// Edge list (`e v w count` with state ids) followed by a marker
  /// section; a debugging aid, not a parseable interchange format.
  void dump(std::ostream& out) const;

 private:
  std::vector<int> nodes_;                    // state ids, insertion order
  std::unordered_map<int, int> index_;        // state id -> node index
  std::map<std::pair<int, int>, long> edges_; // key: (min,max) state ids
  std::unordered_set<int> first_, last_;
  std::unordered_map<int, double> rewards_;
  bool expecting_start_ = true;
};

/// Dense spectral view of a graph snapshot. Node order matches the
/// graph's insertion order at build time.
struct SpectralOps {
  std::vector<int> states;             // node index -> state id
  std::unordered_map<int, int> index;  // state id -> node index
  Matrix adjacency;                    // binary, zero diagonal
  Vector degree;                       // row sums of adjacency + I
  Matrix t_hat;                        // D^{-1/2} (A + I) D^{-1/2}

  int node_of(int state) const {
    auto it = index.find(state);
    return it == index.end() ? -1 : it->second;
  }
};

/// Builds the normalised propagation operator from the current graph.
/// Requires at least one node.
SpectralOps build_spectral(const TrajectoryGraph& g);

/// Sum over ordered node pairs of adjacency(v,w) * (f_v - f_w)^2.
/// Self-loops never contribute (the adjacency has none).
double dirichlet_energy(const SpectralOps& ops, const Vector& f);

/// Row-stochastic uniform random walk over the graph, D^{-1}(A + I);
/// every node can stay put via its self-loop.
Matrix random_walk_matrix(const SpectralOps& ops);

/// Per-row Shannon entropy (natural log, 0 log 0 = 0) of a row-stochastic
/// matrix; rows must sum to 1 within 1e-9.
Vector entropy_rate_rows(const Matrix& p);

/// Graph of every transition with positive probability in the model:
/// start-support states are episode starts, terminals episode ends, and
/// for every (s, a) with nonzero reward the modal successor carries that
/// reward mark.
TrajectoryGraph build_full_graph(const MdpSpec& mdp);

}  // namespace potshape
