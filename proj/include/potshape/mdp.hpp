#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace potshape {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One sampled step of experience. `done` is true when `next_state` is
/// terminal or when the caller exhausted its step budget on this step.
struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
  bool done = false;
};

/// Tabular MDP. transition[a](s, s') is the probability of moving s -> s'
/// under action a; every row sums to 1. reward(s, a) is the immediate
/// reward for taking a in s. Terminal states are absorbing with zero
/// reward for every action.
struct MdpSpec {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Matrix> transition;   // one S x S matrix per action
  Matrix reward;                    // S x A
  double gamma = 0.99;
  Vector start_distribution;        // length S, sums to 1
  std::vector<uint8_t> terminal;    // length S
  int max_steps = 1000;

  bool is_terminal(int s) const { return terminal[static_cast<size_t>(s)] != 0; }
};

/// Throws std::invalid_argument naming the offending field if the spec
/// violates any structural invariant (row sums, probability ranges,
/// discount range, absorbing terminals, start distribution).
void validate(const MdpSpec& mdp);

/// Samples one environment step. The input state must be non-terminal.
/// The reward is the reward-table entry for (state, action); the done
/// flag reflects only terminal entry (budget exhaustion is the caller's
/// bookkeeping).
Transition step(const MdpSpec& mdp, int state, int action, std::mt19937_64& rng);

/// Cell roles for grid environments.
enum class Cell : uint8_t { Wall, Free, Start, Goal, Trap };

/// Rectangular gridworld description. States are the non-wall cells in
/// row-major order; the four actions are up, down, left, right.
struct GridLayout {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;          // row-major, width * height
  double goal_reward = 1.0;
  double trap_penalty = -1.0;
  double noise = 0.1;               // chance the chosen action is replaced
                                    // by a uniformly random one

  Cell at(int row, int col) const { return cells[static_cast<size_t>(row * width + col)]; }
  bool is_wall(int row, int col) const {
    return row < 0 || row >= height || col < 0 || col >= width || at(row, col) == Cell::Wall;
  }
  /// State id of a non-wall cell, or -1 for walls.
  int state_of(int row, int col) const;
  /// Inverse of state_of.
  std::pair<int, int> cell_of(int state) const;
  int num_cells_free() const;
};

/// Parses a picture like
///   "wwww\n"
///   "wsgw\n"
///   "wwww\n"
/// with 'w' wall, ' '/'.' free, 's' start, 'g' goal, 't' trap.
GridLayout parse_grid(const std::string& picture);

/// Converts a grid into a tabular MDP. The chosen action succeeds with
/// probability 1 - noise + noise/4 and each other direction is realised
/// with probability noise/4; moves into walls stay put. The reward for
/// (s, a) is the reward of the cell the intended (noise-free) move lands
/// on: goal_reward for the goal, trap_penalty for traps, 0 elsewhere.
/// Goal cells are absorbing terminals. Start states are uniform over the
/// start cells.
MdpSpec grid_to_mdp(const GridLayout& grid, double gamma, int max_steps);

/// Plain-text MDP format:
///   states actions gamma
///   T s a s' p
///   R s a r
///   S s p        (optional start probabilities; defaults to uniform)
///   H n          (optional step budget; defaults to 1000)
/// '#' starts a comment. Missing T entries are 0; rows must sum to 1.
/// States whose every action self-loops with probability 1 and zero
/// reward are marked terminal.
MdpSpec load_mdp(std::istream& in);
MdpSpec load_mdp_file(const std::string& path);
void save_mdp(const MdpSpec& mdp, std::ostream& out);

}  // namespace potshape
