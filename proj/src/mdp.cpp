#include "potshape/mdp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace potshape {

namespace {
constexpr double kRowSumTol = 1e-12;

std::string field(const std::string& name, int i, int j = -1) {
  std::ostringstream os;
  os << name << "[" << i;
  if (j >= 0) os << "," << j;
  os << "]";
  return os.str();
}
}  // namespace

void validate(const MdpSpec& mdp) {
  if (mdp.num_states <= 0) throw std::invalid_argument("num_states must be positive");
  if (mdp.num_actions <= 0) throw std::invalid_argument("num_actions must be positive");
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0))
    throw std::invalid_argument("gamma must lie in [0, 1)");
  if (mdp.max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
  if (static_cast<int>(mdp.transition.size()) != mdp.num_actions)
    throw std::invalid_argument("transition tensor has wrong action count");
  if (mdp.reward.rows() != mdp.num_states || mdp.reward.cols() != mdp.num_actions)
    throw std::invalid_argument("reward table has wrong shape");
  if (mdp.start_distribution.size() != mdp.num_states)
    throw std::invalid_argument("start_distribution has wrong length");
  if (mdp.terminal.size() != static_cast<size_t>(mdp.num_states))
    throw std::invalid_argument("terminal flags have wrong length");

  for (int a = 0; a < mdp.num_actions; ++a) {
    const Matrix& P = mdp.transition[static_cast<size_t>(a)];
    if (P.rows() != mdp.num_states || P.cols() != mdp.num_states)
      throw std::invalid_argument("transition matrix for action " + std::to_string(a) +
                                  " has wrong shape");
    for (int s = 0; s < mdp.num_states; ++s) {
      double sum = 0.0;
      for (int t = 0; t < mdp.num_states; ++t) {
        double p = P(s, t);
        if (p < 0.0 || p > 1.0)
          throw std::invalid_argument(field("transition", s, t) + " out of [0,1] for action " +
                                      std::to_string(a));
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTol)
        throw std::invalid_argument("transition row " + field("P", s) + " for action " +
                                    std::to_string(a) + " sums to " + std::to_string(sum));
    }
  }

  double start_sum = 0.0;
  for (int s = 0; s < mdp.num_states; ++s) {
    double p = mdp.start_distribution[s];
    if (p < 0.0 || p > 1.0) throw std::invalid_argument(field("start_distribution", s) + " out of [0,1]");
    start_sum += p;
    if (mdp.is_terminal(s) && p > 0.0)
      throw std::invalid_argument("start_distribution puts mass on terminal state " + std::to_string(s));
  }
  if (std::abs(start_sum - 1.0) > kRowSumTol)
    throw std::invalid_argument("start_distribution sums to " + std::to_string(start_sum));

  // Terminals absorb: every action self-loops with probability 1 and pays 0.
  for (int s = 0; s < mdp.num_states; ++s) {
    if (!mdp.is_terminal(s)) continue;
    for (int a = 0; a < mdp.num_actions; ++a) {
      if (std::abs(mdp.transition[static_cast<size_t>(a)](s, s) - 1.0) > kRowSumTol)
        throw std::invalid_argument("terminal state " + std::to_string(s) + " is not absorbing");
      if (mdp.reward(s, a) != 0.0)
        throw std::invalid_argument("terminal state " + std::to_string(s) + " has nonzero reward");
    }
  }
}

Transition step(const MdpSpec& mdp, int state, int action, std::mt19937_64& rng) {
  if (state < 0 || state >= mdp.num_states) throw std::invalid_argument("state out of range");
  if (action < 0 || action >= mdp.num_actions) throw std::invalid_argument("action out of range");
  if (mdp.is_terminal(state)) throw std::invalid_argument("step() called on terminal state");

  const Matrix& P = mdp.transition[static_cast<size_t>(action)];
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  int next = mdp.num_states - 1;
  double acc = 0.0;
  for (int t = 0; t < mdp.num_states; ++t) {
    acc += P(state, t);
    if (u < acc) {
      next = t;
      break;
    }
  }
  Transition tr;
  tr.state = state;
  tr.action = action;
  tr.reward = mdp.reward(state, action);
  tr.next_state = next;
  tr.done = mdp.is_terminal(next);
  return tr;
}

int GridLayout::state_of(int row, int col) const {
  if (is_wall(row, col)) return -1;
  int id = 0;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      if (at(r, c) == Cell::Wall) continue;
      if (r == row && c == col) return id;
      ++id;
    }
  return -1;
}

std::pair<int, int> GridLayout::cell_of(int state) const {
  int id = 0;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      if (at(r, c) == Cell::Wall) continue;
      if (id == state) return {r, c};
      ++id;
    }
  throw std::invalid_argument("state out of range for layout");
}

int GridLayout::num_cells_free() const {
  int n = 0;
  for (Cell c : cells)
    if (c != Cell::Wall) ++n;
  return n;
}

GridLayout parse_grid(const std::string& picture) {
  GridLayout g;
  std::vector<std::string> rows;
  std::istringstream in(picture);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(line);
  if (rows.empty()) throw std::invalid_argument("empty grid picture");
  g.height = static_cast<int>(rows.size());
  g.width = static_cast<int>(rows[0].size());
  for (const std::string& r : rows)
    if (static_cast<int>(r.size()) != g.width)
      throw std::invalid_argument("ragged grid picture");
  g.cells.reserve(static_cast<size_t>(g.width * g.height));
  for (const std::string& r : rows)
    for (char ch : r) {
      switch (ch) {
        case 'w': g.cells.push_back(Cell::Wall); break;
        case ' ':
        case '.': g.cells.push_back(Cell::Free); break;
        case 's': g.cells.push_back(Cell::Start); break;
        case 'g': g.cells.push_back(Cell::Goal); break;
        case 't': g.cells.push_back(Cell::Trap); break;
        default: throw std::invalid_argument(std::string("unknown grid character '") + ch + "'");
      }
    }
  return g;
}

namespace {
// up, down, left, right
constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};

double cell_reward(const GridLayout& g, Cell c) {
  if (c == Cell::Goal) return g.goal_reward;
  if (c == Cell::Trap) return g.trap_penalty;
  return 0.0;
}
}  // namespace

MdpSpec grid_to_mdp(const GridLayout& grid, double gamma, int max_steps) {
  const int n = grid.num_cells_free();
  if (n == 0) throw std::invalid_argument("grid has no free cells");

  MdpSpec mdp;
  mdp.num_states = n;
  mdp.num_actions = 4;
  mdp.gamma = gamma;
  mdp.max_steps = max_steps;
  mdp.transition.assign(4, Matrix::Zero(n, n));
  mdp.reward = Matrix::Zero(n, 4);
  mdp.start_distribution = Vector::Zero(n);
  mdp.terminal.assign(static_cast<size_t>(n), 0);

  // Deterministic landing cell of a single move, with wall bumps staying put.
  auto land = [&](int r, int c, int a) -> std::pair<int, int> {
    int nr = r + kDr[a], nc = c + kDc[a];
    if (grid.is_wall(nr, nc)) return {r, c};
    return {nr, nc};
  };

  int starts = 0;
  for (int r = 0; r < grid.height; ++r)
    for (int c = 0; c < grid.width; ++c) {
      Cell cell = grid.at(r, c);
      if (cell == Cell::Wall) continue;
      int s = grid.state_of(r, c);
      // Goal and trap cells both end the episode; the entry transition
      // carries their reward, the cell itself is absorbing with none.
      if (cell == Cell::Goal || cell == Cell::Trap) {
        mdp.terminal[static_cast<size_t>(s)] = 1;
        for (int a = 0; a < 4; ++a) mdp.transition[static_cast<size_t>(a)](s, s) = 1.0;
        continue;
      }
      if (cell == Cell::Start) ++starts;
      for (int a = 0; a < 4; ++a) {
        // Noise replaces the chosen action with a uniform one, so action b
        // is realised with probability noise/4, plus 1-noise for b = a.
        for (int b = 0; b < 4; ++b) {
          auto [nr, nc] = land(r, c, b);
          double p = grid.noise / 4.0 + (b == a ? 1.0 - grid.noise : 0.0);
          mdp.transition[static_cast<size_t>(a)](s, grid.state_of(nr, nc)) += p;
        }
        auto [ir, ic] = land(r, c, a);
        mdp.reward(s, a) = cell_reward(grid, grid.at(ir, ic));
      }
    }

  if (starts == 0) throw std::invalid_argument("grid has no start cells");
  for (int r = 0; r < grid.height; ++r)
    for (int c = 0; c < grid.width; ++c)
      if (grid.at(r, c) == Cell::Start)
        mdp.start_distribution[grid.state_of(r, c)] = 1.0 / starts;

  validate(mdp);
  return mdp;
}

MdpSpec load_mdp(std::istream& in) {
  std::string line;
  auto next_line = [&](std::string& out) -> bool {
    while (std::getline(in, out)) {
      auto hash = out.find('#');
      if (hash != std::string::npos) out.erase(hash);
      std::istringstream probe(out);
      std::string tok;
      if (probe >> tok) return true;
    }
    return false;
  };

  if (!next_line(line)) throw std::invalid_argument("mdp file: missing header");
  MdpSpec mdp;
  {
    std::istringstream hs(line);
    if (!(hs >> mdp.num_states >> mdp.num_actions >> mdp.gamma))
      throw std::invalid_argument("mdp file: header must be 'states actions gamma'");
  }
  if (mdp.num_states <= 0 || mdp.num_actions <= 0)
    throw std::invalid_argument("mdp file: nonpositive state or action count");

  const int n = mdp.num_states;
  mdp.transition.assign(static_cast<size_t>(mdp.num_actions), Matrix::Zero(n, n));
  mdp.reward = Matrix::Zero(n, mdp.num_actions);
  mdp.start_distribution = Vector::Zero(n);
  mdp.terminal.assign(static_cast<size_t>(n), 0);
  mdp.max_steps = 1000;

  bool have_start = false;
  while (next_line(line)) {
    std::istringstream ls(line);
    char kind;
    ls >> kind;
    if (kind == 'T') {
      int s, a, t;
      double p;
      if (!(ls >> s >> a >> t >> p)) throw std::invalid_argument("mdp file: bad T record: " + line);
      if (s < 0 || s >= n || t < 0 || t >= n || a < 0 || a >= mdp.num_actions)
        throw std::invalid_argument("mdp file: T record index out of range: " + line);
      mdp.transition[static_cast<size_t>(a)](s, t) += p;
    } else if (kind == 'R') {
      int s, a;
      double r;
      if (!(ls >> s >> a >> r)) throw std::invalid_argument("mdp file: bad R record: " + line);
      if (s < 0 || s >= n || a < 0 || a >= mdp.num_actions)
        throw std::invalid_argument("mdp file: R record index out of range: " + line);
      mdp.reward(s, a) = r;
    } else if (kind == 'S') {
      int s;
      double p;
      if (!(ls >> s >> p)) throw std::invalid_argument("mdp file: bad S record: " + line);
      if (s < 0 || s >= n) throw std::invalid_argument("mdp file: S record index out of range: " + line);
      mdp.start_distribution[s] = p;
      have_start = true;
    } else if (kind == 'H') {
      if (!(ls >> mdp.max_steps)) throw std::invalid_argument("mdp file: bad H record: " + line);
    } else {
      throw std::invalid_argument(std::string("mdp file: unknown record '") + kind + "'");
    }
  }

  // Absorbing zero-reward states count as terminal.
  for (int s = 0; s < n; ++s) {
    bool absorbing = true;
    for (int a = 0; a < mdp.num_actions && absorbing; ++a)
      absorbing = std::abs(mdp.transition[static_cast<size_t>(a)](s, s) - 1.0) <= kRowSumTol &&
                  mdp.reward(s, a) == 0.0;
    mdp.terminal[static_cast<size_t>(s)] = absorbing ? 1 : 0;
  }

  if (!have_start) {
    int free_count = 0;
    for (int s = 0; s < n; ++s)
      if (!mdp.is_terminal(s)) ++free_count;
    if (free_count == 0) throw std::invalid_argument("mdp file: every state is terminal");
    for (int s = 0; s < n; ++s)
      if (!mdp.is_terminal(s)) mdp.start_distribution[s] = 1.0 / free_count;
  }

  validate(mdp);
  return mdp;
}

MdpSpec load_mdp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mdp file: " + path);
  return load_mdp(in);
}

void save_mdp(const MdpSpec& mdp, std::ostream& out) {
  out.precision(17);
  out << mdp.num_states << " " << mdp.num_actions << " " << mdp.gamma << "\n";
  out << "H " << mdp.max_steps << "\n";
  for (int a = 0; a < mdp.num_actions; ++a)
    for (int s = 0; s < mdp.num_states; ++s)
      for (int t = 0; t < mdp.num_states; ++t)
        if (mdp.transition[static_cast<size_t>(a)](s, t) != 0.0)
          out << "T " << s << " " << a << " " << t << " "
              << mdp.transition[static_cast<size_t>(a)](s, t) << "\n";
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      if (mdp.reward(s, a) != 0.0) out << "R " << s << " " << a << " " << mdp.reward(s, a) << "\n";
  for (int s = 0; s < mdp.num_states; ++s)
    if (mdp.start_distribution[s] != 0.0)
      out << "S " << s << " " << mdp.start_distribution[s] << "\n";
}

}  // namespace potshape
