#include "potshape/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace potshape {

Provenance provenance_from_string(const std::string& name) {
  if (name == "gcn") return Provenance::Gcn;
  if (name == "ab") return Provenance::AlphaBeta;
  if (name == "l2") return Provenance::L2;
  if (name == "const") return Provenance::Constant;
  if (name == "zero") return Provenance::Zero;
  throw std::invalid_argument("unknown potential kind: " + name);
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Gcn: return "gcn";
    case Provenance::AlphaBeta: return "ab";
    case Provenance::L2: return "l2";
    case Provenance::Constant: return "const";
    case Provenance::Zero: return "zero";
  }
  return "?";
}

PotentialTable PotentialTable::zero(int num_states) {
  PotentialTable t;
  t.phi = Vector::Zero(num_states);
  t.default_phi = 0.0;
  t.provenance = Provenance::Zero;
  return t;
}

PotentialTable PotentialTable::constant(int num_states, double value) {
  PotentialTable t;
  t.phi = Vector::Constant(num_states, value);
  t.default_phi = value;
  t.provenance = Provenance::Constant;
  return t;
}

double shaping_bonus(const PotentialTable& phi, const Transition& t, double gamma) {
  double next = t.done ? 0.0 : phi(t.next_state);
  return gamma * next - phi(t.state);
}

PotentialTable l2_potential(const GridLayout& grid) {
  const int n = grid.num_cells_free();
  std::vector<std::pair<int, int>> goals;
  for (int r = 0; r < grid.height; ++r)
    for (int c = 0; c < grid.width; ++c)
      if (grid.at(r, c) == Cell::Goal) goals.emplace_back(r, c);
  if (goals.empty()) throw std::invalid_argument("l2_potential: layout has no goal cell");

  Vector dist(n);
  for (int s = 0; s < n; ++s) {
    auto [r, c] = grid.cell_of(s);
    double best = std::numeric_limits<double>::infinity();
    for (auto [gr, gc] : goals)
      best = std::min(best, std::hypot(static_cast<double>(r - gr), static_cast<double>(c - gc)));
    dist[s] = best;
  }
  double d_max = dist.maxCoeff();
  if (d_max <= 0.0) throw std::invalid_argument("l2_potential: degenerate layout");

  PotentialTable t;
  t.phi = Vector::Ones(n) - dist / d_max;
  t.default_phi = 0.0;
  t.provenance = Provenance::L2;
  return t;
}

double mix_returns(double plain, double shaped, double alpha) {
  return alpha * plain + (1.0 - alpha) * shaped;
}

TelescopeCheck telescoping_identity_check(const PotentialTable& phi,
                                          const std::vector<Transition>& episode, double gamma) {
  if (episode.empty()) throw std::invalid_argument("telescoping check needs a non-empty episode");
  if (!episode.back().done)
    throw std::invalid_argument("telescoping check needs a completed episode");

  TelescopeCheck out;
  double discount = 1.0;
  for (const Transition& t : episode) {
    out.plain_return += discount * t.reward;
    out.shaped_return += discount * (t.reward + shaping_bonus(phi, t, gamma));
    discount *= gamma;
  }
  out.residual = out.shaped_return - (out.plain_return - phi(episode.front().state));
  return out;
}

}  // namespace potshape
