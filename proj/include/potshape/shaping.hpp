#pragma once

#include <string>
#include <vector>

#include "potshape/mdp.hpp"

namespace potshape {

/// Where a potential came from. "Zero" disables shaping exactly.
enum class Provenance { Gcn, AlphaBeta, L2, Constant, Zero };

Provenance provenance_from_string(const std::string& name);
std::string to_string(Provenance p);

/// Dense per-state potential in [0, 1] (or 0 everywhere for Zero).
/// States never seen by the producing model fall back to default_phi:
/// 1/2 for the class-probability model, 0 otherwise.
struct PotentialTable {
  Vector phi;
  double default_phi = 0.0;
  Provenance provenance = Provenance::Zero;

  double operator()(int s) const {
    return (s >= 0 && s < phi.size()) ? phi[s] : default_phi;
  }

  static PotentialTable zero(int num_states);
  static PotentialTable constant(int num_states, double value);
};

/// Potential-based bonus gamma * phi(s') - phi(s). Episode-ending
/// transitions treat the successor potential as 0, so the bonuses over
/// any episode telescope to exactly -phi(s_0).
double shaping_bonus(const PotentialTable& phi, const Transition& t, double gamma);

/// Distance-based reference potential on a grid: 1 - d(s, goal)/d_max,
/// Euclidean over cell coordinates, d_max the largest free-cell
/// distance. 1 at the goal, 0 at the farthest cell.
PotentialTable l2_potential(const GridLayout& grid);

/// Convex combination alpha * plain + (1 - alpha) * shaped.
double mix_returns(double plain, double shaped, double alpha);

struct TelescopeCheck {
  double plain_return = 0.0;    // sum gamma^t r_t
  double shaped_return = 0.0;   // sum gamma^t (r_t + F_t)
  double residual = 0.0;        // shaped - (plain - phi(s_0))
};

/// Verifies the telescoping identity on a recorded episode. The episode
/// must be non-empty and its last transition flagged done.
TelescopeCheck telescoping_identity_check(const PotentialTable& phi,
                                          const std::vector<Transition>& episode, double gamma);

}  // namespace potshape
