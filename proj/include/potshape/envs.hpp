#pragma once

#include <optional>
#include <string>

#include "potshape/mdp.hpp"

namespace potshape {

/// A named environment: the tabular MDP plus, for gridworlds, the layout
/// it was derived from (used by distance potentials and heatmaps).
struct Env {
  std::string name;
  MdpSpec mdp;
  std::optional<GridLayout> layout;
};

/// Classic four-rooms 13x13 gridworld: start cells in the upper-left
/// room, goal in the bottom-right room, 0.1 action noise, goal reward 1.
Env build_fourrooms();

/// Four-rooms with two trap cells in each transit room, off the
/// doorways. Entering a trap ends the episode with reward -1, so both
/// routes to the goal demand a short detour.
Env build_fourrooms_traps();

/// Serpentine corridor maze: start lower-left, goal upper-right, the
/// path snakes through two gaps on opposite sides.
Env build_smaze();

/// Two deterministic arms from a single start state: the short arm pays
/// 0.1 after 2 steps, the long arm pays 10 after 400 steps. Both arm
/// ends are absorbing terminals; under gamma = 0.99 the long arm is
/// optimal. No layout (not a grid).
Env build_two_arm_chain();

/// Lookup by CLI name: "fourrooms", "fourrooms-traps", "smaze",
/// "two-arm-chain". Throws std::invalid_argument for unknown names.
Env make_env(const std::string& name);

}  // namespace potshape
