#include "potshape/envs.hpp"

#include <stdexcept>

namespace potshape {

namespace {

const char* kFourRooms =
    "wwwwwwwwwwwww\n"
    "wss   w     w\n"
    "wss   w     w\n"
    "w           w\n"
    "w     w     w\n"
    "w     w     w\n"
    "ww wwww     w\n"
    "w     www www\n"
    "w     w     w\n"
    "w     w  g  w\n"
    "w           w\n"
    "w     w     w\n"
    "wwwwwwwwwwwww\n";

// Same rooms with two episode-ending penalty cells in each transit room,
// forcing a detour on both routes to the goal. Start and goal rooms stay
// clean: traps beside the start block punish exploration before anything
// is learned, and traps in the goal room make the safest corner elsewhere
// outrank the goal as a neighbourhood. Doorway cells stay clear so the
// penalty teaches route choice, not room avoidance.
const char* kFourRoomsTraps =
    "wwwwwwwwwwwww\n"
    "wss   w     w\n"
    "wss   w  t  w\n"
    "w           w\n"
    "w     w     w\n"
    "w     w  t  w\n"
    "ww wwww     w\n"
    "w     www www\n"
    "w   t w     w\n"
    "w     w  g  w\n"
    "w  t        w\n"
    "w     w     w\n"
    "wwwwwwwwwwwww\n";

const char* kSMaze =
    "wwwwwwwww\n"
    "w      gw\n"
    "w       w\n"
    "w wwwwwww\n"
    "w       w\n"
    "wwwwwww w\n"
    "w       w\n"
    "ws      w\n"
    "wwwwwwwww\n";

}  // namespace

Env build_fourrooms() {
  Env env;
  env.name = "fourrooms";
  env.layout = parse_grid(kFourRooms);
  env.mdp = grid_to_mdp(*env.layout, 0.99, 1000);
  return env;
}

Env build_fourrooms_traps() {
  Env env;
  env.name = "fourrooms-traps";
  env.layout = parse_grid(kFourRoomsTraps);
  env.mdp = grid_to_mdp(*env.layout, 0.99, 1000);
  return env;
}

Env build_smaze() {
  Env env;
  env.name = "smaze";
  env.layout = parse_grid(kSMaze);
  env.mdp = grid_to_mdp(*env.layout, 0.99, 1000);
  return env;
}

Env build_two_arm_chain() {
  // State ids: 0 start, 1..2 short arm (2 terminal), 3..402 long arm
  // (402 terminal). Reward is paid on the step entering the arm end.
  constexpr int kShort = 2;
  constexpr int kLong = 400;
  const int n = 1 + kShort + kLong;
  const int left0 = 1;
  const int right0 = 1 + kShort;

  MdpSpec mdp;
  mdp.num_states = n;
  mdp.num_actions = 2;
  mdp.gamma = 0.99;
  mdp.max_steps = 450;
  mdp.transition.assign(2, Matrix::Zero(n, n));
  mdp.reward = Matrix::Zero(n, 2);
  mdp.start_distribution = Vector::Zero(n);
  mdp.terminal.assign(static_cast<size_t>(n), 0);

  mdp.start_distribution[0] = 1.0;
  mdp.transition[0](0, left0) = 1.0;   // action 0: enter the short arm
  mdp.transition[1](0, right0) = 1.0;  // action 1: enter the long arm

  // Both actions march forward once inside an arm.
  auto chain = [&](int first, int len, double end_reward) {
    int last = first + len - 1;
    for (int i = first; i < last; ++i)
      for (int a = 0; a < 2; ++a) {
        mdp.transition[static_cast<size_t>(a)](i, i + 1) = 1.0;
        if (i == last - 1) mdp.reward(i, a) = end_reward;
      }
    mdp.terminal[static_cast<size_t>(last)] = 1;
    for (int a = 0; a < 2; ++a) mdp.transition[static_cast<size_t>(a)](last, last) = 1.0;
  };
  chain(left0, kShort, 0.1);
  chain(right0, kLong, 10.0);

  validate(mdp);

  Env env;
  env.name = "two-arm-chain";
  env.mdp = std::move(mdp);
  return env;
}

Env make_env(const std::string& name) {
  if (name == "fourrooms") return build_fourrooms();
  if (name == "fourrooms-traps") return build_fourrooms_traps();
  if (name == "smaze") return build_smaze();
  if (name == "two-arm-chain") return build_two_arm_chain();
  throw std::invalid_argument("unknown environment: " + name);
}

}  // namespace potshape
