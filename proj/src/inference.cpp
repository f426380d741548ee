#include "potshape/inference.hpp"

#include <cmath>
#include <stdexcept>

namespace potshape {

OptimalityModel OptimalityModel::from(const MdpSpec& mdp) {
  OptimalityModel m;
  m.optimality = mdp.reward.unaryExpr([](double r) { return sigmoid(r); });
  m.action_prior = 1.0 / mdp.num_actions;
  return m;
}

namespace {

void normalize_slice(Matrix& slice, double& scale, const char* what) {
  scale = slice.sum();
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::runtime_error(std::string(what) + ": slice mass is not positive and finite");
  slice /= scale;
}

// One backward step: beta_prev(s,a) = opt(s,a) * [P_a * m](s) with
// m(s') the prior-weighted action sum of the later slice.
Matrix backward_step(const MdpSpec& mdp, const OptimalityModel& model, const Matrix& later) {
  Vector m = later.rowwise().sum() * model.action_prior;
  Matrix out(mdp.num_states, mdp.num_actions);
  for (int a = 0; a < mdp.num_actions; ++a)
    out.col(a) =
        model.optimality.col(a).cwiseProduct(mdp.transition[static_cast<size_t>(a)] * m);
  return out;
}

// One forward step: alpha_next(s,a) = prior * sum_{a0} P_{a0}^T (opt(.,a0) .* alpha(.,a0)).
Matrix forward_step(const MdpSpec& mdp, const OptimalityModel& model, const Matrix& earlier) {
  Vector u = Vector::Zero(mdp.num_states);
  for (int a = 0; a < mdp.num_actions; ++a)
    u += mdp.transition[static_cast<size_t>(a)].transpose() *
         model.optimality.col(a).cwiseProduct(earlier.col(a));
  Matrix out(mdp.num_states, mdp.num_actions);
  for (int a = 0; a < mdp.num_actions; ++a) out.col(a) = u * model.action_prior;
  return out;
}

}  // namespace

MessageTable backward_messages(const MdpSpec& mdp, const OptimalityModel& model, int horizon) {
  if (horizon < 1) throw std::invalid_argument("backward_messages: horizon must be >= 1");
  MessageTable table;
  table.slices.assign(static_cast<size_t>(horizon), Matrix());
  table.scale.assign(static_cast<size_t>(horizon), 0.0);

  table.slices.back() = model.optimality;
  normalize_slice(table.slices.back(), table.scale.back(), "backward_messages");
  for (int t = horizon - 2; t >= 0; --t) {
    table.slices[static_cast<size_t>(t)] =
        backward_step(mdp, model, table.slices[static_cast<size_t>(t + 1)]);
    normalize_slice(table.slices[static_cast<size_t>(t)], table.scale[static_cast<size_t>(t)],
                    "backward_messages");
  }
  return table;
}

MessageTable forward_messages(const MdpSpec& mdp, const OptimalityModel& model, int horizon) {
  if (horizon < 1) throw std::invalid_argument("forward_messages: horizon must be >= 1");
  MessageTable table;
  table.slices.assign(static_cast<size_t>(horizon), Matrix());
  table.scale.assign(static_cast<size_t>(horizon), 0.0);

  Matrix base(mdp.num_states, mdp.num_actions);
  for (int a = 0; a < mdp.num_actions; ++a)
    base.col(a) = mdp.start_distribution * model.action_prior;
  table.slices.front() = base;
  normalize_slice(table.slices.front(), table.scale.front(), "forward_messages");
  for (int t = 1; t < horizon; ++t) {
    table.slices[static_cast<size_t>(t)] =
        forward_step(mdp, model, table.slices[static_cast<size_t>(t - 1)]);
    normalize_slice(table.slices[static_cast<size_t>(t)], table.scale[static_cast<size_t>(t)],
                    "forward_messages");
  }
  return table;
}

namespace {

constexpr double kFixedPointTol = 1e-10;
constexpr int kFixedPointMaxIter = 1000000;

Matrix fixed_point(const MdpSpec& mdp, const OptimalityModel& model, bool backward) {
  Matrix cur = backward ? model.optimality
                        : [&] {
                            Matrix b(mdp.num_states, mdp.num_actions);
                            for (int a = 0; a < mdp.num_actions; ++a)
                              b.col(a) = mdp.start_distribution * model.action_prior;
                            return b;
                          }();
  double scale = 0.0;
  normalize_slice(cur, scale, "fixed_point");
  for (int it = 0; it < kFixedPointMaxIter; ++it) {
    Matrix next = backward ? backward_step(mdp, model, cur) : forward_step(mdp, model, cur);
    normalize_slice(next, scale, "fixed_point");
    double diff = (next - cur).cwiseAbs().maxCoeff();
    cur = std::move(next);
    if (diff < kFixedPointTol) return cur;
  }
  throw std::runtime_error("fixed_point messages did not converge");
}

Vector state_marginal(const Matrix& slice, double prior) {
  return slice.rowwise().sum() * prior;
}

// Advance the visitation of the unconditioned uniform-policy walk one step.
Vector visit_step(const MdpSpec& mdp, const Vector& visit) {
  Vector next = Vector::Zero(mdp.num_states);
  for (int a = 0; a < mdp.num_actions; ++a)
    next += mdp.transition[static_cast<size_t>(a)].transpose() * visit;
  return next / mdp.num_actions;
}

// Relative goodness of being at each state: alpha carries the walk's own
// visitation p(S_t) as a factor, so the raw alpha*beta product ranks states
// by how often the walk happens to pass them, drowning everything once most
// trajectories sit absorbed. Dividing it out leaves the trajectory-optimality
// probability conditioned on the state, scaled so the best state reads one.
Vector conditional_slice(const Vector& prod, const Vector& visit) {
  Vector cond = Vector::Zero(prod.size());
  for (int s = 0; s < prod.size(); ++s)
    if (visit(s) > 0.0) cond(s) = prod(s) / visit(s);
  const double top = cond.maxCoeff();
  if (top > 0.0) cond /= top;
  return cond;
}

}  // namespace

Vector potential_from_messages(const MdpSpec& mdp, const OptimalityModel& model, int horizon,
                               Collapse collapse) {
  Vector phi = Vector::Zero(mdp.num_states);
  if (collapse == Collapse::MeanOverTime) {
    MessageTable alpha = forward_messages(mdp, model, horizon);
    MessageTable beta = backward_messages(mdp, model, horizon);
    Vector visit = mdp.start_distribution;
    for (int t = 0; t < horizon; ++t) {
      Vector prod = alpha.slices[static_cast<size_t>(t)]
                        .rowwise()
                        .sum()
                        .cwiseProduct(state_marginal(beta.slices[static_cast<size_t>(t)],
                                                     model.action_prior));
      phi += conditional_slice(prod, visit);
      if (t + 1 < horizon) visit = visit_step(mdp, visit);
    }
    phi /= horizon;
  } else {
    Matrix alpha = fixed_point(mdp, model, /*backward=*/false);
    Matrix beta = fixed_point(mdp, model, /*backward=*/true);
    Vector visit = mdp.start_distribution;
    for (int it = 0; it < kFixedPointMaxIter; ++it) {
      Vector next = visit_step(mdp, visit);
      const double diff = (next - visit).cwiseAbs().maxCoeff();
      visit = std::move(next);
      if (diff < kFixedPointTol) break;
    }
    phi = conditional_slice(
        alpha.rowwise().sum().cwiseProduct(state_marginal(beta, model.action_prior)), visit);
  }

  double m = phi.maxCoeff();
  if (!(m > 0.0)) throw std::runtime_error("potential_from_messages: zero potential mass");
  return phi / m;
}

namespace {

// Episodic tasks restart after a terminal state, so the walk the messages
// describe keeps flowing through rewarding transitions instead of parking
// on an absorbing state forever. Absorption would otherwise dominate every
// time slice past the mixing time and flatten the potential to a spike.
// Restarts spread uniformly over non-terminal states: a restart tied to the
// episode starts would pile walk occupancy onto the start cells and bend
// the potential toward them for reasons unrelated to reward.
MdpSpec recycled_view(const MdpSpec& mdp) {
  std::vector<int> body;
  for (int s = 0; s < mdp.num_states; ++s)
    if (!mdp.is_terminal(s)) body.push_back(s);
  if (body.size() == static_cast<size_t>(mdp.num_states) || body.empty()) return mdp;
  Vector restart = Vector::Zero(mdp.num_states);
  for (int s : body) restart(s) = 1.0 / static_cast<double>(body.size());
  MdpSpec view = mdp;
  for (int s = 0; s < mdp.num_states; ++s) {
    if (!mdp.is_terminal(s)) continue;
    for (int a = 0; a < mdp.num_actions; ++a)
      view.transition[static_cast<size_t>(a)].row(s) = restart.transpose();
  }
  return view;
}

}  // namespace

PotentialTable alpha_beta_potential(const MdpSpec& mdp, int horizon, Collapse collapse) {
  const MdpSpec view = recycled_view(mdp);
  OptimalityModel model = OptimalityModel::from(view);
  PotentialTable t;
  t.phi = potential_from_messages(view, model, horizon, collapse);
  t.default_phi = 0.0;
  t.provenance = Provenance::AlphaBeta;
  return t;
}

}  // namespace potshape
