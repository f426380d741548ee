#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "potshape/envs.hpp"
#include "potshape/graph.hpp"

using namespace potshape;

namespace {

Transition tr(int s, int a, double r, int next, bool done = false) {
  Transition t;
  t.state = s;
  t.action = a;
  t.reward = r;
  t.next_state = next;
  t.done = done;
  return t;
}

}  // namespace

TEST_SUITE("trajectory_graph") {
  TEST_CASE("episode boundaries and reward marks from streamed transitions") {
    TrajectoryGraph g;
    g.add_transition(tr(0, 0, 0.0, 1));
    g.add_transition(tr(1, 0, 0.5, 2));
    g.add_transition(tr(2, 0, 0.0, 3, true));
    // The done transition re-arms the start marker.
    g.add_transition(tr(5, 1, 0.0, 6));

    CHECK(g.num_nodes() == 6);
    CHECK(g.num_edges() == 4);
    CHECK(g.episode_starts().count(0) == 1);
    CHECK(g.episode_starts().count(5) == 1);
    CHECK(g.episode_ends().count(3) == 1);
    CHECK(g.episode_ends().size() == 1);
    REQUIRE(g.reward_marks().count(2) == 1);
    CHECK(g.reward_marks().at(2) == 0.5);
    // Nodes keep insertion order.
    CHECK(g.states() == std::vector<int>{0, 1, 2, 3, 5, 6});
    CHECK(g.node_of(5) == 4);
    CHECK(g.node_of(99) == -1);
    CHECK(g.has_node(6));
    CHECK_FALSE(g.has_node(4));
  }

  TEST_CASE("self transitions register the node but add no edge") {
    TrajectoryGraph g;
    g.add_transition(tr(7, 0, 0.0, 7));
    CHECK(g.num_nodes() == 1);
    CHECK(g.num_edges() == 0);
  }

  TEST_CASE("end_episode closes a truncated rollout") {
    TrajectoryGraph g;
    g.add_transition(tr(0, 0, 0.0, 1));
    g.end_episode(1);
    CHECK(g.episode_ends().count(1) == 1);
    g.add_transition(tr(2, 0, 0.0, 3));
    CHECK(g.episode_starts().count(2) == 1);
  }

  TEST_CASE("repeated edges accumulate a count but stay one edge") {
    TrajectoryGraph g;
    g.add_transition(tr(0, 0, 0.0, 1));
    g.add_transition(tr(1, 0, 0.0, 0));
    CHECK(g.num_edges() == 1);
    CHECK(g.edges().at({0, 1}) == 2);
  }

  TEST_CASE("reset forgets everything") {
    TrajectoryGraph g;
    g.add_transition(tr(0, 0, 1.0, 1, true));
    g.reset();
    CHECK(g.num_nodes() == 0);
    CHECK(g.num_edges() == 0);
    CHECK(g.episode_starts().empty());
    CHECK(g.episode_ends().empty());
    CHECK(g.reward_marks().empty());
    g.add_transition(tr(3, 0, 0.0, 4));
    CHECK(g.episode_starts().count(3) == 1);
  }

  TEST_CASE("dump lists sizes, edges and markers") {
    TrajectoryGraph g;
    g.add_transition(tr(0, 0, 0.7, 1, true));
    std::ostringstream os;
    g.dump(os);
    const std::string text = os.str();
    CHECK(text.find("graph 2 1") != std::string::npos);
    CHECK(text.find("e 0 1 1") != std::string::npos);
  }
}

TEST_SUITE("spectral") {
  TEST_CASE("two connected nodes") {
    TrajectoryGraph g;
    g.add_edge(0, 1);
    SpectralOps ops = build_spectral(g);
    CHECK(ops.states == std::vector<int>{0, 1});
    CHECK(ops.adjacency(0, 0) == 0.0);
    CHECK(ops.adjacency(0, 1) == 1.0);
    CHECK(ops.degree(0) == 2.0);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(ops.t_hat(i, j) == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("triangle") {
    TrajectoryGraph g;
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.add_edge(0, 2);
    SpectralOps ops = build_spectral(g);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(ops.t_hat(i, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("normalised operator is symmetric with spectrum in [-1, 1]") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 5; ++rep) {
      TrajectoryGraph g = potshape::testing::random_marked_graph(rng, 12);
      SpectralOps ops = build_spectral(g);
      CHECK((ops.t_hat - ops.t_hat.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Matrix> es(ops.t_hat);
      CHECK(es.eigenvalues().minCoeff() >= -1.0 - 1e-9);
      CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-9);
    }
  }

  TEST_CASE("empty graphs cannot be lifted") {
    TrajectoryGraph g;
    CHECK_THROWS(build_spectral(g));
  }

  TEST_CASE("dirichlet energy counts ordered pairs") {
    TrajectoryGraph two;
    two.add_edge(0, 1);
    SpectralOps ops2 = build_spectral(two);
    Vector f(2);
    f << 0.0, 1.0;
    CHECK(dirichlet_energy(ops2, f) == doctest::Approx(2.0).epsilon(1e-12));

    TrajectoryGraph tri;
    tri.add_edge(0, 1);
    tri.add_edge(1, 2);
    tri.add_edge(0, 2);
    SpectralOps ops3 = build_spectral(tri);
    Vector h(3);
    h << 1.0, 2.0, 4.0;
    // (1-2)^2 + (2-4)^2 + (1-4)^2 = 14, doubled over ordered pairs.
    CHECK(dirichlet_energy(ops3, h) == doctest::Approx(28.0).epsilon(1e-12));
    CHECK(dirichlet_energy(ops3, Vector::Constant(3, 0.7)) == doctest::Approx(0.0));
  }

  TEST_CASE("random walk rows are uniform over the closed neighbourhood") {
    TrajectoryGraph g;
    g.add_edge(0, 1);
    g.add_edge(0, 2);
    SpectralOps ops = build_spectral(g);
    Matrix p = random_walk_matrix(ops);
    CHECK(p.row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(p(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p(1, 2) == 0.0);
  }

  TEST_CASE("row entropy of stochastic matrices") {
    Matrix p(2, 3);
    p << 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0,
         1.0, 0.0, 0.0;
    Vector h = entropy_rate_rows(p);
    CHECK(h(0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(h(1) == doctest::Approx(0.0));

    Matrix bad(1, 2);
    bad << 0.7, 0.7;
    CHECK_THROWS(entropy_rate_rows(bad));
  }

  TEST_CASE("insertion order survives growth") {
    TrajectoryGraph g;
    g.add_edge(10, 20);
    SpectralOps before = build_spectral(g);
    g.add_edge(20, 30);
    g.add_edge(30, 10);
    SpectralOps after = build_spectral(g);
    for (size_t i = 0; i < before.states.size(); ++i)
      CHECK(after.states[i] == before.states[i]);
  }
}

TEST_SUITE("full_graph") {
  TEST_CASE("model support of the two-arm chain becomes a tree") {
    Env env = make_env("two-arm-chain");
    TrajectoryGraph g = build_full_graph(env.mdp);
    CHECK(g.num_nodes() == 403);
    CHECK(g.num_edges() == 402);
    CHECK(g.episode_starts().count(0) == 1);
    CHECK(g.episode_starts().size() == 1);
    CHECK(g.episode_ends().count(2) == 1);
    CHECK(g.episode_ends().count(402) == 1);
    REQUIRE(g.reward_marks().count(2) == 1);
    REQUIRE(g.reward_marks().count(402) == 1);
    CHECK(g.reward_marks().at(2) == 0.1);
    CHECK(g.reward_marks().at(402) == 10.0);
  }
}
