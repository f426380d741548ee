#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "potshape/dp.hpp"
#include "potshape/harness.hpp"

namespace py = pybind11;
using namespace potshape;

namespace {

PotentialTable make_offline_potential(const Env& env, const std::string& potential, double eta,
                                      int hidden, int iterations, uint64_t seed) {
  switch (provenance_from_string(potential)) {
    case Provenance::Zero:
      return PotentialTable::zero(env.mdp.num_states);
    case Provenance::Constant:
      return PotentialTable::constant(env.mdp.num_states, 0.5);
    case Provenance::L2:
      if (!env.layout)
        throw std::invalid_argument("distance potential needs a grid environment");
      return l2_potential(*env.layout);
    case Provenance::AlphaBeta:
      return alpha_beta_potential(env.mdp, env.mdp.max_steps);
    case Provenance::Gcn: {
      GcnConfig cfg;
      cfg.eta = eta;
      cfg.hidden = hidden;
      cfg.iterations = iterations;
      cfg.seed = seed;
      GcnModel model(cfg);
      const TrajectoryGraph graph = build_full_graph(env.mdp);
      return train_potential(model, graph, env.mdp.num_states);
    }
  }
  throw std::logic_error("unhandled provenance");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "graph-learned potential shaping: environments, potentials, training loop";

  py::class_<MdpSpec>(m, "MdpSpec")
      .def_readonly("num_states", &MdpSpec::num_states)
      .def_readonly("num_actions", &MdpSpec::num_actions)
      .def_readonly("gamma", &MdpSpec::gamma)
      .def_readonly("max_steps", &MdpSpec::max_steps)
      .def_readonly("reward", &MdpSpec::reward)
      .def_readonly("start_distribution", &MdpSpec::start_distribution)
      .def("transition", [](const MdpSpec& mdp, int a) { return mdp.transition.at(static_cast<size_t>(a)); })
      .def("is_terminal", &MdpSpec::is_terminal);

  py::class_<GridLayout>(m, "GridLayout")
      .def_readonly("width", &GridLayout::width)
      .def_readonly("height", &GridLayout::height)
      .def("is_wall", &GridLayout::is_wall)
      .def("state_of", &GridLayout::state_of)
      .def("cell_of", &GridLayout::cell_of);

  py::class_<Env>(m, "Env")
      .def_readonly("name", &Env::name)
      .def_readonly("mdp", &Env::mdp)
      .def_property_readonly("layout", [](const Env& e) -> py::object {
        return e.layout ? py::cast(*e.layout) : py::none();
      });

  py::class_<PotentialTable>(m, "PotentialTable")
      .def_readonly("phi", &PotentialTable::phi)
      .def_readonly("default_phi", &PotentialTable::default_phi)
      .def_property_readonly("provenance",
                             [](const PotentialTable& t) { return to_string(t.provenance); })
      .def("__call__", &PotentialTable::operator());

  m.def("make_env", &make_env, py::arg("name"),
        "fourrooms | fourrooms-traps | smaze | two-arm-chain");
  m.def("load_mdp_file", &load_mdp_file, py::arg("path"));

  m.def(
      "value_iteration",
      [](const MdpSpec& mdp, double tol) {
        const DpResult r = value_iteration(mdp, tol);
        return py::make_tuple(r.v, r.q, r.iterations, r.residual);
      },
      py::arg("mdp"), py::arg("tol") = 1e-13,
      "returns (values, action_values, iterations, residual)");

  m.def(
      "potential",
      [](const std::string& env_name, const std::string& kind, double eta, int hidden,
         int iterations, uint64_t seed) {
        return make_offline_potential(make_env(env_name), kind, eta, hidden, iterations, seed);
      },
      py::arg("env"), py::arg("kind"), py::arg("eta") = 10.0, py::arg("hidden") = 64,
      py::arg("iterations") = 1500, py::arg("seed") = 0,
      "potential table for an environment; kind is gcn | ab | l2 | const | zero");

  m.def(
      "compare_potentials",
      [](const PotentialTable& a, const PotentialTable& b) {
        const PotentialComparison c = compare_potentials(a, b);
        return py::make_tuple(c.spearman, c.max_abs_diff);
      },
      py::arg("a"), py::arg("b"), "returns (spearman, max_abs_diff)");

  m.def(
      "run_experiment",
      [](const std::string& env_name, const std::string& potential, int episodes, double alpha,
         double eta, double lambda_, uint64_t seed, int retrain_every, bool reset_graph,
         int gcn_iterations) {
        const Env env = make_env(env_name);
        RunConfig cfg;
        cfg.env_name = env_name;
        cfg.provenance = provenance_from_string(potential);
        cfg.episodes = episodes;
        cfg.agent.alpha = alpha;
        cfg.agent.lambda = lambda_;
        cfg.gcn.eta = eta;
        cfg.gcn.iterations = gcn_iterations;
        cfg.retrain_every = retrain_every;
        cfg.reset_graph = reset_graph;
        const ExperimentTrace t = run_experiment(env, cfg, seed);

        py::list steps, returns, cum;
        for (const EpisodeStat& e : t.episodes) {
          steps.append(e.steps);
          returns.append(e.discounted_return);
          cum.append(e.cumulative_steps);
        }
        py::dict out;
        out["steps"] = steps;
        out["returns"] = returns;
        out["cum_steps"] = cum;
        out["theta"] = t.final_agent.theta;
        out["v"] = t.final_agent.v;
        out["potential"] = t.final_potential;
        return out;
      },
      py::arg("env"), py::arg("potential") = "gcn", py::arg("episodes") = 300,
      py::arg("alpha") = 0.6, py::arg("eta") = 10.0, py::arg("lambda_") = 0.9,
      py::arg("seed") = 0, py::arg("retrain_every") = 1, py::arg("reset_graph") = false,
      py::arg("gcn_iterations") = 200);

  m.def(
      "toy_lambda_sweep",
      [](const std::vector<double>& lambdas, double eta, int hidden, int iterations,
         uint64_t seed, long max_iterations) {
        const Env env = make_env("two-arm-chain");
        const PotentialTable phi =
            make_offline_potential(env, "gcn", eta, hidden, iterations, seed);
        ToySweepConfig cfg;
        cfg.lambdas = lambdas;
        cfg.max_iterations = max_iterations;
        py::list out;
        for (const ToySweepPoint& p : toy_lambda_sweep(env.mdp, phi, cfg)) {
          py::dict row;
          row["lambda"] = p.lambda;
          row["plain"] = p.plain_iterations;
          row["shaped"] = p.shaped_iterations;
          row["plain_censored"] = p.plain_censored;
          row["shaped_censored"] = p.shaped_censored;
          out.append(row);
        }
        return out;
      },
      py::arg("lambdas") = std::vector<double>{}, py::arg("eta") = 10.0, py::arg("hidden") = 64,
      py::arg("iterations") = 1500, py::arg("seed") = 0, py::arg("max_iterations") = 1000000L);
}
