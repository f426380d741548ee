"""Graph-learned potential functions for reward shaping."""

from ._core import (
    Env,
    GridLayout,
    MdpSpec,
    PotentialTable,
    compare_potentials,
    load_mdp_file,
    make_env,
    potential,
    run_experiment,
    toy_lambda_sweep,
    value_iteration,
)

__all__ = [
    "Env",
    "GridLayout",
    "MdpSpec",
    "PotentialTable",
    "compare_potentials",
    "load_mdp_file",
    "make_env",
    "potential",
    "run_experiment",
    "toy_lambda_sweep",
    "value_iteration",
]
