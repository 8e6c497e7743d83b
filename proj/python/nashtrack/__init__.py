"""Nash equilibrium tracking for multicarrier interference networks with
finite-state Markov fading.

The heavy lifting lives in the compiled ``_core`` extension; this module only
re-exports it and adds a couple of conveniences.
"""

import json as _json

from ._core import (
    ExperimentPoint,
    ScalarChain,
    average_sojourn_time,
    build_scalar_chain,
    desk_mdp_costs,
    epsilon_for_sojourn,
    gradient,
    hessian_block,
    modulus_lower_bound,
    contraction_modulus,
    optimal_scaling,
    solve_ne,
    sojourn_pmf,
    theoretical_bounds,
    waterfill,
    _run_experiment,
    _sweep_sojourn,
)

__all__ = [
    "ExperimentPoint",
    "ScalarChain",
    "average_sojourn_time",
    "build_scalar_chain",
    "contraction_modulus",
    "desk_mdp_costs",
    "epsilon_for_sojourn",
    "gradient",
    "hessian_block",
    "modulus_lower_bound",
    "optimal_scaling",
    "run_experiment",
    "solve_ne",
    "sojourn_pmf",
    "sweep_sojourn",
    "theoretical_bounds",
    "waterfill",
]


def run_experiment(config=None, **overrides):
    """Run every configured policy; `config` is a dict in the CLI's JSON format."""
    cfg = dict(config or {})
    cfg.update(overrides)
    return _run_experiment(_json.dumps(cfg))


def sweep_sojourn(mean_sojourn_times, config=None, **overrides):
    """Run the configured policies at each mean sojourn time."""
    cfg = dict(config or {})
    cfg.update(overrides)
    return _sweep_sojourn(_json.dumps(cfg), list(mean_sojourn_times))
