"""Model-free price bounds for multi-asset options.

Markets, trainer settings and run configs are plain dicts in the same JSON
shape the command-line tool reads. Results come back as dicts.
"""

import json
import os

import numpy as np

from . import _core
from ._core import Error, canonical_payoff, derive_seed

__all__ = [
    "Error",
    "bound",
    "black_scholes_call",
    "canonical_payoff",
    "check_feasibility",
    "convergence",
    "derive_seed",
    "eval_payoff",
    "generate",
    "load_config",
    "lp_bounds",
    "price",
    "sweep",
    "timing",
    "train_bound",
    "verify",
]


def _text(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def _path(p):
    return None if p is None else os.fspath(p)


def eval_payoff(text, values):
    """Evaluates a payoff on each row of an (n, d) array of prices."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    return _core.eval_payoff(text, values)


def price(market, payoffs, samples=1_000_000, seed=0):
    """Monte Carlo prices on the Gaussian-copula market, one shared batch for all payoffs."""
    return json.loads(_core.price_mc(_text(market), list(payoffs), int(samples), int(seed)))


def black_scholes_call(market, asset, strike):
    """Closed-form call on asset `asset` (1-based, as in x1)."""
    return _core.black_scholes_call(_text(market), int(asset), float(strike))


def train_bound(market, target, constraints=(), direction="upper", reference="product", trainer=None,
                grid=(), trace_stride=100):
    """Trains the penalized dual. `constraints` holds (payoff, price) pairs."""
    out = _core.train_bound(_text(market), reference, list(grid), target,
                            [(p, float(v)) for p, v in constraints], direction,
                            _text(trainer or {}), int(trace_stride))
    return json.loads(out)


def lp_bounds(market, grid, target, constraints=()):
    """LP max and min of E[target] on the quantile grid. `constraints` holds (payoff, price, tolerance)."""
    return json.loads(_core.lp_bounds(_text(market), list(grid), target,
                                      [(p, float(v), float(t)) for p, v, t in constraints]))


def check_feasibility(market, grid, constraints):
    """Whether some coupling of the grid marginals reproduces the prices within their tolerances."""
    return json.loads(_core.check_feasibility(_text(market), list(grid),
                                              [(p, float(v), float(t)) for p, v, t in constraints]))


def load_config(path):
    """Reads and validates a run config; returns it with every default filled in."""
    return json.loads(_core.load_config(os.fspath(path)))


def generate(config, out):
    return json.loads(_core.generate(_text(config), os.fspath(out)))


def bound(config, out, direction="both", instruments=None):
    return json.loads(_core.bound(_text(config), os.fspath(out), direction, _path(instruments)))


def verify(config, out, instruments=None, bound_result=None):
    return json.loads(_core.verify(_text(config), os.fspath(out), _path(instruments), _path(bound_result)))


def sweep(config, out, direction="both"):
    return json.loads(_core.sweep(_text(config), os.fspath(out), direction))


def convergence(config, out):
    return json.loads(_core.convergence(_text(config), os.fspath(out)))


def timing(config, out):
    return json.loads(_core.timing(_text(config), os.fspath(out)))
