"""Penalized regression over main effects and all pairwise interactions.

The expanded design holds the p original columns followed by the p(p-1)/2
pairwise products in lexicographic order, so coefficient vectors have length
p + p(p-1)/2. Penalties are named by short strings such as ``"lasso"``,
``"cap:q=2"``, ``"bien"``, ``"pairwise:q=2"``, ``"block:q=2,d0=2"`` and
``"nested:q=2"``.
"""

from ._core import (
    check_sandwich,
    expand,
    fit,
    lambda_grid,
    lambda_theory,
    pair_column,
    path,
    penalty_value,
    re_constant,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "check_sandwich",
    "expand",
    "fit",
    "lambda_grid",
    "lambda_theory",
    "pair_column",
    "path",
    "penalty_value",
    "re_constant",
    "simulate",
]
