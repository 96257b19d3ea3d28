from __future__ import annotations

from smio.abstraction.affine import AffineAbstraction, abstract_global, abstract_local
from smio.abstraction.grid import SampleGrid, evaluate_field, sigma
from smio.abstraction.simplex import Inequality, minimize, solve_lp

__all__ = (
    "AffineAbstraction",
    "Inequality",
    "SampleGrid",
    "abstract_global",
    "abstract_local",
    "evaluate_field",
    "minimize",
    "sigma",
    "solve_lp",
)
