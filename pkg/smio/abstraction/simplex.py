"""
A small dense two-phase simplex solver.

Programs come in inequality form, ``min c.x  s.t.  G x <= h`` with free
variables, which is what affine abstraction produces: a handful of
variables and many sample constraints. We solve the dual in standard form,
``min h.l  s.t.  G^T l = -c, l >= 0``, whose tableau has one row per primal
variable, and read the primal optimum off the simplex multipliers. Bland's
rule picks both the entering and the leaving variable, so the method cannot
cycle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from smio.errors import (
    DimensionError,
    InfeasibleProgramError,
    InvalidInputError,
    LPError,
    UnboundedProgramError,
)

logger = logging.getLogger("smio.abstraction")

TOLERANCE = 1e-9
MAX_ITERATIONS = 50_000


@dataclass(frozen=True)
class Inequality:
    """The constraint ``coeffs . x <= rhs``"""

    coeffs: tuple
    rhs: float

    @classmethod
    def ge(cls, coeffs, rhs):
        """The constraint ``coeffs . x >= rhs``"""
        return cls(tuple(-float(c) for c in coeffs), -float(rhs))


class _Unbounded(Exception):
    def __init__(self, column):
        super().__init__(column)
        self.column = column


class _Tableau:
    def __init__(self, A, b, tol):
        rows, cols = A.shape
        self.tol = tol
        self.cols = cols
        self.signs = np.where(b < 0, -1.0, 1.0)
        self.T = np.hstack(
            [A * self.signs[:, None], np.eye(rows), (b * self.signs)[:, None]]
        )
        self.basis = np.arange(cols, cols + rows)
        self.iterations = 0

    def pivot(self, row, col):
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        # ratio ties resolved within tolerance may leave tiny negatives
        rhs = T[:, -1]
        rhs[(rhs < 0) & (rhs > -self.tol)] = 0.0
        self.basis[row] = col
        self.iterations += 1

    def objective(self, costs):
        return float(costs[self.basis] @ self.T[:, -1])

    def run(self, costs):
        T = self.T
        tol = self.tol
        while True:
            if self.iterations > MAX_ITERATIONS:
                raise LPError(f"simplex did not terminate in {MAX_ITERATIONS} pivots")
            reduced = costs[: self.cols] - costs[self.basis] @ T[:, : self.cols]
            entering = np.flatnonzero(reduced < -tol)
            if not entering.size:
                return
            col = entering[0]
            column = T[:, col]
            positive = column > tol
            if not positive.any():
                raise _Unbounded(col)
            ratios = np.full(column.shape, np.inf)
            ratios[positive] = T[positive, -1] / column[positive]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + tol)
            row = ties[np.argmin(self.basis[ties])]
            self.pivot(row, col)

    def drive_out_artificials(self):
        for row in range(self.T.shape[0]):
            if self.basis[row] < self.cols:
                continue
            candidates = np.abs(self.T[row, : self.cols])
            col = int(np.argmax(candidates)) if candidates.size else 0
            if candidates.size and candidates[col] > self.tol:
                self.pivot(row, col)
            # otherwise the row is redundant and its artificial stays basic at zero

    def multipliers(self, costs):
        rows = self.T.shape[0]
        inverse = self.T[:, self.cols : self.cols + rows]
        return self.signs * (costs[self.basis] @ inverse)

    def farkas_support(self, col):
        ray = {int(col): 1.0}
        for row, var in enumerate(self.basis):
            if var < self.cols and -self.T[row, col] > self.tol:
                ray[int(var)] = -self.T[row, col]
        return sorted(ray)


def _dual_phases(c, G, h, tol):
    nvar = c.size
    tab = _Tableau(G.T.copy(), -c, tol)
    art_costs = np.concatenate([np.zeros(tab.cols), np.ones(nvar)])
    tab.run(art_costs)
    scale = max(1.0, float(np.abs(c).max(initial=0.0)))
    if tab.objective(art_costs) > tol * scale * max(1, nvar):
        return None, tab.iterations
    tab.drive_out_artificials()
    costs = np.concatenate([h, np.zeros(nvar)])
    try:
        tab.run(costs)
    except _Unbounded as ex:
        raise InfeasibleProgramError(
            "constraints are inconsistent", tab.farkas_support(ex.column)
        ) from None
    return tab.multipliers(costs), tab.iterations


def minimize(c, G, h, tol=TOLERANCE):
    """Minimizes ``c.x`` subject to ``G x <= h``; returns an optimal vertex"""
    c = np.asarray(c, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float).reshape(-1)
    G = np.asarray(G, dtype=float).reshape(h.size, c.size)
    if not (np.isfinite(c).all() and np.isfinite(G).all() and np.isfinite(h).all()):
        raise InvalidInputError("linear program data must be finite")
    if not h.size:
        if (np.abs(c) > tol).any():
            raise UnboundedProgramError("objective is unbounded without constraints")
        return np.zeros(c.size)

    x, iterations = _dual_phases(c, G, h, tol)
    if x is None:
        # the dual is infeasible, so the primal is either infeasible or unbounded;
        # the zero-cost dual is always feasible and raises if the primal is not
        _dual_phases(np.zeros_like(c), G, h, tol)
        raise UnboundedProgramError("objective is unbounded below")
    logger.debug(
        "LP with %d variables and %d constraints solved in %d pivots",
        c.size,
        h.size,
        iterations,
    )
    return x


def solve_lp(objective, constraints, tol=TOLERANCE):
    """Solves ``min objective . x`` over a list of :class:`Inequality`"""
    objective = np.asarray(objective, dtype=float).reshape(-1)
    constraints = list(constraints)
    G = np.zeros((len(constraints), objective.size))
    h = np.zeros(len(constraints))
    for i, con in enumerate(constraints):
        coeffs = np.asarray(con.coeffs, dtype=float).reshape(-1)
        if coeffs.size != objective.size:
            raise DimensionError(
                f"constraint {i} has {coeffs.size} coefficients, expected {objective.size}"
            )
        G[i] = coeffs
        h[i] = con.rhs
    return minimize(objective, G, h, tol)
