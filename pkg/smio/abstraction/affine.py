"""
Parallel affine abstractions.

A pair of functions ``q_lo <= q_hi`` is sandwiched on a box by two affine
functions sharing one slope matrix::

    slopes @ zeta + e_lo <= q_lo(zeta) <= q_hi(zeta) <= slopes @ zeta + e_hi

The slope and offsets come from a linear program over a sample grid of the
box. Lipschitz constants turn the sampled constraints into guarantees: the
offsets are pushed apart by ``sigma = L * cell_half_diag``, so the sandwich
holds at every point of the box, not only at the samples. The returned
offsets already include that slack.

Local abstractions additionally keep their band inside a given global one
at every sample of the local box.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from smio.abstraction.grid import SampleGrid, evaluate_field, sigma
from smio.abstraction.simplex import minimize
from smio.errors import (
    AbstractionError,
    DimensionError,
    DomainError,
    InvalidInputError,
    InvalidPairError,
    LPError,
)
from smio.intervals import IntervalVector, bound_linear_map, clamp

logger = logging.getLogger("smio.abstraction")

PAIR_TOLERANCE = 1e-9
DOMAIN_TOLERANCE = 1e-9


@dataclass(frozen=True)
class AffineAbstraction:
    """Common slope and offsets sandwiching a function pair on ``domain``.

    ``blocks`` gives the column counts of the augmented state, known input
    and noise parts of the argument, which the ``A``, ``B`` and ``W``
    properties slice out of ``slopes``.
    """

    slopes: np.ndarray
    e_hi: np.ndarray
    e_lo: np.ndarray
    theta: float
    domain: IntervalVector
    blocks: tuple = ()
    sigma: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        slopes = np.atleast_2d(np.array(self.slopes, dtype=float))
        e_hi = np.array(self.e_hi, dtype=float).reshape(-1)
        e_lo = np.array(self.e_lo, dtype=float).reshape(-1)
        rows, cols = slopes.shape
        if e_hi.size != rows or e_lo.size != rows:
            raise DimensionError(f"offsets must have {rows} entries")
        if cols != self.domain.dim:
            raise DimensionError(
                f"slopes have {cols} columns but the domain has {self.domain.dim} entries"
            )
        if (e_lo > e_hi).any():
            raise InvalidInputError("lower offset exceeds the upper one")
        blocks = tuple(self.blocks) or (cols, 0, 0)
        if sum(blocks) != cols:
            raise DimensionError(f"column blocks {blocks} do not add up to {cols}")
        sig = np.zeros(rows) if self.sigma is None else np.array(self.sigma, dtype=float)
        for arr in (slopes, e_hi, e_lo, sig):
            arr.setflags(write=False)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "e_hi", e_hi)
        object.__setattr__(self, "e_lo", e_lo)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "sigma", sig)

    @classmethod
    def trivial(cls, output_box, domain, blocks=()):
        """Slope zero with the offsets spanning ``output_box``"""
        return cls(
            np.zeros((output_box.dim, domain.dim)),
            output_box.hi,
            output_box.lo,
            float(output_box.widths.max(initial=0.0)),
            domain,
            blocks,
        )

    @property
    def rows(self):
        return self.slopes.shape[0]

    @property
    def A(self):
        return self.slopes[:, : self.blocks[0]]

    @property
    def B(self):
        return self.slopes[:, self.blocks[0] : self.blocks[0] + self.blocks[1]]

    @property
    def W(self):
        return self.slopes[:, self.blocks[0] + self.blocks[1] :]

    @property
    def offset_widths(self):
        return self.e_hi - self.e_lo

    @property
    def is_trivial(self):
        return not self.slopes.any()

    def lower(self, points):
        return np.atleast_2d(points) @ self.slopes.T + self.e_lo

    def upper(self, points):
        return np.atleast_2d(points) @ self.slopes.T + self.e_hi

    def bounds(self, box):
        """Bounds the band over ``box``"""
        lin = bound_linear_map(self.slopes, box)
        return IntervalVector(lin.lo + self.e_lo, lin.hi + self.e_hi)

    def nested_in(self, other, points, tol=1e-8):
        """Whether this band lies inside ``other`` at every point"""
        return bool(
            (self.lower(points) >= other.lower(points) - tol).all()
            and (self.upper(points) <= other.upper(points) + tol).all()
        )


def _fit_row(P, lo, hi, sig, outer_lo, outer_hi, jac=None):
    samples, active = P.shape
    extra = 0 if jac is None else active
    nvar = 1 + active + 2 + extra
    ub, lb = 1 + active, 2 + active
    slack = slice(3 + active, nvar)
    blocks = []
    rhs = []

    below = np.zeros((samples, nvar))
    below[:, 1 : 1 + active] = P
    below[:, lb] = 1.0
    blocks.append(below)
    rhs.append(lo - sig)

    above = np.zeros((samples, nvar))
    above[:, 1 : 1 + active] = -P
    above[:, ub] = -1.0
    blocks.append(above)
    rhs.append(-hi - sig)

    band = np.zeros((1, nvar))
    band[0, 0] = -1.0
    band[0, ub] = 1.0
    band[0, lb] = -1.0
    blocks.append(band)
    rhs.append([2 * sig])

    if jac is not None:
        # slack per axis t_d >= |slope_d - dq/dz_d| over the Jacobian box
        a, b, coeff = jac
        below[:, slack] = coeff
        above[:, slack] = coeff
        eye = np.eye(active)
        upper = np.zeros((active, nvar))
        upper[:, 1 : 1 + active] = -eye
        upper[:, slack] = -eye
        blocks.append(upper)
        rhs.append(-b)
        lower = np.zeros((active, nvar))
        lower[:, 1 : 1 + active] = eye
        lower[:, slack] = -eye
        blocks.append(lower)
        rhs.append(a)

    if outer_lo is not None:
        inner_lo = np.zeros((samples, nvar))
        inner_lo[:, 1 : 1 + active] = -P
        inner_lo[:, lb] = -1.0
        blocks.append(inner_lo)
        rhs.append(-outer_lo)

        inner_hi = np.zeros((samples, nvar))
        inner_hi[:, 1 : 1 + active] = P
        inner_hi[:, ub] = 1.0
        blocks.append(inner_hi)
        rhs.append(outer_hi)

    objective = np.zeros(nvar)
    objective[0] = 1.0
    sol = minimize(objective, np.vstack(blocks), np.concatenate(rhs))
    total = sig if jac is None else sig + float(jac[2] @ sol[slack])
    return sol[1 : 1 + active], sol[ub], sol[lb], total


def _jacobian_terms(jacobian, grid, active, half, rows):
    """Scaled Jacobian bounds and slack coefficients of the active axes,
    plus the constant slack of the axes without a slope variable"""
    a = np.atleast_2d(np.asarray(jacobian.a, dtype=float))
    b = np.atleast_2d(np.asarray(jacobian.b, dtype=float))
    if a.shape != (rows, grid.box.dim) or b.shape != a.shape:
        raise DimensionError(
            f"Jacobian bounds have shape {a.shape}, expected {(rows, grid.box.dim)}"
        )
    cells = grid.cell_widths
    steepest = np.maximum(np.abs(a), np.abs(b))
    fixed = (steepest[:, ~active] * (0.5 * cells[~active])).sum(axis=1)
    coeff = 0.5 * cells[active] / half[active]
    terms = [
        (a[j, active] * half[active], b[j, active] * half[active], coeff) for j in range(rows)
    ]
    return terms, fixed


def _straight_axes(jacobian, dim):
    """Axes along which every output has a constant partial"""
    if jacobian is None:
        return np.zeros(dim, dtype=bool)
    a = np.atleast_2d(np.asarray(jacobian.a, dtype=float))
    b = np.atleast_2d(np.asarray(jacobian.b, dtype=float))
    if a.shape[1:] != (dim,) or b.shape != a.shape:
        raise DimensionError(f"Jacobian bounds have shape {a.shape}, expected {dim} columns")
    return (a == b).all(axis=0)


def _fit(q_lo, q_hi, box, lipschitz, grid_res, outer, zero_slope, blocks, jacobian=None):
    # the function is affine along straight axes, so their vertices suffice
    subdivisions = np.where(_straight_axes(jacobian, box.dim), 1, grid_res)
    grid = SampleGrid.build(box, subdivisions)
    points = grid.points
    lo_vals = evaluate_field(q_lo, points)
    hi_vals = lo_vals if q_hi is q_lo else evaluate_field(q_hi, points)
    if lo_vals.shape != hi_vals.shape:
        raise DimensionError("lower and upper functions disagree on the output dimension")
    rows = lo_vals.shape[1]
    bad = lo_vals > hi_vals + PAIR_TOLERANCE
    if bad.any():
        sample = int(np.flatnonzero(bad.any(axis=1))[0])
        raise InvalidPairError(
            f"lower function exceeds upper one at sample {points[sample].tolist()}"
        )
    lipschitz = np.asarray(lipschitz, dtype=float).reshape(-1)
    if lipschitz.size != rows:
        raise DimensionError(f"expected {rows} Lipschitz constants, got {lipschitz.size}")
    sig = sigma(lipschitz, grid)

    active = grid.active & (not zero_slope)
    center = box.midpoint
    half = 0.5 * box.widths
    # scaled to [-1, 1] per axis for conditioning
    P = (points[:, active] - center[active]) / half[active]
    if jacobian is not None:
        jac_terms, sig = _jacobian_terms(jacobian, grid, active, half, rows)
    else:
        jac_terms = [None] * rows

    slopes = np.zeros((rows, box.dim))
    e_hi = np.empty(rows)
    e_lo = np.empty(rows)
    slack = np.empty(rows)
    for j in range(rows):
        if outer is not None:
            outer_lo = points @ outer.slopes[j] + outer.e_lo[j]
            outer_hi = points @ outer.slopes[j] + outer.e_hi[j]
        else:
            outer_lo = outer_hi = None
        try:
            scaled, hi_off, lo_off, slack[j] = _fit_row(
                P, lo_vals[:, j], hi_vals[:, j], sig[j], outer_lo, outer_hi, jac_terms[j]
            )
        except LPError as ex:
            raise AbstractionError(f"abstraction of output {j} failed: {ex}") from ex
        slopes[j, active] = scaled / half[active]
        shift = slopes[j] @ center
        e_hi[j] = hi_off - shift
        e_lo[j] = lo_off - shift
    theta = float((e_hi - e_lo - 2 * slack).max(initial=0.0))
    logger.debug(
        "abstracted %d outputs on %d samples (theta=%.3g, sigma=%s)",
        rows,
        len(grid),
        theta,
        np.array2string(slack, precision=3),
    )
    return AffineAbstraction(slopes, e_hi, e_lo, theta, box, blocks, slack)


def abstract_global(
    q_lo, q_hi, space, lipschitz, grid_res=2, *, blocks=(), zero_slope=False, jacobian=None
):
    """Parallel affine abstraction of ``(q_lo, q_hi)`` over the whole ``space``.

    Pass the same callable twice to abstract a single known function. With
    ``jacobian`` (element-wise bounds ``a``, ``b`` on the partials over
    ``space``), the slack between samples is charged per axis against the
    slope instead of through the Lipschitz constant, so affine directions
    cost nothing, and axes with a constant partial are sampled at their
    endpoints only.
    """
    if not space.is_bounded:
        raise DomainError("the abstraction space must be bounded")
    return _fit(q_lo, q_hi, space, lipschitz, grid_res, None, zero_slope, blocks, jacobian)


def abstract_local(
    q_lo, q_hi, box, global_abs, lipschitz, grid_res=1, *, zero_slope=False, jacobian=None
):
    """Parallel affine abstraction on ``box`` whose band stays inside
    ``global_abs`` at every sample of ``box``."""
    domain = global_abs.domain
    if not domain.contains_box(box, DOMAIN_TOLERANCE):
        raise DomainError("box is not contained in the global abstraction domain")
    box = clamp(np.maximum(box.lo, domain.lo), np.minimum(box.hi, domain.hi))
    return _fit(
        q_lo, q_hi, box, lipschitz, grid_res, global_abs, zero_slope, global_abs.blocks,
        jacobian,
    )
