"""
Mixed-monotone decomposition functions.

A decomposition function ``q_d(x, y)`` of a map ``q`` is increasing in ``x``,
decreasing in ``y`` and agrees with ``q`` on the diagonal, so that for any
``lo <= x <= hi`` we get ``q_d(lo, hi) <= q(x) <= q_d(hi, lo)``. It is built
here from element-wise bounds on the Jacobian of ``q``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from smio.abstraction import abstract_global, evaluate_field
from smio.errors import DimensionError, DomainError, InvalidInputError
from smio.intervals import IntervalVector

logger = logging.getLogger("smio.monotone")

DOMAIN_TOLERANCE = 1e-9


@dataclass(frozen=True)
class JacobianBounds:
    """Element-wise bounds ``a <= dq_i/dx_j <= b``"""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.array(self.a, dtype=float))
        b = np.atleast_2d(np.array(self.b, dtype=float))
        if a.shape != b.shape:
            raise DimensionError(f"bound shapes differ: {a.shape} vs {b.shape}")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise InvalidInputError("Jacobian bounds must be finite")
        if (a > b).any():
            raise InvalidInputError("lower Jacobian bound exceeds the upper one")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def shape(self):
        return self.a.shape

    def lipschitz(self):
        """Row-wise Lipschitz constants implied by the bounds"""
        return np.linalg.norm(np.maximum(np.abs(self.a), np.abs(self.b)), axis=1)


@dataclass(frozen=True)
class DecompositionFunction:
    """``q_d(x, y)_i = q(z_i)_i + C_i (x - y)``, where ``z_i`` takes ``x_j``
    wherever ``use_x[i, j]`` is set and ``y_j`` elsewhere."""

    base: Callable
    bounds: JacobianBounds
    C: np.ndarray
    use_x: np.ndarray
    domain: Optional[IntervalVector] = None

    @property
    def shape(self):
        return self.C.shape

    def __call__(self, x, y):
        return eval_decomposition(self, x, y)


def build_decomposition(q, bounds, domain=None):
    """Builds a decomposition function of ``q`` from its Jacobian bounds.

    Per entry ``(i, j)``: a non-negative lower bound takes ``x_j`` with no
    slope, a non-positive upper bound takes ``y_j`` with no slope, and a
    straddling entry takes ``x_j`` and adds ``|a_ij| (x_j - y_j)``.
    """
    if not isinstance(bounds, JacobianBounds):
        bounds = JacobianBounds(*bounds)
    a, b = bounds.a, bounds.b
    if domain is not None and domain.dim != a.shape[1]:
        raise DimensionError(
            f"domain has {domain.dim} entries but the bounds have {a.shape[1]} columns"
        )
    increasing = a >= 0
    decreasing = ~increasing & (b <= 0)
    straddling = ~increasing & ~decreasing
    C = np.where(straddling, np.abs(a), 0.0)
    use_x = ~decreasing
    C.setflags(write=False)
    use_x.setflags(write=False)
    logger.debug(
        "decomposition %s: %d straddling Jacobian entries", a.shape, int(straddling.sum())
    )
    return DecompositionFunction(q, bounds, C, use_x, domain)


def _check_point(fd, v, name):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != fd.C.shape[1]:
        raise DimensionError(f"{name} has {v.size} entries, expected {fd.C.shape[1]}")
    if fd.domain is not None and not fd.domain.contains(v, DOMAIN_TOLERANCE):
        raise DomainError(f"{name} lies outside the decomposition domain")
    return v


def eval_decomposition(fd, x, y):
    x = _check_point(fd, x, "x")
    y = _check_point(fd, y, "y")
    rows = fd.C.shape[0]
    # one evaluation of q per output row, all batched together
    points = np.where(fd.use_x, x, y)
    values = evaluate_field(fd.base, points)
    return values[np.arange(rows), np.arange(rows)] + fd.C @ (x - y)


def growth_bound(fd, global_abs, dz):
    """Upper bound on ``q_d(hi, lo) - q_d(lo, hi)`` for boxes of width ``dz``"""
    dz = np.asarray(dz, dtype=float).reshape(-1)
    if (dz < 0).any():
        raise InvalidInputError("widths must be non-negative")
    slopes = np.abs(global_abs.slopes)
    if slopes.shape != fd.C.shape:
        raise DimensionError(
            f"abstraction slopes {slopes.shape} do not match the decomposition {fd.C.shape}"
        )
    return (slopes + 2 * fd.C) @ dz + (global_abs.e_hi - global_abs.e_lo)


class _CentralDifference:
    def __init__(self, q, column, step):
        self.q = q
        self.column = column
        self.step = step

    def batch(self, points):
        shift = np.zeros(points.shape[1])
        shift[self.column] = self.step
        upper = evaluate_field(self.q, points + shift)
        lower = evaluate_field(self.q, points - shift)
        return (upper - lower) / (2 * self.step)

    def __call__(self, point):
        return self.batch(np.atleast_2d(point))[0]


def jacobian_bounds_from_samples(
    q, box, grid_res=2, derivative_lipschitz=0.0, step=1e-6
):
    """Bounds every partial derivative of ``q`` on ``box`` by a horizontal
    (slope-zero) abstraction of its central finite differences.

    ``derivative_lipschitz`` bounds how fast the partials vary; it feeds the
    sampling slack, so the default of zero gives the plain sampled range.
    """
    columns = box.dim
    sample = evaluate_field(q, box.midpoint[None, :])
    rows = sample.shape[1]
    lipschitz = np.broadcast_to(
        np.asarray(derivative_lipschitz, dtype=float), (rows,)
    ).copy()
    a = np.empty((rows, columns))
    b = np.empty((rows, columns))
    for j in range(columns):
        partial = _CentralDifference(q, j, step)
        band = abstract_global(partial, partial, box, lipschitz, grid_res, zero_slope=True)
        a[:, j] = band.e_lo
        b[:, j] = band.e_hi
    return JacobianBounds(a, b)
