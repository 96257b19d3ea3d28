from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from smio.errors import DimensionError, InvalidInputError
from smio.intervals import IntervalVector

DEGENERATE_WIDTH = 1e-12


def evaluate_field(q, points):
    """Evaluates a vector field at every row of ``points``.

    Fields exposing a ``batch`` method are evaluated in one call; plain
    callables are mapped point by point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    batch = getattr(q, "batch", None)
    if batch is not None:
        values = np.asarray(batch(points), dtype=float)
    else:
        values = np.array([np.asarray(q(p), dtype=float).reshape(-1) for p in points])
    if values.ndim == 1:
        values = values.reshape(points.shape[0], -1)
    if values.shape[0] != points.shape[0]:
        raise DimensionError(
            f"field returned {values.shape[0]} rows for {points.shape[0]} points"
        )
    if not np.isfinite(values).all():
        raise InvalidInputError("vector field returned non-finite values")
    return values


@dataclass(frozen=True)
class SampleGrid:
    """A uniform grid over a box, vertices included.

    Dimensions of (numerically) zero width contribute their midpoint only.
    ``cell_half_diag`` bounds the distance from any point of the box to the
    vertices of its grid cell, in the averaged sense of multilinear
    interpolation.
    """

    box: IntervalVector
    subdivisions: tuple
    points: np.ndarray
    cell_half_diag: float

    @classmethod
    def build(cls, box, subdivisions=2):
        subdivisions = np.broadcast_to(np.asarray(subdivisions, dtype=int), (box.dim,))
        if (subdivisions < 1).any():
            raise InvalidInputError("grid resolution must be at least 1")
        axes = []
        half_diag_sq = 0.0
        for lo, hi, count in zip(box.lo, box.hi, subdivisions):
            if hi - lo <= DEGENERATE_WIDTH:
                axes.append(np.array([0.5 * (lo + hi)]))
                half_diag_sq += (0.5 * (hi - lo)) ** 2
            else:
                axes.append(np.linspace(lo, hi, int(count) + 1))
                half_diag_sq += (0.5 * (hi - lo) / count) ** 2
        if axes:
            mesh = np.meshgrid(*axes, indexing="ij")
            points = np.stack([m.reshape(-1) for m in mesh], axis=1)
        else:
            points = np.zeros((1, 0))
        points.setflags(write=False)
        return cls(box, tuple(int(s) for s in subdivisions), points, float(np.sqrt(half_diag_sq)))

    @property
    def active(self):
        """Mask of the dimensions the grid actually spans"""
        return self.box.widths > DEGENERATE_WIDTH

    @property
    def cell_widths(self):
        """Per-axis cell side; a degenerate axis keeps its full (tiny) width"""
        widths = self.box.widths
        return np.where(self.active, widths / np.asarray(self.subdivisions, dtype=float), widths)

    def __len__(self):
        return self.points.shape[0]


def sigma(lipschitz, grid):
    """Sampling slack ``L_j * cell_half_diag`` per output"""
    lipschitz = np.asarray(lipschitz, dtype=float).reshape(-1)
    if (lipschitz < 0).any() or not np.isfinite(lipschitz).all():
        raise InvalidInputError("Lipschitz constants must be finite and non-negative")
    return lipschitz * grid.cell_half_diag
