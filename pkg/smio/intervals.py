"""
Interval vectors and the elementary linear-map bounds every other module
builds on. An :class:`IntervalVector` is a *framer*: a pair of lower and
upper vectors that sandwich some unknown vector element-wise.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

from smio.errors import DimensionError, InvalidInputError, SoundnessFault

ZERO_ROW_TOLERANCE = 1e-9
RANK_TOLERANCE = 1e-10
CONTRACTION_TOLERANCE = 1e-6


def _as_vector(values, name):
    arr = np.array(values, dtype=float).reshape(-1)
    if np.isnan(arr).any():
        raise InvalidInputError(f"{name} contains NaN")
    return arr


def _as_matrix(values, name):
    arr = np.array(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


class IntervalVector:
    """An ordered pair ``(lo, hi)`` of real vectors with ``lo <= hi``.

    Instances are immutable; the underlying arrays are marked read-only.
    """

    __slots__ = ("hi", "lo")

    def __init__(self, lo, hi):
        lo = _as_vector(lo, "lo")
        hi = _as_vector(hi, "hi")
        if lo.shape != hi.shape:
            raise DimensionError(f"lo has {lo.size} entries but hi has {hi.size}")
        if (lo > hi).any():
            bad = np.flatnonzero(lo > hi).tolist()
            raise InvalidInputError(f"lower bound exceeds upper bound at {bad}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def point(cls, x):
        x = _as_vector(x, "x")
        return cls(x, x)

    @classmethod
    def stack(cls, *boxes):
        """Concatenates boxes into the framer of the stacked vector"""
        if not boxes:
            return cls([], [])
        return cls(
            np.concatenate([b.lo for b in boxes]), np.concatenate([b.hi for b in boxes])
        )

    @classmethod
    def from_center(cls, center, radius):
        center = _as_vector(center, "center")
        radius = np.broadcast_to(_as_vector(radius, "radius"), center.shape)
        if (radius < 0).any():
            raise InvalidInputError("radius must be non-negative")
        return cls(center - radius, center + radius)

    @property
    def dim(self):
        return self.lo.size

    def __len__(self):
        return self.lo.size

    @property
    def widths(self):
        return self.hi - self.lo

    @property
    def width(self):
        """The 2-norm of ``hi - lo``"""
        return float(np.linalg.norm(self.widths))

    @property
    def midpoint(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def is_bounded(self):
        return bool(np.isfinite(self.lo).all() and np.isfinite(self.hi).all())

    def __getitem__(self, index):
        if isinstance(index, int):
            index = slice(index, index + 1 if index != -1 else None)
        return IntervalVector(self.lo[index], self.hi[index])

    def contains(self, x, tol=0.0):
        x = _as_vector(x, "x")
        if x.shape != self.lo.shape:
            raise DimensionError(f"expected {self.dim} entries, got {x.size}")
        return bool(((self.lo - tol) <= x).all() and (x <= (self.hi + tol)).all())

    def contains_box(self, other, tol=0.0):
        if other.dim != self.dim:
            raise DimensionError(f"expected {self.dim} entries, got {other.dim}")
        return bool(
            ((self.lo - tol) <= other.lo).all() and (other.hi <= (self.hi + tol)).all()
        )

    def intersect(self, other, tol=ZERO_ROW_TOLERANCE):
        """Intersects two framers of the same vector.

        A crossing of at most ``tol`` is collapsed onto its midpoint; a larger
        one means the true vector is in neither box, which is a
        :class:`SoundnessFault`.
        """
        if other.dim != self.dim:
            raise DimensionError(f"expected {self.dim} entries, got {other.dim}")
        return clamp(np.maximum(self.lo, other.lo), np.minimum(self.hi, other.hi), tol)

    def __eq__(self, other):
        if not isinstance(other, IntervalVector):
            return NotImplemented
        return bool(np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi))

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))

    def __repr__(self):
        return f"IntervalVector(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


def clamp(lo, hi, tol=ZERO_ROW_TOLERANCE):
    """Builds a framer from bounds that may cross by floating-point noise"""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    crossed = lo > hi
    if crossed.any():
        if (lo[crossed] - hi[crossed] > tol).any():
            raise SoundnessFault(
                f"empty intersection at {np.flatnonzero(lo > hi + tol).tolist()}",
                lo=lo,
                hi=hi,
            )
        mid = 0.5 * (lo[crossed] + hi[crossed])
        lo[crossed] = mid
        hi[crossed] = mid
    return IntervalVector(lo, hi)


class SplitMatrix:
    """The sign split ``M = plus - plusplus`` with ``|M| = plus + plusplus``"""

    __slots__ = ("abs", "plus", "plusplus")

    def __init__(self, plus, plusplus, abs):  # pylint:disable=redefined-builtin
        self.plus = plus
        self.plusplus = plusplus
        self.abs = abs

    @property
    def matrix(self):
        return self.plus - self.plusplus

    def __repr__(self):
        return f"SplitMatrix(plus={self.plus.tolist()}, plusplus={self.plusplus.tolist()})"


def split(M):
    M = _as_matrix(M, "M")
    plus = np.where(M >= 0, M, 0.0)
    plusplus = plus - M
    return SplitMatrix(plus, plusplus, plus + plusplus)


def bound_linear_map(A, box):
    """Bounds ``{A x : x in box}`` by ``[A+ lo - A++ hi, A+ hi - A++ lo]``"""
    parts = split(A)
    if parts.plus.shape[1] != box.dim:
        raise DimensionError(
            f"matrix has {parts.plus.shape[1]} columns but the box has {box.dim} entries"
        )
    lo = parts.plus @ box.lo - parts.plusplus @ box.hi
    hi = parts.plus @ box.hi - parts.plusplus @ box.lo
    # the two products round independently
    return IntervalVector(np.minimum(lo, hi), np.maximum(lo, hi))


def rowsupp(M, tol=ZERO_ROW_TOLERANCE):
    M = _as_matrix(M, "M")
    if M.shape[1] == 0:
        return np.zeros(M.shape[0], dtype=int)
    return (np.abs(M).max(axis=1) >= tol).astype(int)


def pseudoinverse(A, rtol=RANK_TOLERANCE):
    """Moore-Penrose pseudoinverse through the SVD.

    Singular values below ``rtol`` times the largest one are truncated.
    """
    A = _as_matrix(A, "A")
    rows, cols = A.shape
    if rows == 0 or cols == 0:
        return np.zeros((cols, rows))
    u, s, vt = linalg.svd(A, full_matrices=False)
    keep = s > rtol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T


def contract_linear(A, target, box, tol=CONTRACTION_TOLERANCE):
    """Shrinks ``box`` to the points whose image ``A x`` may lie in ``target``.

    Each row ``a . x in [t_lo, t_hi]`` bounds every coordinate it touches by
    the row's interval minus the reach of the other terms. Entries with
    ``|a_ij| <= tol`` are skipped. The result may be empty (``lo > hi``);
    callers decide how to report that.
    """
    A = _as_matrix(A, "A")
    if A.shape != (target.dim, box.dim):
        raise DimensionError(
            f"matrix has shape {A.shape}, expected {(target.dim, box.dim)}"
        )
    lo = box.lo.copy()
    hi = box.hi.copy()
    for row, t_lo, t_hi in zip(A, target.lo, target.hi):
        terms_lo = np.minimum(row * lo, row * hi)
        terms_hi = np.maximum(row * lo, row * hi)
        rest_lo = terms_lo.sum() - terms_lo
        rest_hi = terms_hi.sum() - terms_hi
        used = np.abs(row) > tol
        if not used.any():
            continue
        a = row[used]
        first = (t_lo - rest_hi[used]) / a
        second = (t_hi - rest_lo[used]) / a
        lo[used] = np.maximum(lo[used], np.minimum(first, second))
        hi[used] = np.minimum(hi[used], np.maximum(first, second))
    return lo, hi
