"""
Data-driven over-approximation of the unknown input dynamics.

Every time step contributes one datum: the midpoint and width of the
framer of the map's argument, and the framer of the input it produced one
step later. Each datum spans a Lipschitz cone; the upper model is the
pointwise minimum of the upper cones and the lower model the maximum of the
lower cones, both clipped to the input space. Adding data can only tighten
the model.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass

import numpy as np

from smio.errors import DimensionError, InvalidInputError
from smio.intervals import IntervalVector

logger = logging.getLogger("smio.learning")

MODEL_HEADER = "# smio learned input model"


@dataclass(frozen=True)
class DataPoint:
    input_mid: np.ndarray
    input_width: float
    output: IntervalVector
    eps: np.ndarray


class _ModelBound:
    """One side of the learned model, as a vector field"""

    def __init__(self, model, upper):
        self.model = model
        self.upper = upper

    def batch(self, points):
        if self.upper:
            return self.model.eval_upper_batch(points)
        return self.model.eval_lower_batch(points)

    def __call__(self, zeta):
        return self.batch(np.atleast_2d(zeta))[0]


class LearnedInputModel:
    """Lipschitz-cone model of the unknown input map.

    :param lipschitz: Lipschitz constant of each output component
    :param domain_output_box: the input space, used as the fallback bound
    :param window: keep only the most recent data when evaluating
    """

    def __init__(self, lipschitz, domain_output_box, window=None):
        self.lipschitz = np.array(lipschitz, dtype=float).reshape(-1)
        if (self.lipschitz < 0).any() or not np.isfinite(self.lipschitz).all():
            raise InvalidInputError("Lipschitz constants must be finite and non-negative")
        if self.lipschitz.size != domain_output_box.dim:
            raise DimensionError(
                f"{self.lipschitz.size} Lipschitz constants for {domain_output_box.dim} outputs"
            )
        if window is not None and window < 1:
            raise InvalidInputError("model window must be at least 1")
        self.domain_output_box = domain_output_box
        self.window = window
        self.data = []
        self._window_warned = False
        self._stack_cache = None

    @property
    def outputs(self):
        return self.lipschitz.size

    def __len__(self):
        return len(self.data)

    def add_datum(self, input_framer, output_framer):
        """Appends the datum pairing an argument framer with the framer of
        the input it produced"""
        if output_framer.dim != self.outputs:
            raise DimensionError(
                f"output framer has {output_framer.dim} entries, expected {self.outputs}"
            )
        if self.data and input_framer.dim != self.data[0].input_mid.size:
            raise DimensionError(
                f"input framer has {input_framer.dim} entries, expected {self.data[0].input_mid.size}"
            )
        width = input_framer.width
        mid = input_framer.midpoint
        mid.setflags(write=False)
        eps = 2 * self.lipschitz * width
        eps.setflags(write=False)
        self.data.append(DataPoint(mid, width, output_framer, eps))
        self._stack_cache = None
        if self.window is not None and len(self.data) > self.window and not self._window_warned:
            logger.warning(
                "model window of %d reached; older data are ignored and the model may loosen",
                self.window,
            )
            self._window_warned = True
        return self

    def _active(self):
        if self.window is not None:
            return self.data[-self.window :]
        return self.data

    def _stacked(self):
        if self._stack_cache is None:
            active = self._active()
            self._stack_cache = (
                np.array([dp.input_mid for dp in active]),
                np.array([dp.output.hi + dp.eps for dp in active]),
                np.array([dp.output.lo - dp.eps for dp in active]),
            )
        return self._stack_cache

    def _distances(self, points):
        mids = self._stacked()[0]
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != mids.shape[1]:
            raise DimensionError(f"query has {points.shape[1]} entries, expected {mids.shape[1]}")
        return np.linalg.norm(points[:, None, :] - mids[None, :, :], axis=2)

    def eval_upper_batch(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        cap = np.broadcast_to(self.domain_output_box.hi, (points.shape[0], self.outputs))
        if not self.data:
            return cap.copy()
        dist = self._distances(points)
        cones = self._stacked()[1][None, :, :] + dist[:, :, None] * self.lipschitz
        return np.minimum(cones.min(axis=1), cap)

    def eval_lower_batch(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        floor = np.broadcast_to(self.domain_output_box.lo, (points.shape[0], self.outputs))
        if not self.data:
            return floor.copy()
        dist = self._distances(points)
        cones = self._stacked()[2][None, :, :] - dist[:, :, None] * self.lipschitz
        return np.maximum(cones.max(axis=1), floor)

    def eval_upper(self, zeta, j):
        return float(self.eval_upper_batch(zeta)[0, j])

    def eval_lower(self, zeta, j):
        return float(self.eval_lower_batch(zeta)[0, j])

    def model_as_pair(self):
        """The ``(lower, upper)`` vector fields of the model"""
        return _ModelBound(self, upper=False), _ModelBound(self, upper=True)

    def prune(self):
        """Drops data whose cones are dominated everywhere by another datum.

        A cone is dominated exactly when another cone lies below it at its
        own apex, so evaluations do not change. Returns the number of data
        dropped.
        """
        removed = set()
        for s, cand in enumerate(self.data):
            for t, other in enumerate(self.data):
                if t == s or t in removed:
                    continue
                dist = np.linalg.norm(cand.input_mid - other.input_mid) * self.lipschitz
                if (other.output.hi + other.eps + dist <= cand.output.hi + cand.eps).all() and (
                    other.output.lo - other.eps - dist >= cand.output.lo - cand.eps
                ).all():
                    removed.add(s)
                    break
        dropped = len(removed)
        if dropped:
            self.data = [dp for s, dp in enumerate(self.data) if s not in removed]
            self._stack_cache = None
            logger.debug("pruned %d dominated data", dropped)
        return dropped

    def dump(self):
        """Serializes the model as a whitespace-separated table"""
        out = io.StringIO()
        n_in = self.data[0].input_mid.size if self.data else 0
        out.write(MODEL_HEADER + "\n")
        out.write("# lipschitz " + " ".join(f"{v:.17g}" for v in self.lipschitz) + "\n")
        out.write("# domain_lo " + " ".join(f"{v:.17g}" for v in self.domain_output_box.lo) + "\n")
        out.write("# domain_hi " + " ".join(f"{v:.17g}" for v in self.domain_output_box.hi) + "\n")
        out.write(f"# window {self.window if self.window is not None else 'none'}\n")
        columns = (
            ["s"]
            + [f"mid{i + 1}" for i in range(n_in)]
            + ["width"]
            + [f"lo{j + 1}" for j in range(self.outputs)]
            + [f"hi{j + 1}" for j in range(self.outputs)]
            + [f"eps{j + 1}" for j in range(self.outputs)]
        )
        out.write(" ".join(columns) + "\n")
        for s, dp in enumerate(self.data):
            values = [*dp.input_mid, dp.input_width, *dp.output.lo, *dp.output.hi, *dp.eps]
            out.write(f"{s} " + " ".join(f"{v:.17g}" for v in values) + "\n")
        return out.getvalue()

    @classmethod
    def load(cls, text):
        """Rebuilds a model written by :meth:`dump`"""
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != MODEL_HEADER:
            raise InvalidInputError("not a learned model table")
        meta = {}
        body = []
        header = None
        for ln in lines[1:]:
            if ln.startswith("#"):
                key, _, value = ln[1:].strip().partition(" ")
                meta[key] = value.split()
            elif header is None:
                header = ln.split()
            else:
                body.append([float(v) for v in ln.split()])
        try:
            lipschitz = [float(v) for v in meta["lipschitz"]]
            box = IntervalVector(
                [float(v) for v in meta["domain_lo"]], [float(v) for v in meta["domain_hi"]]
            )
            window = meta.get("window", ["none"])[0]
        except KeyError as ex:
            raise InvalidInputError(f"model table is missing {ex}") from None
        model = cls(lipschitz, box, None if window == "none" else int(window))
        p = len(lipschitz)
        n_in = sum(1 for c in header or () if c.startswith("mid"))
        for row in body:
            mid = np.array(row[1 : 1 + n_in])
            width = row[1 + n_in]
            lo = row[2 + n_in : 2 + n_in + p]
            hi = row[2 + n_in + p : 2 + n_in + 2 * p]
            eps = np.array(row[2 + n_in + 2 * p : 2 + n_in + 3 * p])
            mid.setflags(write=False)
            eps.setflags(write=False)
            model.data.append(DataPoint(mid, width, IntervalVector(lo, hi), eps))
        return model
