"""
Stability certificate and width bounds for the observer.

The framer widths obey the comparison recursion
``dz_k <= A(D1, D2, D3) dz_{k-1} + Delta(D1, D2, D3)`` for every choice of
binary diagonal matrices with ``D1[i, i] = 0`` wherever the observation
slope leaves coordinate ``i`` unobserved. The certificate searches all such
choices for the smallest spectral norm of the contraction matrix, widened
by the columns acting on the process noise; a norm of at most one means the
widths stay bounded. Once a choice is fixed, the
recursion itself gives an explicit bound on every width.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import linalg

from smio.errors import DimensionError, InvalidInputError
from smio.formats import format_matrix, format_vector, parse_matrix, parse_vector
from smio.intervals import pseudoinverse, rowsupp

logger = logging.getLogger("smio.stability")

CERTIFIED = "certified"
MARGINAL = "marginally certified"
NOT_CERTIFIED = "not certified"
MARGIN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class StabilityInputs:
    """Slope blocks of the global abstractions and the decomposition slope.

    Every ``A`` is restricted to the augmented-state columns; the ``W`` and
    ``C_f_w`` matrices act on the noise.
    """

    A_f: np.ndarray
    A_g: np.ndarray
    A_h: np.ndarray
    C_f_z: np.ndarray
    r: np.ndarray
    W_f: Optional[np.ndarray] = None
    W_g: Optional[np.ndarray] = None
    W_h: Optional[np.ndarray] = None
    C_f_w: Optional[np.ndarray] = None

    @property
    def n(self):
        return self.A_f.shape[0]

    @property
    def p(self):
        return self.A_h.shape[0]

    @property
    def l(self):
        return self.A_g.shape[0]


@dataclass(frozen=True)
class DisturbanceWidths:
    """Noise widths and abstraction offset widths feeding the disturbance"""

    dw: np.ndarray
    dv: np.ndarray
    de_f: np.ndarray
    de_g: np.ndarray
    de_h: np.ndarray


@dataclass(frozen=True)
class StabilityReport:
    l_star: float
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    a_bar: np.ndarray
    feasible_count: int
    verdict: str
    delta_bar: Optional[np.ndarray] = None
    bound_sequence: tuple = ()
    claimed_limit: Optional[np.ndarray] = None
    series_limit: Optional[np.ndarray] = None
    selection_certified: Optional[bool] = None
    inputs: Optional[StabilityInputs] = field(default=None, compare=False, repr=False)

    @property
    def certified(self):
        return self.verdict != NOT_CERTIFIED

    @property
    def delta_norms(self):
        return [float(np.linalg.norm(v)) for v in self.bound_sequence]


def _abs(M):
    return np.abs(np.asarray(M, dtype=float))


def contraction_g(inputs, d1, d2):
    """``(I - D1) + D1 |A_g^+| (I - D2) |A_g|``"""
    size = inputs.A_g.shape[1]
    D1 = np.diag(d1)
    D2 = np.diag(d2)
    pinv = _abs(pseudoinverse(inputs.A_g))
    return (np.eye(size) - D1) + D1 @ pinv @ (np.eye(inputs.l) - D2) @ _abs(inputs.A_g)


def contraction_fh(inputs, d3):
    """``[|A_f| + 2 (I - D3) C_f_z ; |A_h|]``"""
    D3 = np.diag(d3)
    top = _abs(inputs.A_f) + 2 * (np.eye(inputs.n) - D3) @ _abs(inputs.C_f_z)
    return np.vstack([top, _abs(inputs.A_h)])


def noise_fh(inputs, d3):
    """``[|W_f| + 2 (I - D3) C_f_w ; |W_h|]``, or ``None`` without noise slopes"""
    blocks = [M for M in (inputs.W_f, inputs.W_h, inputs.C_f_w) if M is not None]
    if not blocks:
        return None
    cols = np.atleast_2d(blocks[0]).shape[1]
    n, p = inputs.n, inputs.p

    def block(M, rows):
        return np.zeros((rows, cols)) if M is None else _abs(np.atleast_2d(M))

    top = block(inputs.W_f, n) + 2 * (np.eye(n) - np.diag(d3)) @ block(inputs.C_f_w, n)
    return np.vstack([top, block(inputs.W_h, p)])


def certificate_matrix(inputs, d1, d2, d3):
    """Returns ``(A, M)``: the square width contraction ``A`` acting on the
    augmented state, and the matrix ``M = A_g(D1, D2) [A_fh | W_fh]`` whose
    spectral norm is certified. ``M`` equals ``A`` without noise slopes."""
    g = contraction_g(inputs, d1, d2)
    a_bar = g @ contraction_fh(inputs, d3)
    noise = noise_fh(inputs, d3)
    if noise is None:
        return a_bar, a_bar
    return a_bar, np.hstack([a_bar, g @ noise])


def disturbance(inputs, widths, d1, d2, d3):
    """``Delta_g + A_g(D1, D2) Delta_fh`` for one choice of diagonals"""
    D1 = np.diag(d1)
    D2 = np.diag(d2)
    D3 = np.diag(d3)
    n, p, l = inputs.n, inputs.p, inputs.l
    W_f = np.zeros((n, widths.dw.size)) if inputs.W_f is None else _abs(inputs.W_f)
    W_g = np.zeros((l, widths.dv.size)) if inputs.W_g is None else _abs(inputs.W_g)
    W_h = np.zeros((p, widths.dw.size)) if inputs.W_h is None else _abs(inputs.W_h)
    C_f_w = np.zeros((n, widths.dw.size)) if inputs.C_f_w is None else _abs(inputs.C_f_w)
    pinv = _abs(pseudoinverse(inputs.A_g))
    delta_g = D1 @ pinv @ D2 @ (W_g @ widths.dv + widths.de_g)
    delta_fh = np.concatenate(
        [
            (W_f + 2 * (np.eye(n) - D3) @ C_f_w) @ widths.dw + widths.de_f,
            W_h @ widths.dw + widths.de_h,
        ]
    )
    return delta_g + contraction_g(inputs, d1, d2) @ delta_fh


def _spectral_norm(M):
    return float(linalg.svd(M, compute_uv=False)[0]) if M.size else 0.0


def _candidates(inputs):
    free = np.flatnonzero(inputs.r == 0)
    size = inputs.A_g.shape[1]
    for bits in itertools.product((0.0, 1.0), repeat=free.size + inputs.l + inputs.n):
        d1 = np.zeros(size)
        d1[free] = bits[: free.size]
        d2 = np.array(bits[free.size : free.size + inputs.l])
        d3 = np.array(bits[free.size + inputs.l :])
        yield d1, d2, d3


def _verdict(value):
    if value < 1 - MARGIN_TOLERANCE:
        return CERTIFIED
    if value <= 1 + MARGIN_TOLERANCE:
        return MARGINAL
    return NOT_CERTIFIED


def check_stability(A_f, A_g, A_h, C_f_z, r=None, *, W_f=None, W_g=None, W_h=None, C_f_w=None):
    """Searches every admissible diagonal triple for the smallest certificate norm.

    With the process-noise slopes ``W_f``, ``W_h`` (and ``C_f_w``) given, the
    certified matrix carries them as extra columns next to the state block,
    which can only raise the norm; the width recursion keeps the square
    state block.
    """
    A_f = np.atleast_2d(np.asarray(A_f, dtype=float))
    A_g = np.atleast_2d(np.asarray(A_g, dtype=float))
    A_h = np.atleast_2d(np.asarray(A_h, dtype=float))
    C_f_z = np.atleast_2d(np.asarray(C_f_z, dtype=float))
    size = A_g.shape[1]
    n, p = A_f.shape[0], A_h.shape[0]
    if n + p != size:
        raise DimensionError(f"{n} + {p} rows of A_f and A_h do not match {size} columns")
    for name, M in (("A_f", A_f), ("A_h", A_h), ("C_f_z", C_f_z)):
        if M.shape[1] != size:
            raise DimensionError(f"{name} has {M.shape[1]} columns, expected {size}")
    if C_f_z.shape[0] != n:
        raise DimensionError(f"C_f_z has {C_f_z.shape[0]} rows, expected {n}")
    if r is None:
        r = rowsupp(np.eye(size) - pseudoinverse(A_g) @ A_g)
    r = np.asarray(r, dtype=int).reshape(-1)
    if r.size != size:
        raise DimensionError(f"r has {r.size} entries, expected {size}")
    noise = {}
    slopes = (("W_f", W_f, n), ("W_h", W_h, p), ("C_f_w", C_f_w, n), ("W_g", W_g, A_g.shape[0]))
    for name, M, rows in slopes:
        if M is None:
            noise[name] = None
            continue
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape[0] != rows:
            raise DimensionError(f"{name} has {M.shape[0]} rows, expected {rows}")
        noise[name] = M
    process = {noise[k].shape[1] for k in ("W_f", "W_h", "C_f_w") if noise[k] is not None}
    if len(process) > 1:
        raise DimensionError("W_f, W_h and C_f_w disagree on the number of noise columns")
    inputs = StabilityInputs(A_f, A_g, A_h, C_f_z, r, **noise)

    best = None
    count = 0
    for d1, d2, d3 in _candidates(inputs):
        count += 1
        a_bar, certified = certificate_matrix(inputs, d1, d2, d3)
        value = _spectral_norm(certified)
        if best is None or value < best[0]:
            best = (value, d1, d2, d3, a_bar)
    value, d1, d2, d3, a_bar = best
    verdict = _verdict(value)
    logger.info("stability: L* = %.6g over %d candidates (%s)", value, count, verdict)
    return StabilityReport(value, d1, d2, d3, a_bar, count, verdict, inputs=inputs)


def steady_state_bounds(report):
    """Limits of the bound sequence: ``expm(A) Delta`` and, when the spectral
    radius of ``A`` is below one, the geometric-series value
    ``(I - A)^-1 Delta``"""
    if report.delta_bar is None:
        raise InvalidInputError("the report carries no disturbance term")
    a_bar = report.a_bar
    claimed = linalg.expm(a_bar) @ report.delta_bar
    radius = float(np.abs(linalg.eigvals(a_bar)).max(initial=0.0)) if a_bar.size else 0.0
    series = None
    if radius < 1:
        series = linalg.solve(np.eye(a_bar.shape[0]) - a_bar, report.delta_bar)
    return claimed, series


def select_bound_tuple(report, widths):
    """Picks the diagonal triple minimizing the claimed steady-state bound
    among those with a contraction norm below one.

    Without such a triple, the norm-minimizing triple is kept and the
    selection is flagged as not certified.
    """
    inputs = report.inputs
    if inputs is None:
        raise InvalidInputError("the report does not carry its stability inputs")
    best = None
    for d1, d2, d3 in _candidates(inputs):
        a_bar, certified = certificate_matrix(inputs, d1, d2, d3)
        if _spectral_norm(certified) >= 1:
            continue
        delta = disturbance(inputs, widths, d1, d2, d3)
        value = float(np.linalg.norm(linalg.expm(a_bar) @ delta))
        if best is None or value < best[0]:
            best = (value, d1, d2, d3, a_bar, delta)
    if best is None:
        delta = disturbance(inputs, widths, report.d1, report.d2, report.d3)
        chosen = replace(report, delta_bar=delta, selection_certified=False)
    else:
        _, d1, d2, d3, a_bar, delta = best
        chosen = replace(
            report, d1=d1, d2=d2, d3=d3, a_bar=a_bar, delta_bar=delta, selection_certified=True
        )
    claimed, series = steady_state_bounds(chosen)
    return replace(chosen, claimed_limit=claimed, series_limit=series)


def bound_sequence(a_bar, delta_bar, delta_z0, horizon):
    """Iterates ``v_k = a_bar v_{k-1} + delta_bar`` from ``v_0 = delta_z0``"""
    if horizon < 1:
        raise InvalidInputError("horizon must be at least 1")
    a_bar = np.atleast_2d(np.asarray(a_bar, dtype=float))
    v = np.asarray(delta_z0, dtype=float).reshape(-1)
    delta_bar = np.asarray(delta_bar, dtype=float).reshape(-1)
    if v.size != a_bar.shape[0] or delta_bar.size != a_bar.shape[0]:
        raise DimensionError("initial widths and disturbance must match the matrix size")
    out = []
    for _ in range(horizon):
        v = a_bar @ v + delta_bar
        out.append(v)
    return out


def width_bound_sequence(report, delta_z0, horizon, noise_widths, e_widths):
    """Element-wise width bounds for steps ``1..horizon``.

    :param noise_widths: ``(dw, dv)``, the process and measurement noise widths
    :param e_widths: ``(de_f, de_g, de_h)``, the offset widths of the global abstractions
    """
    if horizon < 1:
        raise InvalidInputError("horizon must be at least 1")
    dw, dv = noise_widths
    de_f, de_g, de_h = e_widths
    widths = DisturbanceWidths(
        *(np.asarray(v, dtype=float).reshape(-1) for v in (dw, dv, de_f, de_g, de_h))
    )
    chosen = select_bound_tuple(report, widths)
    return bound_sequence(chosen.a_bar, chosen.delta_bar, delta_z0, horizon)


def certify(inputs_or_report, widths, delta_z0, horizon):
    """Runs the search, the bound-tuple selection and the bound sequence"""
    report = inputs_or_report
    if isinstance(report, StabilityInputs):
        i = report
        report = check_stability(
            i.A_f, i.A_g, i.A_h, i.C_f_z, i.r, W_f=i.W_f, W_g=i.W_g, W_h=i.W_h, C_f_w=i.C_f_w
        )
    chosen = select_bound_tuple(report, widths)
    seq = bound_sequence(chosen.a_bar, chosen.delta_bar, delta_z0, horizon)
    return replace(chosen, bound_sequence=tuple(seq))


def inputs_from_abstractions(global_f, global_g, global_h, decomposition_f):
    """Stability inputs from the global abstractions of an observer"""
    size = global_f.blocks[0]
    r = rowsupp(np.eye(size) - pseudoinverse(global_g.A) @ global_g.A)
    C = decomposition_f.C
    noise_start = global_f.blocks[0] + global_f.blocks[1]
    return StabilityInputs(
        global_f.A,
        global_g.A,
        global_h.A,
        C[:, :size],
        r,
        global_f.W,
        global_g.W,
        global_h.W,
        C[:, noise_start:],
    )


def widths_from_abstractions(spec, global_f, global_g, global_h):
    return DisturbanceWidths(
        spec.noise.w_box.widths,
        spec.noise.v_box.widths,
        global_f.offset_widths,
        global_g.offset_widths,
        global_h.offset_widths,
    )


def write_report(report, conf):
    """Stores a report in an INI document (``plumbum.cli.ConfigINI``)"""
    conf["stability.l_star"] = f"{report.l_star:.17g}"
    conf["stability.verdict"] = report.verdict
    conf["stability.feasible_count"] = report.feasible_count
    if report.selection_certified is not None:
        conf["stability.selection_certified"] = "yes" if report.selection_certified else "no"
    conf["tuple.d1"] = format_vector(report.d1, "{:g}")
    conf["tuple.d2"] = format_vector(report.d2, "{:g}")
    conf["tuple.d3"] = format_vector(report.d3, "{:g}")
    conf["matrices.a_bar"] = format_matrix(report.a_bar)
    for key, value in (
        ("delta_bar", report.delta_bar),
        ("claimed_limit", report.claimed_limit),
        ("series_limit", report.series_limit),
    ):
        if value is not None:
            conf[f"matrices.{key}"] = format_vector(value)
    for k, v in enumerate(report.bound_sequence, 1):
        conf[f"bounds.delta_{k}"] = format_vector(v)


def read_report(conf):
    """Inverse of :func:`write_report`"""

    def optional(key):
        try:
            return parse_vector(conf[key])
        except KeyError:
            return None

    try:
        selection = conf["stability.selection_certified"] == "yes"
    except KeyError:
        selection = None
    bounds = []
    k = 1
    while True:
        try:
            bounds.append(parse_vector(conf[f"bounds.delta_{k}"]))
        except KeyError:
            break
        k += 1
    return StabilityReport(
        float(conf["stability.l_star"]),
        parse_vector(conf["tuple.d1"]),
        parse_vector(conf["tuple.d2"]),
        parse_vector(conf["tuple.d3"]),
        parse_matrix(conf["matrices.a_bar"]),
        int(conf["stability.feasible_count"]),
        conf["stability.verdict"],
        delta_bar=optional("matrices.delta_bar"),
        bound_sequence=tuple(bounds),
        claimed_limit=optional("matrices.claimed_limit"),
        series_limit=optional("matrices.series_limit"),
        selection_certified=selection,
    )
