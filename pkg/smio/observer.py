"""
The simultaneous state and input observer.

Each step runs three stages on the framer ``z = [x; d]`` of the augmented
state:

* **propagation** pushes the previous framer through the known dynamics
  ``f`` (decomposition function intersected with a local affine abstraction)
  and through the learned model of the unknown input map;
* **measurement update** repeatedly abstracts the observation map ``g`` on
  the current framer, inverts it through the pseudoinverse of its slope and
  contracts every coordinate against each measured row, shrinking the
  framer until it stops improving;
* **model learning** records the new datum in the :class:`LearnedInputModel`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from smio.abstraction import AffineAbstraction, abstract_global, abstract_local
from smio.errors import (
    AbstractionError,
    DimensionError,
    DomainError,
    InvalidInputError,
    SoundnessFault,
)
from smio.intervals import (
    IntervalVector,
    bound_linear_map,
    clamp,
    contract_linear,
    pseudoinverse,
    rowsupp,
    split,
)
from smio.learning import LearnedInputModel
from smio.monotone import JacobianBounds, build_decomposition, eval_decomposition

logger = logging.getLogger("smio.observer")


class ConstantInput:
    """A known input that never changes"""

    def __init__(self, value):
        self.value = np.array(value, dtype=float).reshape(-1)
        self.value.setflags(write=False)

    def __call__(self, k):  # noqa: ARG002
        return self.value

    def __repr__(self):
        return f"ConstantInput({self.value.tolist()})"


@dataclass(frozen=True)
class NoiseBounds:
    w_box: IntervalVector
    v_box: IntervalVector


@dataclass(frozen=True)
class Spaces:
    x: IntervalVector
    d: IntervalVector
    u: IntervalVector


@dataclass(frozen=True)
class SystemSpec:
    """A partially known system.

    ``f`` and ``h_oracle`` take ``zeta = [x, d, u, w]``; ``g`` takes
    ``nu = [x, d, u, v]``. ``h_oracle`` is the true unknown input map and
    is only used to simulate and to analyse, never to estimate.
    """

    n: int
    p: int
    m: int
    l: int
    f: Callable
    g: Callable
    f_jacobian_bounds: JacobianBounds
    noise: NoiseBounds
    spaces: Spaces
    lipschitz_h: np.ndarray
    lipschitz_g: np.ndarray
    lipschitz_f: Optional[np.ndarray] = None
    g_jacobian_bounds: Optional[JacobianBounds] = None
    h_oracle: Optional[Callable] = None
    x0_box: Optional[IntervalVector] = None
    d0_box: Optional[IntervalVector] = None
    known_input: Optional[Callable] = None
    name: str = "custom"

    def __post_init__(self):
        n, p, m, l = self.n, self.p, self.m, self.l
        checks = (
            ("spaces.x", self.spaces.x, n),
            ("spaces.d", self.spaces.d, p),
            ("spaces.u", self.spaces.u, m),
            ("noise.w_box", self.noise.w_box, n),
            ("noise.v_box", self.noise.v_box, l),
        )
        for name, box, dim in checks:
            if box.dim != dim:
                raise DimensionError(f"{name} has {box.dim} entries, expected {dim}")
            if not box.is_bounded:
                raise InvalidInputError(f"{name} must be bounded")
        bounds = self.f_jacobian_bounds
        if not isinstance(bounds, JacobianBounds):
            bounds = JacobianBounds(*bounds)
            object.__setattr__(self, "f_jacobian_bounds", bounds)
        if bounds.shape != (n, n + p + m + n):
            raise DimensionError(
                f"f Jacobian bounds have shape {bounds.shape}, expected {(n, n + p + m + n)}"
            )
        g_bounds = self.g_jacobian_bounds
        if g_bounds is not None:
            if not isinstance(g_bounds, JacobianBounds):
                g_bounds = JacobianBounds(*g_bounds)
                object.__setattr__(self, "g_jacobian_bounds", g_bounds)
            if g_bounds.shape != (l, n + p + m + l):
                raise DimensionError(
                    f"g Jacobian bounds have shape {g_bounds.shape}, expected {(l, n + p + m + l)}"
                )
        lipschitz_f = bounds.lipschitz() if self.lipschitz_f is None else self.lipschitz_f
        for name, value, dim in (
            ("lipschitz_f", lipschitz_f, n),
            ("lipschitz_g", self.lipschitz_g, l),
            ("lipschitz_h", self.lipschitz_h, p),
        ):
            arr = np.array(value, dtype=float).reshape(-1)
            if arr.size != dim:
                raise DimensionError(f"{name} has {arr.size} entries, expected {dim}")
            if (arr < 0).any():
                raise InvalidInputError(f"{name} must be non-negative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.x0_box is None:
            object.__setattr__(self, "x0_box", self.spaces.x)
        if self.d0_box is None:
            object.__setattr__(self, "d0_box", self.spaces.d)
        if self.known_input is None:
            object.__setattr__(self, "known_input", ConstantInput(self.spaces.u.midpoint))

    @property
    def z_space(self):
        return IntervalVector.stack(self.spaces.x, self.spaces.d)

    @property
    def zeta_space(self):
        return IntervalVector.stack(
            self.spaces.x, self.spaces.d, self.spaces.u, self.noise.w_box
        )

    @property
    def nu_space(self):
        return IntervalVector.stack(
            self.spaces.x, self.spaces.d, self.spaces.u, self.noise.v_box
        )

    @property
    def z0_box(self):
        return IntervalVector.stack(self.x0_box, self.d0_box)

    @property
    def zeta_blocks(self):
        return (self.n + self.p, self.m, self.n)

    @property
    def nu_blocks(self):
        return (self.n + self.p, self.m, self.l)

    def zeta_framer(self, z_box, u):
        return IntervalVector.stack(z_box, IntervalVector.point(u), self.noise.w_box)

    def nu_framer(self, z_box, u):
        return IntervalVector.stack(z_box, IntervalVector.point(u), self.noise.v_box)


@dataclass(frozen=True)
class ObserverConfig:
    grid_res_global: int = 2
    grid_res_local: int = 1
    grid_res_jacobian: int = 4
    tol_mu: float = 1e-6
    max_mu_iters: int = 10
    model_window: Optional[int] = None
    soundness_tol: float = 1e-9
    prune_dominated: bool = False
    local_abstractions: bool = True

    def __post_init__(self):
        if min(self.grid_res_global, self.grid_res_local, self.grid_res_jacobian) < 1:
            raise InvalidInputError("grid resolutions must be at least 1")
        if self.max_mu_iters < 1:
            raise InvalidInputError("max_mu_iters must be at least 1")
        if self.tol_mu < 0:
            raise InvalidInputError("tol_mu must be non-negative")


@dataclass(frozen=True)
class StackedGains:
    """Interval form of an affine abstraction: ``[upper; lower] =
    J_stack @ [hi; lo] + B_stack @ u + e_stack`` where ``J = [A W]`` acts on
    the augmented state and noise."""

    J_stack: np.ndarray
    B_stack: np.ndarray
    e_stack: np.ndarray

    @classmethod
    def from_abstraction(cls, abstraction):
        parts = split(np.hstack([abstraction.A, abstraction.W]))
        J_stack = np.block(
            [[parts.plus, -parts.plusplus], [-parts.plusplus, parts.plus]]
        )
        return cls(
            J_stack,
            np.vstack([abstraction.B, abstraction.B]),
            np.concatenate([abstraction.e_hi, abstraction.e_lo]),
        )

    def apply(self, z_box, u, noise_box):
        hi = np.concatenate([z_box.hi, noise_box.hi])
        lo = np.concatenate([z_box.lo, noise_box.lo])
        out = self.J_stack @ np.concatenate([hi, lo]) + self.B_stack @ u + self.e_stack
        rows = out.size // 2
        upper, lower = out[:rows], out[rows:]
        return IntervalVector(np.minimum(lower, upper), np.maximum(lower, upper))


@dataclass(frozen=True)
class StepRecord:
    k: int
    propagated: IntervalVector
    updated: IntervalVector
    mu_widths: tuple
    local_f: Optional[AffineAbstraction]
    local_h: Optional[AffineAbstraction]
    local_g: tuple
    fallbacks: tuple = ()
    bound: Optional[np.ndarray] = None

    @property
    def mu_iterations(self):
        return len(self.mu_widths) - 1

    @property
    def delta_z(self):
        return None if self.bound is None else float(np.linalg.norm(self.bound))


@dataclass
class ObserverState:
    spec: SystemSpec
    config: ObserverConfig
    k: int
    framer: IntervalVector
    model: LearnedInputModel
    global_abs_f: AffineAbstraction
    global_abs_g: AffineAbstraction
    global_abs_h: AffineAbstraction
    decomposition_f: object
    trace: list = field(default_factory=list)
    stability: object = None
    h_model_size: int = 0


def initialize(spec, z0_box=None, config=None):
    """Builds the global abstractions and the empty model"""
    config = config or ObserverConfig()
    z0_box = spec.z0_box if z0_box is None else z0_box
    if z0_box.dim != spec.n + spec.p:
        raise DimensionError(f"initial framer has {z0_box.dim} entries, expected {spec.n + spec.p}")
    if not spec.z_space.contains_box(z0_box, config.soundness_tol):
        raise DomainError("initial framer leaves the declared state and input spaces")

    zeta_space = spec.zeta_space
    logger.info("computing global abstractions for %s", spec.name)
    global_f = abstract_global(
        spec.f, spec.f, zeta_space, spec.lipschitz_f, config.grid_res_global,
        blocks=spec.zeta_blocks, jacobian=spec.f_jacobian_bounds,
    )
    global_g = abstract_global(
        spec.g, spec.g, spec.nu_space, spec.lipschitz_g, config.grid_res_global,
        blocks=spec.nu_blocks, jacobian=spec.g_jacobian_bounds,
    )
    model = LearnedInputModel(spec.lipschitz_h, spec.spaces.d, config.model_window)
    global_h = AffineAbstraction.trivial(spec.spaces.d, zeta_space, spec.zeta_blocks)
    decomposition = build_decomposition(spec.f, spec.f_jacobian_bounds, zeta_space)
    return ObserverState(
        spec, config, 0, z0_box, model, global_f, global_g, global_h, decomposition
    )


def _abstraction(state, name, pair, box, global_abs, lipschitz, fallbacks, jacobian=None):
    if not state.config.local_abstractions:
        return global_abs, None
    # Jacobian bounds let the curved axes be refined without the straight ones
    cfg = state.config
    grid_res = cfg.grid_res_local if jacobian is None else cfg.grid_res_jacobian
    try:
        local = abstract_local(
            pair[0], pair[1], box, global_abs, lipschitz, grid_res, jacobian=jacobian,
        )
    except AbstractionError as ex:
        logger.debug("step %d: local %s abstraction fell back to global: %s", state.k + 1, name, ex)
        fallbacks.append(name)
        return global_abs, None
    return local, local


def refresh_global_h(state):
    """Re-abstracts the learned model over the whole argument space once it
    has gained data; the previous band stays when the program fails"""
    if len(state.model) == state.h_model_size:
        return state.global_abs_h
    spec = state.spec
    lower, upper = state.model.model_as_pair()
    try:
        state.global_abs_h = abstract_global(
            lower, upper, spec.zeta_space, spec.lipschitz_h, state.config.grid_res_global,
            blocks=spec.zeta_blocks,
        )
    except AbstractionError as ex:
        logger.warning("step %d: global abstraction of the learned model failed: %s", state.k + 1, ex)
    state.h_model_size = len(state.model)
    return state.global_abs_h


def _clip(lo, hi, space, tol, k):
    try:
        return clamp(np.maximum(lo, space.lo), np.minimum(hi, space.hi), tol)
    except SoundnessFault as ex:
        ex.k = k
        raise


def _propagate(state, u_prev):
    spec = state.spec
    u_prev = np.asarray(u_prev, dtype=float).reshape(-1)
    zeta = spec.zeta_framer(state.framer, u_prev)
    fallbacks = []

    decomp_hi = eval_decomposition(state.decomposition_f, zeta.hi, zeta.lo)
    decomp_lo = eval_decomposition(state.decomposition_f, zeta.lo, zeta.hi)

    abs_f, local_f = _abstraction(
        state, "f", (spec.f, spec.f), zeta, state.global_abs_f, spec.lipschitz_f, fallbacks,
        spec.f_jacobian_bounds,
    )
    x_abs = StackedGains.from_abstraction(abs_f).apply(state.framer, u_prev, spec.noise.w_box)

    abs_h, local_h = _abstraction(
        state, "h", state.model.model_as_pair(), zeta, refresh_global_h(state),
        spec.lipschitz_h, fallbacks,
    )
    d_abs = StackedGains.from_abstraction(abs_h).apply(state.framer, u_prev, spec.noise.w_box)

    lo = np.concatenate([np.maximum(decomp_lo, x_abs.lo), d_abs.lo])
    hi = np.concatenate([np.minimum(decomp_hi, x_abs.hi), d_abs.hi])
    z_p = _clip(lo, hi, spec.z_space, state.config.soundness_tol, state.k + 1)
    logger.debug("step %d: propagated width %.6g", state.k + 1, z_p.width)
    return z_p, local_f, local_h, fallbacks


def propagate(state, u_prev):
    """Propagates the current framer one step through the dynamics"""
    return _propagate(state, u_prev)[0]


def _measurement_update(state, y, u, z_p):
    spec = state.spec
    cfg = state.config
    y = np.asarray(y, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if y.size != spec.l:
        raise DimensionError(f"measurement has {y.size} entries, expected {spec.l}")
    v_box = spec.noise.v_box
    current = z_p
    widths = [current.width]
    locals_used = []
    fallbacks = []
    iterations = cfg.max_mu_iters if cfg.local_abstractions else 1
    for _ in range(iterations):
        nu = spec.nu_framer(current, u)
        abs_g, local_g = _abstraction(
            state, "g", (spec.g, spec.g), nu, state.global_abs_g, spec.lipschitz_g, fallbacks,
            spec.g_jacobian_bounds,
        )
        if local_g is not None:
            locals_used.append(local_g)
        A = abs_g.A
        W = split(abs_g.W)
        base = y - abs_g.B @ u
        t_hi = base + W.plusplus @ v_box.hi - W.plus @ v_box.lo - abs_g.e_lo
        t_lo = base - W.plus @ v_box.hi + W.plusplus @ v_box.lo - abs_g.e_hi
        reach = bound_linear_map(A, current)
        alpha = _clip(
            t_lo, t_hi, IntervalVector(reach.lo, reach.hi), cfg.soundness_tol, state.k + 1
        )
        A_pinv = pseudoinverse(A)
        unobserved = rowsupp(np.eye(A.shape[1]) - A_pinv @ A).astype(bool)
        est = bound_linear_map(A_pinv, alpha)
        hi = np.where(unobserved, current.hi, np.minimum(est.hi, current.hi))
        lo = np.where(unobserved, current.lo, np.maximum(est.lo, current.lo))
        current = _clip(lo, hi, current, cfg.soundness_tol, state.k + 1)
        # every row of A z in alpha also bounds the coordinates it touches,
        # including those the pseudoinverse leaves unobserved
        lo, hi = contract_linear(A, alpha, current)
        current = _clip(lo, hi, current, cfg.soundness_tol, state.k + 1)
        widths.append(current.width)
        if widths[-2] - widths[-1] < cfg.tol_mu:
            break
    logger.debug(
        "step %d: measurement update took %d iterations, width %.6g",
        state.k + 1,
        len(widths) - 1,
        widths[-1],
    )
    return current, widths, locals_used, fallbacks


def measurement_update(state, y, u, z_p):
    """Shrinks a propagated framer with the measurement ``y``"""
    return _measurement_update(state, y, u, z_p)[0]


def model_update(state, prev_input_framer, new_d_framer):
    """Records the datum pairing the previous argument framer with the new
    input framer"""
    state.model.add_datum(prev_input_framer, new_d_framer)
    if state.config.prune_dominated:
        state.model.prune()


def step(state, u_prev, u_now, y_now):
    """Advances the observer by one time step.

    Returns the new framer and the :class:`StepRecord` appended to the trace.
    """
    spec = state.spec
    zeta_prev = spec.zeta_framer(state.framer, np.asarray(u_prev, dtype=float).reshape(-1))
    z_p, local_f, local_h, fallbacks = _propagate(state, u_prev)
    z, widths, local_gs, mu_fallbacks = _measurement_update(state, y_now, u_now, z_p)
    model_update(state, zeta_prev, z[spec.n :])
    state.k += 1
    state.framer = z

    bound = None
    report = state.stability
    if report is not None and report.bound_sequence and state.k <= len(report.bound_sequence):
        bound = report.bound_sequence[state.k - 1]
    record = StepRecord(
        state.k,
        z_p,
        z,
        tuple(widths),
        local_f,
        local_h,
        tuple(local_gs),
        tuple(fallbacks + mu_fallbacks),
        bound,
    )
    state.trace.append(record)
    return z, record
