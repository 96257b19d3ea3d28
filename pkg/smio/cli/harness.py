"""
End-to-end experiment driver.

Simulates the true system under uniform noise, runs the observer on its
measurements and writes one trace per seed, the learned model and the
stability report. Only the simulation ever calls the true unknown input
map; the observer sees the measurements alone.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace

import numpy as np
from plumbum import local
from plumbum.cli import ConfigINI

from smio.abstraction import abstract_global, abstract_local, evaluate_field
from smio.errors import AbstractionError, ConfigError, SoundnessFault
from smio.intervals import IntervalVector
from smio.learning import LearnedInputModel
from smio.observer import initialize, refresh_global_h, step
from smio.stability import (
    certify,
    inputs_from_abstractions,
    widths_from_abstractions,
    write_report,
)

logger = logging.getLogger("smio.cli")

NOISE_LAW = "uniform"
CONTAINMENT_TOLERANCE = 1e-9
TARGETS = ("f", "g", "h")


def _fmt(value):
    return f"{float(value):.17g}"


@dataclass(frozen=True)
class Trajectory:
    """True signals for steps ``0..horizon``; each array has one row per step"""

    x: np.ndarray
    d: np.ndarray
    u: np.ndarray
    w: np.ndarray
    v: np.ndarray
    y: np.ndarray

    @property
    def z(self):
        return np.hstack([self.x, self.d])


@dataclass(frozen=True)
class SeedResult:
    seed: int
    violations: int
    steps: int
    trace_path: object
    model_path: object
    final_framer: IntervalVector
    fault: str = ""

    @property
    def ok(self):
        return self.violations == 0 and not self.fault


def _uniform(rng, box):
    return rng.uniform(box.lo, box.hi) if box.dim else np.zeros(0)


def simulate(spec, horizon, rng):
    """Draws a noise realization and rolls the true system forward.

    :raises ConfigError: when the system has no true unknown input map, or
        when the trajectory leaves the declared state and input spaces
    """
    if spec.h_oracle is None:
        raise ConfigError(f"system {spec.name!r} has no true unknown input map to simulate")
    z_space = spec.z_space
    x = _uniform(rng, spec.x0_box)
    d = _uniform(rng, spec.d0_box)
    xs, ds, us, ws, vs, ys = [], [], [], [], [], []
    for k in range(horizon + 1):
        if not z_space.contains(np.concatenate([x, d]), CONTAINMENT_TOLERANCE):
            raise ConfigError(
                f"the true trajectory leaves the state and input spaces at step {k}"
            )
        u = np.asarray(spec.known_input(k), dtype=float).reshape(-1)
        w = _uniform(rng, spec.noise.w_box)
        v = _uniform(rng, spec.noise.v_box)
        y = spec.g(np.concatenate([x, d, u, v]))
        xs.append(x)
        ds.append(d)
        us.append(u)
        ws.append(w)
        vs.append(v)
        ys.append(np.asarray(y, dtype=float).reshape(-1))
        zeta = np.concatenate([x, d, u, w])
        x = np.asarray(spec.f(zeta), dtype=float).reshape(-1)
        d = np.asarray(spec.h_oracle(zeta), dtype=float).reshape(-1)
    return Trajectory(*(np.array(a).reshape(horizon + 1, -1) for a in (xs, ds, us, ws, vs, ys)))


def prepare(config):
    """Builds the observer template shared by every seed"""
    return initialize(config.system, config=config.observer)


def _fresh(template):
    spec, cfg = template.spec, template.config
    return replace(
        template,
        k=0,
        framer=spec.z0_box,
        model=LearnedInputModel(spec.lipschitz_h, spec.spaces.d, cfg.model_window),
        trace=[],
        h_model_size=0,
    )


def global_h_abstraction(config, template, mode=None):
    """The global unknown input abstraction the stability analysis uses.

    In ``oracle`` mode the true map is abstracted; in ``learned`` mode the
    observer's own abstraction is used, which spans the whole input space.
    """
    spec = config.system
    mode = mode or config.stability_mode
    if mode == "learned":
        return template.global_abs_h
    if spec.h_oracle is None:
        raise ConfigError(f"system {spec.name!r} has no true unknown input map for oracle mode")
    return abstract_global(
        spec.h_oracle,
        spec.h_oracle,
        spec.zeta_space,
        spec.lipschitz_h,
        config.observer.grid_res_global,
        blocks=spec.zeta_blocks,
    )


def stability_report(config, template, mode=None):
    spec = config.system
    global_h = global_h_abstraction(config, template, mode)
    inputs = inputs_from_abstractions(
        template.global_abs_f, template.global_abs_g, global_h, template.decomposition_f
    )
    widths = widths_from_abstractions(
        spec, template.global_abs_f, template.global_abs_g, global_h
    )
    return certify(inputs, widths, spec.z0_box.widths, config.horizon)


def save_report(report, path):
    conf = ConfigINI(path)
    write_report(report, conf)
    conf.write()
    return path


def _columns(spec):
    n, p = spec.n, spec.p
    names = ["k"]
    names += [f"x{i + 1}" for i in range(n)] + [f"d{i + 1}" for i in range(p)]
    for prefix, count in (("x", n), ("d", p)):
        for i in range(count):
            names += [f"{prefix}{i + 1}_lo", f"{prefix}{i + 1}_hi"]
    # the propagated framer, before the measurement update
    for prefix, count in (("x", n), ("d", p)):
        for i in range(count):
            names += [f"{prefix}{i + 1}_plo", f"{prefix}{i + 1}_phi"]
    names += [
        "width_x",
        "width_d",
        "err_x",
        "err_d",
        "delta_x",
        "delta_d",
        "contained",
        "mu_iterations",
    ]
    return names


def _error(true, box):
    """Estimation error: the larger distance from the truth to either bound"""
    return max(np.linalg.norm(true - box.lo), np.linalg.norm(box.hi - true))


def _row(spec, k, true_z, framer, propagated, bound, mu_iterations):
    n = spec.n
    x_box, d_box = framer[:n], framer[n:]
    contained = framer.contains(true_z, CONTAINMENT_TOLERANCE)
    values = [str(k)]
    values += [_fmt(v) for v in true_z]
    for lo, hi in zip(framer.lo, framer.hi):
        values += [_fmt(lo), _fmt(hi)]
    for lo, hi in zip(propagated.lo, propagated.hi):
        values += [_fmt(lo), _fmt(hi)]
    values += [
        _fmt(x_box.width),
        _fmt(d_box.width),
        _fmt(_error(true_z[:n], x_box)),
        _fmt(_error(true_z[n:], d_box)),
        _fmt(np.linalg.norm(bound[:n])) if bound is not None else "nan",
        _fmt(np.linalg.norm(bound[n:])) if bound is not None else "nan",
        "1" if contained else "0",
        str(mu_iterations),
    ]
    return values, contained


def run_seed(config, template, seed, out_dir, report=None):
    """Runs one seed and writes ``trace_seed{seed}.csv`` and ``model_seed{seed}.txt``"""
    spec = config.system
    rng = np.random.default_rng(seed)
    traj = simulate(spec, config.horizon, rng)
    state = _fresh(template)
    state.stability = report
    trace_path = out_dir / f"trace_seed{seed}.csv"
    model_path = out_dir / f"model_seed{seed}.txt"
    violations = 0
    fault = ""
    true_z = traj.z
    with open(trace_path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# smio trace; noise={NOISE_LAW}; seed={seed}; system={spec.name}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(_columns(spec))
        row, contained = _row(
            spec, 0, true_z[0], state.framer, state.framer, spec.z0_box.widths, 0
        )
        writer.writerow(row)
        violations += not contained
        for k in range(1, config.horizon + 1):
            try:
                framer, record = step(state, traj.u[k - 1], traj.u[k], traj.y[k])
            except SoundnessFault as ex:
                fault = f"soundness fault at step {k}: {ex}"
                logger.warning("seed %d: %s", seed, fault)
                writer.writerow([str(k), "soundness_fault", str(ex)])
                violations += 1
                break
            row, contained = _row(
                spec, k, true_z[k], framer, record.propagated, record.bound,
                record.mu_iterations,
            )
            writer.writerow(row)
            if not contained:
                violations += 1
                logger.warning("seed %d: true state escaped the framer at step %d", seed, k)
    model_path.write(state.model.dump(), encoding="utf-8")
    logger.info(
        "seed %d: %d steps, final width %.6g, %d violations",
        seed,
        state.k,
        state.framer.width,
        violations,
    )
    return SeedResult(seed, violations, state.k, trace_path, model_path, state.framer, fault)


def run_experiment(config):
    """Runs every seed; returns the per-seed results.

    The stability report (in the configured mode) is written once as
    ``stability.ini`` and its width bounds are attached to every trace.
    """
    out_dir = local.path(config.out)
    out_dir.mkdir()
    template = prepare(config)
    report = stability_report(config, template)
    save_report(report, out_dir / "stability.ini")
    results = []
    for seed in config.seeds:
        logger.info("running seed %d (%d steps)", seed, config.horizon)
        results.append(run_seed(config, template, seed, out_dir, report))
    return results


def run_stability(config, mode=None):
    """Computes and writes the stability report; returns it"""
    out_dir = local.path(config.out)
    out_dir.mkdir()
    template = prepare(config)
    report = stability_report(config, template, mode)
    save_report(report, out_dir / "stability.ini")
    return report


def learn_model(config, seed, steps):
    """Runs the observer for ``steps`` steps and returns its final state"""
    spec = config.system
    template = prepare(config)
    state = _fresh(template)
    if steps < 1:
        return state
    traj = simulate(spec, steps, np.random.default_rng(seed))
    for k in range(1, steps + 1):
        step(state, traj.u[k - 1], traj.u[k], traj.y[k])
    return state


@dataclass(frozen=True)
class AbstractionSlice:
    """Samples of a function pair and its bands along one coordinate"""

    target: str
    axis: int
    s: np.ndarray
    q_lo: np.ndarray
    q_hi: np.ndarray
    local_lo: np.ndarray
    local_hi: np.ndarray
    global_lo: np.ndarray
    global_hi: np.ndarray
    oracle: object = None
    local: object = None
    global_abs: object = None

    def rows(self):
        outputs = self.q_lo.shape[1]
        header = ["s"]
        for j in range(1, outputs + 1):
            header += [
                f"q{j}_lo", f"q{j}_hi", f"local{j}_lo", f"local{j}_hi",
                f"global{j}_lo", f"global{j}_hi",
            ]
            if self.oracle is not None:
                header.append(f"oracle{j}")
        yield header
        for i, s in enumerate(self.s):
            row = [_fmt(s)]
            for j in range(outputs):
                row += [
                    _fmt(self.q_lo[i, j]),
                    _fmt(self.q_hi[i, j]),
                    _fmt(self.local_lo[i, j]),
                    _fmt(self.local_hi[i, j]),
                    _fmt(self.global_lo[i, j]),
                    _fmt(self.global_hi[i, j]),
                ]
                if self.oracle is not None:
                    row.append(_fmt(self.oracle[i, j]))
            yield row


def abstraction_slice(
    config, target, box=None, *, axis=0, samples=101, zero_slope=False, steps=0, seed=0
):
    """Abstracts ``target`` (``f``, ``g`` or ``h``) locally on ``box`` and
    samples both bands along coordinate ``axis`` of the argument.

    ``box`` is a framer of the augmented state and defaults to the initial
    one, or to the final framer when ``steps`` observer steps are run
    first to learn the unknown input model.
    """
    if target not in TARGETS:
        raise ConfigError(f"target must be one of {', '.join(TARGETS)}, got {target!r}")
    spec = config.system
    cfg = config.observer
    state = learn_model(config, seed, steps)
    z_box = box if box is not None else state.framer
    u = np.asarray(spec.known_input(state.k), dtype=float).reshape(-1)
    oracle = jacobian = None
    if target == "g":
        arg = spec.nu_framer(z_box, u)
        pair = (spec.g, spec.g)
        lipschitz = spec.lipschitz_g
        global_abs = state.global_abs_g
        jacobian = spec.g_jacobian_bounds
    else:
        arg = spec.zeta_framer(z_box, u)
        if target == "f":
            pair = (spec.f, spec.f)
            lipschitz = spec.lipschitz_f
            global_abs = state.global_abs_f
            jacobian = spec.f_jacobian_bounds
        else:
            pair = state.model.model_as_pair()
            lipschitz = spec.lipschitz_h
            global_abs = refresh_global_h(state)
            oracle = spec.h_oracle
    if not 0 <= axis < arg.dim:
        raise ConfigError(f"axis must be in [0, {arg.dim}), got {axis}")
    if zero_slope:
        space = global_abs.domain
        global_abs = abstract_global(
            pair[0], pair[1], space, lipschitz, config.observer.grid_res_global,
            blocks=global_abs.blocks, zero_slope=True,
        )
        jacobian = None
    grid_res = cfg.grid_res_local if jacobian is None else cfg.grid_res_jacobian
    try:
        local = abstract_local(
            pair[0], pair[1], arg, global_abs, lipschitz, grid_res,
            zero_slope=zero_slope, jacobian=jacobian,
        )
    except AbstractionError as ex:
        logger.warning("local %s abstraction failed, showing the global one: %s", target, ex)
        local = global_abs

    s = np.linspace(arg.lo[axis], arg.hi[axis], samples)
    points = np.tile(arg.midpoint, (samples, 1))
    points[:, axis] = s
    q_lo = evaluate_field(pair[0], points)
    q_hi = evaluate_field(pair[1], points)
    return AbstractionSlice(
        target,
        axis,
        s,
        q_lo,
        q_hi,
        local.lower(points),
        local.upper(points),
        global_abs.lower(points),
        global_abs.upper(points),
        None if oracle is None else evaluate_field(oracle, points),
        local,
        global_abs,
    )


def run_abstract(config, target, box=None, **kwargs):
    """Writes ``abstract_{target}.csv`` into the output directory"""
    data = abstraction_slice(config, target, box, **kwargs)
    out_dir = local.path(config.out)
    out_dir.mkdir()
    path = out_dir / f"abstract_{target}.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerows(data.rows())
    return path, data
