"""
Experiment configuration files.

An experiment is an INI document with up to three sections::

    [experiment]
    system = deangelis_modified
    horizon = 500
    seeds = 0, 1, 2
    out = results
    stability_mode = oracle

    [observer]
    grid_res_global = 2
    grid_res_local = 1
    grid_res_jacobian = 4
    tol_mu = 1e-6
    max_mu_iters = 10
    model_window = none
    prune_dominated = no
    local_abstractions = yes

    [system]
    n = 1
    p = 1
    m = 1
    l = 1
    f1 = "0.5*x1 + 0.2*d1 + w1"
    g1 = "x1 + v1"
    h1 = "0.5*d1"
    x_lo = -5
    x_hi = 5
    ...

``system`` names a built-in system, or is ``inline`` to read the
``[system]`` section; ``stability_mode`` is ``oracle`` or ``learned``.
Vectors are comma separated and matrix rows are separated by ``;``. Values
are resolved in the order command-line switch, environment
(:class:`~smio.cli.env.SMIOEnv`), configuration file, built-in default.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from plumbum import local
from plumbum.cli import ConfigINI

from smio.cli.env import SMIOEnv
from smio.errors import ConfigError, SMIOError
from smio.formats import parse_matrix, parse_vector
from smio.intervals import IntervalVector
from smio.monotone import JacobianBounds
from smio.observer import ObserverConfig, SystemSpec
from smio.systems import build_spec, builtin

logger = logging.getLogger("smio.cli")

STABILITY_MODES = ("oracle", "learned")
INLINE = "inline"

DEFAULTS = {
    "system": "deangelis_modified",
    "horizon": 500,
    "seeds": (0,),
    "out": "smio-out",
    "stability_mode": "oracle",
}

_OBSERVER_KEYS = {
    "grid_res_global": int,
    "grid_res_local": int,
    "grid_res_jacobian": int,
    "tol_mu": float,
    "max_mu_iters": int,
    "model_window": int,
    "prune_dominated": bool,
    "local_abstractions": bool,
}

_BOOLEANS = {"yes": True, "true": True, "1": True, "no": False, "false": False, "0": False}


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemSpec
    horizon: int = DEFAULTS["horizon"]
    seeds: tuple = DEFAULTS["seeds"]
    out: object = field(default_factory=lambda: local.path(DEFAULTS["out"]))
    stability_mode: str = DEFAULTS["stability_mode"]
    observer: ObserverConfig = field(default_factory=ObserverConfig)
    source: Optional[object] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError(f"horizon must be at least 1, got {self.horizon}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.stability_mode not in STABILITY_MODES:
            raise ConfigError(
                f"stability mode must be one of {', '.join(STABILITY_MODES)}, "
                f"got {self.stability_mode!r}"
            )
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "out", local.path(self.out))


def _get(conf, key):
    if conf is None:
        return None
    try:
        value = conf[key]
    except KeyError:
        return None
    value = value.strip()
    if value.lower() in ("", "none"):
        return None
    return value


def _unquote(text):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def _convert(key, value, kind):
    try:
        if kind is bool:
            return _BOOLEANS[value.lower()]
        if kind is tuple:
            return tuple(int(v) for v in value.split(","))
        return kind(value)
    except (KeyError, ValueError):
        raise ConfigError(f"invalid value {value!r} for {key}") from None


def _pick(key, switches, env, conf_value, kind, default):
    """Resolves one setting: switch, then environment, then file, then default"""
    if switches.get(key) is not None:
        return switches[key]
    if env.get(key) is not None:
        return env[key]
    if conf_value is not None:
        return _convert(key, conf_value, kind)
    return default


def _box(conf, name, default=None):
    lo = _get(conf, f"system.{name}_lo")
    hi = _get(conf, f"system.{name}_hi")
    if lo is None and hi is None:
        if default is not None:
            return default
        raise ConfigError(f"[system] needs {name}_lo and {name}_hi")
    if lo is None or hi is None:
        raise ConfigError(f"[system] sets only one of {name}_lo and {name}_hi")
    try:
        box = IntervalVector(parse_vector(lo), parse_vector(hi))
    except SMIOError as ex:
        raise ConfigError(f"invalid {name} box: {ex}") from None
    if not box.is_bounded:
        raise ConfigError(f"the {name} box must be bounded")
    return box


def _vector(conf, key, required=True):
    value = _get(conf, f"system.{key}")
    if value is None:
        if required:
            raise ConfigError(f"[system] needs {key}")
        return None
    try:
        return parse_vector(value)
    except SMIOError as ex:
        raise ConfigError(f"invalid {key}: {ex}") from None


def _expressions(conf, prefix, count, required=True):
    out = []
    for i in range(1, count + 1):
        value = _get(conf, f"system.{prefix}{i}")
        if value is None:
            if not required:
                return []
            raise ConfigError(f"[system] needs {prefix}{i}")
        out.append(_unquote(value))
    return out


def inline_system(conf):
    """Builds a :class:`SystemSpec` from the ``[system]`` section"""
    dims = {}
    for key in ("n", "p", "m", "l"):
        value = _get(conf, f"system.{key}")
        if value is None:
            raise ConfigError(f"[system] needs {key}")
        dims[key] = _convert(key, value, int)
        if dims[key] < 1:
            raise ConfigError(f"{key} must be positive")
    n, p, m, l = dims["n"], dims["p"], dims["m"], dims["l"]
    x_box = _box(conf, "x")
    d_box = _box(conf, "d")
    u_box = _box(conf, "u", IntervalVector.point([0.0] * m))
    jac_lo = _get(conf, "system.jac_lo")
    jac_hi = _get(conf, "system.jac_hi")
    if jac_lo is None or jac_hi is None:
        raise ConfigError("[system] needs jac_lo and jac_hi")
    g_jac_lo = _get(conf, "system.g_jac_lo")
    g_jac_hi = _get(conf, "system.g_jac_hi")
    if (g_jac_lo is None) != (g_jac_hi is None):
        raise ConfigError("[system] sets only one of g_jac_lo and g_jac_hi")
    lipschitz_f = _vector(conf, "lipschitz_f", required=False)
    try:
        jacobian = JacobianBounds(parse_matrix(jac_lo), parse_matrix(jac_hi))
        g_jacobian = None
        if g_jac_lo is not None:
            g_jacobian = JacobianBounds(parse_matrix(g_jac_lo), parse_matrix(g_jac_hi))
        return build_spec(
            name=_get(conf, "system.name") or INLINE,
            n=n,
            p=p,
            m=m,
            l=l,
            f=_expressions(conf, "f", n),
            g=_expressions(conf, "g", l),
            h=_expressions(conf, "h", p, required=False),
            x_box=x_box,
            d_box=d_box,
            u_box=u_box,
            w_box=_box(conf, "w"),
            v_box=_box(conf, "v"),
            jacobian=jacobian,
            lipschitz_f=lipschitz_f,
            lipschitz_g=_vector(conf, "lipschitz_g"),
            lipschitz_h=_vector(conf, "lipschitz_h"),
            g_jacobian=g_jacobian,
            x0_box=_box(conf, "x0", x_box),
            d0_box=_box(conf, "d0", d_box),
            u=_vector(conf, "u", required=False),
        )
    except ConfigError:
        raise
    except SMIOError as ex:
        raise ConfigError(f"invalid [system] section: {ex}") from ex


def load_config(path=None, env=None, **switches):
    """Resolves an :class:`ExperimentConfig`.

    :param path: an INI file, or ``None`` for defaults only
    :param env: a :class:`SMIOEnv` (defaults to the process environment)
    :param switches: command-line values; ``None`` means "not given"
    """
    conf = None
    if path is not None:
        path = local.path(path)
        if not path.is_file():
            raise ConfigError(f"configuration file {path} does not exist")
        conf = ConfigINI(path)
        conf.read()
    try:
        env_values = (env if env is not None else SMIOEnv()).overrides()
    except ValueError as ex:
        raise ConfigError(f"invalid environment override: {ex}") from None

    system_name = _get(conf, "experiment.system") or DEFAULTS["system"]
    if system_name == INLINE:
        spec = inline_system(conf)
    else:
        spec = builtin(system_name)

    observer = {}
    for key, kind in _OBSERVER_KEYS.items():
        value = _pick(key, switches, env_values, _get(conf, f"observer.{key}"), kind, None)
        if value is not None:
            observer[key] = value
    try:
        observer_config = ObserverConfig(**observer)
    except SMIOError as ex:
        raise ConfigError(f"invalid [observer] section: {ex}") from ex

    config = ExperimentConfig(
        system=spec,
        horizon=_pick(
            "horizon", switches, env_values, _get(conf, "experiment.horizon"), int,
            DEFAULTS["horizon"],
        ),
        seeds=_pick(
            "seeds", switches, env_values, _get(conf, "experiment.seeds"), tuple,
            DEFAULTS["seeds"],
        ),
        out=_pick("out", switches, env_values, _get(conf, "experiment.out"), str, DEFAULTS["out"]),
        stability_mode=_pick(
            "stability_mode", switches, env_values, _get(conf, "experiment.stability_mode"), str,
            DEFAULTS["stability_mode"],
        ),
        observer=observer_config,
        source=path,
    )
    logger.debug("resolved configuration: %s", config)
    return config
