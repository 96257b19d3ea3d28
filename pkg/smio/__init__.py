r"""
smio: interval observers for systems with unknown inputs
=========================================================

Estimates guaranteed bounds ("framers") on the state and on an unknown input
signal of a discrete-time nonlinear system, while learning an
over-approximation of the unknown input dynamics from the bounds it
produces::

    from smio import builtin, initialize, step

    spec = builtin("deangelis_modified")
    state = initialize(spec)
    framer, record = step(state, u_prev, u_now, y_now)
"""

from __future__ import annotations

try:
    from smio.version import version
except ImportError:  # not built by the packaging backend
    version = "0.0.0.dev0"

__version__ = version

from smio.errors import SMIOError  # noqa: E402
from smio.intervals import IntervalVector  # noqa: E402
from smio.observer import (  # noqa: E402
    ObserverConfig,
    SystemSpec,
    initialize,
    measurement_update,
    model_update,
    propagate,
    step,
)
from smio.stability import certify, check_stability  # noqa: E402
from smio.systems import builtin  # noqa: E402

__all__ = (
    "IntervalVector",
    "ObserverConfig",
    "SMIOError",
    "SystemSpec",
    "__version__",
    "builtin",
    "certify",
    "check_stability",
    "initialize",
    "measurement_update",
    "model_update",
    "propagate",
    "step",
)
