"""
Registry of built-in systems.

Each entry is a zero-argument factory returning a fresh
:class:`~smio.observer.SystemSpec`; ``builtin(name)`` looks one up.
"""

from __future__ import annotations

import numpy as np

from smio.errors import UnknownSystemError
from smio.intervals import IntervalVector
from smio.monotone import JacobianBounds
from smio.observer import ConstantInput, NoiseBounds, Spaces, SystemSpec
from smio.systems.expr import ExpressionField, variable_names

# slack on the exact (constant) Jacobian entries of the second state equation
JACOBIAN_EPSILON = 1e-6

_REGISTRY = {}


def register(name):
    def deco(factory):
        _REGISTRY[name] = factory
        return factory

    return deco


def available():
    return sorted(_REGISTRY)


def builtin(name):
    """Returns a fresh :class:`SystemSpec` for the named built-in system"""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise UnknownSystemError(name, available()) from None
    return factory()


def argument_names(n, p, m, noise_prefix, noise_count):
    """Coordinate names of ``[x, d, u, w]`` (or ``[x, d, u, v]``)"""
    return (
        variable_names("x", n)
        + variable_names("d", p)
        + variable_names("u", m)
        + variable_names(noise_prefix, noise_count)
    )


def build_spec(
    *,
    name,
    n,
    p,
    m,
    l,
    f,
    g,
    h,
    x_box,
    d_box,
    u_box,
    w_box,
    v_box,
    jacobian,
    lipschitz_f,
    lipschitz_g,
    lipschitz_h,
    g_jacobian=None,
    x0_box=None,
    d0_box=None,
    u=None,
):
    """Assembles a :class:`SystemSpec` from expression texts.

    ``f`` and ``h`` are written over ``x1.. d1.. u1.. w1..``; ``g`` over
    ``x1.. d1.. u1.. v1..``. ``h`` may be empty when the unknown input map
    is not available. ``g_jacobian`` optionally bounds the partials of ``g``
    over the same columns.
    """
    zeta_names = argument_names(n, p, m, "w", n)
    nu_names = argument_names(n, p, m, "v", l)
    spaces = Spaces(x_box, d_box, u_box)
    return SystemSpec(
        n=n,
        p=p,
        m=m,
        l=l,
        f=ExpressionField(f, zeta_names),
        g=ExpressionField(g, nu_names),
        f_jacobian_bounds=jacobian,
        noise=NoiseBounds(w_box, v_box),
        spaces=spaces,
        lipschitz_h=lipschitz_h,
        lipschitz_g=lipschitz_g,
        lipschitz_f=lipschitz_f,
        g_jacobian_bounds=g_jacobian,
        h_oracle=ExpressionField(h, zeta_names) if h else None,
        x0_box=x0_box,
        d0_box=d0_box,
        known_input=ConstantInput(u_box.midpoint if u is None else u),
        name=name,
    )


@register("deangelis_modified")
def deangelis_modified():
    """Two states, two unknown inputs, two nonlinear measurements"""
    eps = JACOBIAN_EPSILON
    # columns: x1 x2 d1 d2 u1 w1 w2
    a = np.array(
        [
            [0.38, -0.46, 0.0, -0.1, 0.0, 1.0, 0.0],
            [-0.2 - eps, -0.14 - eps, 0.2, -0.2, 0.0, 0.0, 1.0],
        ]
    )
    b = np.array(
        [
            [0.82, 0.21, 0.0, -0.1, 0.0, 1.0, 0.0],
            [-0.2 + eps, -0.14 + eps, 0.2, -0.2, 0.0, 0.0, 1.0],
        ]
    )
    noise = 0.2
    return build_spec(
        name="deangelis_modified",
        n=2,
        p=2,
        m=1,
        l=2,
        f=[
            "0.6*x1 - 0.12*x2 + 1.1*sin(0.3*x2 - 0.2*x1) - 0.1*d2 + w1",
            "-0.2*x1 - 0.14*x2 + 0.2*d1 - 0.2*d2 + w2",
        ],
        g=[
            "0.2*x1 + 0.65*x2 + 0.8*sin(0.3*x1 + 0.2*x2) - 0.1*d1 + 0.3*d2 + v1",
            "sin(x1) + 0.5*d1 - 0.7*d2 + v2",
        ],
        h=[
            "0.1*cos(d1)",
            "1/(1 + exp(d2)) - 0.1*d1",
        ],
        x_box=IntervalVector([-6.0, -6.0], [6.0, 6.0]),
        d_box=IntervalVector([-1.0, -1.0], [1.0, 1.0]),
        u_box=IntervalVector.point([0.0]),
        w_box=IntervalVector([-noise, -noise], [noise, noise]),
        v_box=IntervalVector([-noise, -noise], [noise, noise]),
        jacobian=JacobianBounds(a, b),
        lipschitz_f=[1.38, 1.07],
        lipschitz_g=[1.40, 1.66],
        lipschitz_h=[0.10, 0.27],
        # columns: x1 x2 d1 d2 u1 v1 v2
        g_jacobian=JacobianBounds(
            [
                [-0.04, 0.49, -0.1, 0.3, 0.0, 1.0, 0.0],
                [-1.0, 0.0, 0.5, -0.7, 0.0, 0.0, 1.0],
            ],
            [
                [0.44, 0.81, -0.1, 0.3, 0.0, 1.0, 0.0],
                [1.0, 0.0, 0.5, -0.7, 0.0, 0.0, 1.0],
            ],
        ),
        x0_box=IntervalVector([-1.1, -2.0], [2.0, 1.1]),
    )


@register("toy_linear")
def toy_linear():
    """One state driven by one unknown input, with the state measured"""
    noise = 0.1
    return build_spec(
        name="toy_linear",
        n=1,
        p=1,
        m=1,
        l=1,
        f=["0.5*x1 + 0.2*d1 + w1"],
        g=["x1 + v1"],
        h=["0.5*d1"],
        x_box=IntervalVector([-5.0], [5.0]),
        d_box=IntervalVector([-1.0], [1.0]),
        u_box=IntervalVector.point([0.0]),
        w_box=IntervalVector([-noise], [noise]),
        v_box=IntervalVector([-noise], [noise]),
        jacobian=JacobianBounds([[0.5, 0.2, 0.0, 1.0]], [[0.5, 0.2, 0.0, 1.0]]),
        lipschitz_f=[float(np.sqrt(0.5**2 + 0.2**2 + 1.0))],
        lipschitz_g=[float(np.sqrt(2.0))],
        lipschitz_h=[0.5],
        g_jacobian=JacobianBounds([[1.0, 0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0, 1.0]]),
        x0_box=IntervalVector([-1.0], [1.0]),
    )
