from __future__ import annotations

import numpy as np
import pytest

from smio.intervals import IntervalVector
from smio.monotone import JacobianBounds
from smio.observer import NoiseBounds, Spaces, SystemSpec
from smio.systems import build_spec

slow = pytest.mark.slow


def identity_observed(noise=0.0):
    """One state and one unknown input, each measured directly"""
    return build_spec(
        name="identity_observed",
        n=1,
        p=1,
        m=1,
        l=2,
        f=["0.5*x1 + 0.2*d1 + w1"],
        g=["x1 + v1", "d1 + v2"],
        h=["0.5*d1"],
        x_box=IntervalVector([-5.0], [5.0]),
        d_box=IntervalVector([-1.0], [1.0]),
        u_box=IntervalVector.point([0.0]),
        w_box=IntervalVector([-noise], [noise]),
        v_box=IntervalVector([-noise, -noise], [noise, noise]),
        jacobian=JacobianBounds([[0.5, 0.2, 0.0, 1.0]], [[0.5, 0.2, 0.0, 1.0]]),
        lipschitz_f=[float(np.sqrt(0.5**2 + 0.2**2 + 1.0))],
        lipschitz_g=[float(np.sqrt(2.0)), float(np.sqrt(2.0))],
        lipschitz_h=[0.5],
        g_jacobian=JacobianBounds(
            [[1.0, 0.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0, 1.0]],
            [[1.0, 0.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0, 1.0]],
        ),
        x0_box=IntervalVector([-1.0], [1.0]),
    )


def callable_spec(
    f,
    g,
    h,
    *,
    n,
    p,
    l,
    jacobian,
    lipschitz_f,
    lipschitz_g,
    lipschitz_h,
    x_box,
    d_box,
    w_box,
    v_box,
    x0_box=None,
    d0_box=None,
    g_jacobian=None,
):
    """A system from plain callables, with a single zero known input"""
    return SystemSpec(
        n=n,
        p=p,
        m=1,
        l=l,
        f=f,
        g=g,
        f_jacobian_bounds=jacobian,
        noise=NoiseBounds(w_box, v_box),
        spaces=Spaces(x_box, d_box, IntervalVector.point([0.0])),
        lipschitz_h=lipschitz_h,
        lipschitz_g=lipschitz_g,
        lipschitz_f=lipschitz_f,
        g_jacobian_bounds=g_jacobian,
        h_oracle=h,
        x0_box=x0_box,
        d0_box=d0_box,
        name="callable",
    )


def random_box(rng, space, min_fraction=0.0, max_fraction=1.0):
    """A random sub-box of ``space`` whose widths are the given fractions of the space's"""
    widths = space.widths * rng.uniform(min_fraction, max_fraction, space.dim)
    lo = space.lo + rng.uniform(0, 1, space.dim) * (space.widths - widths)
    return IntervalVector(lo, lo + widths)


def random_point(rng, box):
    return rng.uniform(box.lo, box.hi)
