from __future__ import annotations

import numpy as np
import pytest

from smio._testtools import random_box, random_point
from smio.abstraction import (
    AffineAbstraction,
    SampleGrid,
    abstract_global,
    abstract_local,
    evaluate_field,
    sigma,
)
from smio.errors import DimensionError, DomainError, InvalidInputError, InvalidPairError
from smio.intervals import IntervalVector
from smio.monotone import JacobianBounds

UNIT_SQUARE = IntervalVector([-1.0, -1.0], [1.0, 1.0])


def wavy(z):
    return np.array([np.sin(3 * z[0]) + z[1] ** 2])


wavy.batch = lambda points: (np.sin(3 * points[:, 0]) + points[:, 1] ** 2)[:, None]
WAVY_LIPSCHITZ = [float(np.sqrt(9.0 + 4.0))]


def affine_map(z):
    return np.array([2 * z[0] - z[1] + 1])


def tilted(z):
    return np.array([np.sin(3 * z[0]) + 5 * z[1]])


tilted.batch = lambda points: (np.sin(3 * points[:, 0]) + 5 * points[:, 1])[:, None]
TILTED_JACOBIAN = JacobianBounds([[-3.0, 5.0]], [[3.0, 5.0]])


class TestGrid:
    def test_sigma_examples(self):
        grid = SampleGrid.build(IntervalVector([0, 0], [0.2, 0.2]), 2)
        assert sigma([2.0], grid) == pytest.approx([0.1414], abs=1e-4)
        assert sigma([0.0], grid).tolist() == [0.0]
        point = SampleGrid.build(IntervalVector.point([0.3, 0.4]), 5)
        assert sigma([7.0], point).tolist() == [0.0]

    def test_points(self):
        grid = SampleGrid.build(IntervalVector([0, 1], [1, 1]), 4)
        assert len(grid) == 5
        assert grid.points[:, 1].tolist() == [1.0] * 5
        assert grid.active.tolist() == [True, False]

    def test_bad_resolution(self):
        with pytest.raises(InvalidInputError):
            SampleGrid.build(UNIT_SQUARE, 0)

    def test_bad_lipschitz(self):
        grid = SampleGrid.build(UNIT_SQUARE, 2)
        with pytest.raises(InvalidInputError):
            sigma([-1.0], grid)

    def test_evaluate_plain_callable(self):
        values = evaluate_field(affine_map, [[0.0, 0.0], [1.0, 1.0]])
        assert values.tolist() == [[1.0], [2.0]]


class TestGlobal:
    def test_affine_is_exact(self):
        band = abstract_global(affine_map, affine_map, UNIT_SQUARE, [np.sqrt(5.0)], 4)
        assert band.slopes == pytest.approx(np.array([[2.0, -1.0]]), abs=1e-7)
        assert band.theta == pytest.approx(0.0, abs=1e-7)
        assert band.offset_widths == pytest.approx(2 * band.sigma, abs=1e-7)
        assert 0.5 * (band.e_hi + band.e_lo) == pytest.approx([1.0], abs=1e-7)

    def test_square(self):
        def square(z):
            return z**2

        domain = IntervalVector([-1.0], [1.0])
        band = abstract_global(square, square, domain, [2.0], 100)
        assert band.sigma == pytest.approx([0.02])
        assert band.slopes == pytest.approx(np.zeros((1, 1)), abs=1e-7)
        assert band.theta == pytest.approx(1.0, abs=1e-7)
        assert band.offset_widths == pytest.approx(1.0 + 2 * band.sigma, abs=1e-7)

    def test_soundness(self, rng):
        band = abstract_global(wavy, wavy, UNIT_SQUARE, WAVY_LIPSCHITZ, 6)
        points = rng.uniform(-1, 1, size=(10_000, 2))
        values = wavy.batch(points)
        assert (band.lower(points) <= values + 1e-9).all()
        assert (values <= band.upper(points) + 1e-9).all()

    def test_pair(self, rng):
        def lower(z):
            return wavy(z) - 0.5

        band = abstract_global(lower, wavy, UNIT_SQUARE, WAVY_LIPSCHITZ, 4)
        assert band.theta >= 0.5 - 1e-7
        for _ in range(1000):
            z = random_point(rng, UNIT_SQUARE)
            assert band.lower(z)[0, 0] <= lower(z)[0] + 1e-9
            assert wavy(z)[0] <= band.upper(z)[0, 0] + 1e-9

    def test_invalid_pair(self):
        def above(z):
            return wavy(z) + 1.0

        with pytest.raises(InvalidPairError):
            abstract_global(above, wavy, UNIT_SQUARE, WAVY_LIPSCHITZ)

    def test_unbounded_space(self):
        with pytest.raises(DomainError):
            abstract_global(wavy, wavy, IntervalVector([-np.inf, 0], [0, 1]), WAVY_LIPSCHITZ)

    def test_lipschitz_count(self):
        with pytest.raises(DimensionError):
            abstract_global(wavy, wavy, UNIT_SQUARE, [1.0, 1.0])

    def test_zero_slope(self):
        band = abstract_global(affine_map, affine_map, UNIT_SQUARE, [np.sqrt(5.0)], zero_slope=True)
        assert not band.slopes.any()
        assert band.is_trivial
        assert band.e_lo[0] <= -2.0 + 1e-9
        assert band.e_hi[0] >= 4.0 - 1e-9

    def test_nested_boxes(self, rng):
        for _ in range(20):
            outer = random_box(rng, UNIT_SQUARE, 0.2, 1.0)
            inner = random_box(rng, outer, 0.0, 1.0)
            big = abstract_global(wavy, wavy, outer, WAVY_LIPSCHITZ, 3)
            small = abstract_global(wavy, wavy, inner, WAVY_LIPSCHITZ, 3)
            assert small.theta <= big.theta + 2 * big.sigma.max() + 1e-7

    def test_blocks(self):
        band = abstract_global(affine_map, affine_map, UNIT_SQUARE, [np.sqrt(5.0)], blocks=(1, 0, 1))
        assert band.A == pytest.approx(np.array([[2.0]]), abs=1e-7)
        assert band.B.shape == (1, 0)
        assert band.W == pytest.approx(np.array([[-1.0]]), abs=1e-7)

    def test_affine_with_jacobian_is_exact(self):
        jacobian = JacobianBounds([[2.0, -1.0]], [[2.0, -1.0]])
        band = abstract_global(
            affine_map, affine_map, UNIT_SQUARE, [np.sqrt(5.0)], 4, jacobian=jacobian
        )
        assert band.slopes == pytest.approx(np.array([[2.0, -1.0]]), abs=1e-7)
        assert band.sigma == pytest.approx([0.0], abs=1e-9)
        assert band.offset_widths == pytest.approx([0.0], abs=1e-7)

    def test_jacobian_soundness(self, rng):
        jacobian = JacobianBounds([[-3.0, -2.0]], [[3.0, 2.0]])
        band = abstract_global(wavy, wavy, UNIT_SQUARE, WAVY_LIPSCHITZ, 6, jacobian=jacobian)
        points = rng.uniform(-1, 1, size=(10_000, 2))
        values = wavy.batch(points)
        assert (band.lower(points) <= values + 1e-9).all()
        assert (values <= band.upper(points) + 1e-9).all()

    def test_jacobian_charges_curved_axes_only(self, rng):
        lipschitz = [float(np.sqrt(9.0 + 25.0))]
        plain = abstract_global(tilted, tilted, UNIT_SQUARE, lipschitz, 6)
        band = abstract_global(tilted, tilted, UNIT_SQUARE, lipschitz, 6, jacobian=TILTED_JACOBIAN)
        assert band.slopes[0, 1] == pytest.approx(5.0, abs=1e-7)
        assert band.offset_widths[0] < plain.offset_widths[0] - 0.5
        points = rng.uniform(-1, 1, size=(10_000, 2))
        values = tilted.batch(points)
        assert (band.lower(points) <= values + 1e-9).all()
        assert (values <= band.upper(points) + 1e-9).all()

    def test_jacobian_shape(self):
        with pytest.raises(DimensionError):
            abstract_global(
                wavy, wavy, UNIT_SQUARE, WAVY_LIPSCHITZ, jacobian=JacobianBounds([[1.0]], [[1.0]])
            )


class TestAffineAbstraction:
    def test_trivial(self):
        band = AffineAbstraction.trivial(IntervalVector([-1.0], [2.0]), UNIT_SQUARE)
        assert band.theta == 3.0
        assert band.bounds(UNIT_SQUARE) == IntervalVector([-1.0], [2.0])

    def test_validation(self):
        with pytest.raises(DimensionError):
            AffineAbstraction([[1.0]], [0.0], [0.0], 0.0, UNIT_SQUARE)
        with pytest.raises(InvalidInputError):
            AffineAbstraction([[1.0, 0.0]], [0.0], [1.0], 0.0, UNIT_SQUARE)
        with pytest.raises(DimensionError):
            AffineAbstraction([[1.0, 0.0]], [0.0], [0.0], 0.0, UNIT_SQUARE, (1, 0, 0))


class TestLocal:
    def test_nested_in_global(self, rng):
        outer = abstract_global(wavy, wavy, UNIT_SQUARE, WAVY_LIPSCHITZ, 4)
        for _ in range(50):
            box = random_box(rng, UNIT_SQUARE, 0.0, 0.5)
            local = abstract_local(wavy, wavy, box, outer, WAVY_LIPSCHITZ, 2)
            points = SampleGrid.build(box, 2).points
            assert local.nested_in(outer, points)
            values = wavy.batch(points)
            assert (local.lower(points) <= values + 1e-9).all()
            assert (values <= local.upper(points) + 1e-9).all()

    def test_jacobian_nested_and_sound(self, rng):
        outer = abstract_global(tilted, tilted, UNIT_SQUARE, [6.0], 4, jacobian=TILTED_JACOBIAN)
        for _ in range(20):
            box = random_box(rng, UNIT_SQUARE, 0.05, 0.15)
            local = abstract_local(tilted, tilted, box, outer, [6.0], 4, jacobian=TILTED_JACOBIAN)
            assert local.nested_in(outer, SampleGrid.build(box, 4).points)
            points = rng.uniform(box.lo, box.hi, size=(500, 2))
            values = tilted.batch(points)
            assert (local.lower(points) <= values + 1e-9).all()
            assert (values <= local.upper(points) + 1e-9).all()

    def test_full_space_no_worse(self):
        outer = abstract_global(wavy, wavy, UNIT_SQUARE, WAVY_LIPSCHITZ, 3)
        local = abstract_local(wavy, wavy, UNIT_SQUARE, outer, WAVY_LIPSCHITZ, 3)
        assert local.theta <= outer.theta + 1e-7

    def test_point_box(self):
        def lower(z):
            return wavy(z) - 0.25

        outer = abstract_global(lower, wavy, UNIT_SQUARE, WAVY_LIPSCHITZ, 3)
        z0 = np.array([0.3, -0.4])
        local = abstract_local(lower, wavy, IntervalVector.point(z0), outer, WAVY_LIPSCHITZ)
        assert not local.slopes.any()
        assert local.upper(z0)[0, 0] == pytest.approx(wavy(z0)[0], abs=1e-9)
        assert local.lower(z0)[0, 0] == pytest.approx(lower(z0)[0], abs=1e-9)

    def test_outside_domain(self):
        outer = abstract_global(wavy, wavy, UNIT_SQUARE, WAVY_LIPSCHITZ)
        with pytest.raises(DomainError):
            abstract_local(wavy, wavy, IntervalVector([0.5, 0.5], [1.5, 1.0]), outer, WAVY_LIPSCHITZ)

    def test_zero_slope(self):
        outer = abstract_global(wavy, wavy, UNIT_SQUARE, WAVY_LIPSCHITZ)
        box = IntervalVector([0.0, 0.0], [0.3, 0.3])
        local = abstract_local(wavy, wavy, box, outer, WAVY_LIPSCHITZ, 2, zero_slope=True)
        assert local.is_trivial
