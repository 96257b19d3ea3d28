from __future__ import annotations

import numpy as np
import pytest

from smio.errors import DimensionError, InvalidInputError, SoundnessFault
from smio.intervals import (
    IntervalVector,
    bound_linear_map,
    clamp,
    contract_linear,
    pseudoinverse,
    rowsupp,
    split,
)


class TestIntervalVector:
    def test_basic(self):
        box = IntervalVector([0, -1], [3, 3])
        assert box.dim == 2
        assert box.widths.tolist() == [3, 4]
        assert box.width == pytest.approx(5.0)
        assert box.midpoint.tolist() == [1.5, 1.0]
        assert box.is_bounded

    def test_rejects_crossed_bounds(self):
        with pytest.raises(InvalidInputError):
            IntervalVector([1.0], [0.0])
        with pytest.raises(InvalidInputError):
            IntervalVector([np.nan], [0.0])
        with pytest.raises(DimensionError):
            IntervalVector([0.0, 1.0], [1.0])

    def test_unbounded(self):
        box = IntervalVector([-np.inf], [0.0])
        assert not box.is_bounded

    def test_immutable(self):
        box = IntervalVector([0.0], [1.0])
        with pytest.raises(AttributeError):
            box.lo = np.zeros(1)
        with pytest.raises(ValueError):
            box.lo[0] = 5

    def test_stack_and_slice(self):
        box = IntervalVector.stack(IntervalVector([0], [1]), IntervalVector.point([2, 3]))
        assert box.lo.tolist() == [0, 2, 3]
        assert box.hi.tolist() == [1, 2, 3]
        assert box[1:] == IntervalVector.point([2, 3])
        assert box[0] == IntervalVector([0], [1])

    def test_contains(self):
        box = IntervalVector([0, 0], [1, 1])
        assert box.contains([0.5, 1.0])
        assert not box.contains([0.5, 1.1])
        assert box.contains([0.5, 1.0 + 1e-12], tol=1e-9)
        assert box.contains_box(IntervalVector([0.2, 0.2], [0.4, 1.0]))
        assert not box.contains_box(IntervalVector([-0.2, 0.2], [0.4, 1.0]))

    def test_intersect(self):
        a = IntervalVector([0, 0], [2, 2])
        b = IntervalVector([1, -1], [3, 1])
        assert a.intersect(b) == IntervalVector([1, 0], [2, 1])

    def test_intersect_empty(self):
        a = IntervalVector([0.0], [1.0])
        with pytest.raises(SoundnessFault):
            a.intersect(IntervalVector([2.0], [3.0]))

    def test_clamp_collapses_rounding(self):
        box = clamp([1.0 + 1e-12], [1.0])
        assert box.lo[0] == box.hi[0]
        with pytest.raises(SoundnessFault) as info:
            clamp([1.1], [1.0])
        assert info.value.lo is not None


class TestSplit:
    def test_example(self):
        parts = split([[1, -2], [0, 3]])
        assert parts.plus.tolist() == [[1, 0], [0, 3]]
        assert parts.plusplus.tolist() == [[0, 2], [0, 0]]
        assert parts.abs.tolist() == [[1, 2], [0, 3]]

    def test_zero_and_nonnegative(self):
        parts = split(np.zeros((2, 2)))
        assert not parts.plus.any()
        assert not parts.plusplus.any()
        M = np.array([[0.5, 2.0], [1.0, 0.0]])
        parts = split(M)
        assert np.array_equal(parts.plus, M)
        assert not parts.plusplus.any()

    def test_round_trip(self, rng):
        M = rng.normal(size=(6, 5))
        parts = split(M)
        assert np.array_equal(parts.matrix, M)
        assert (parts.plus >= 0).all()
        assert (parts.plusplus >= 0).all()
        assert np.array_equal(parts.plus + parts.plusplus, np.abs(M))

    def test_non_finite(self):
        with pytest.raises(InvalidInputError):
            split([[np.inf, 0.0]])


class TestBoundLinearMap:
    def test_identity(self):
        box = IntervalVector([-1, 2], [0, 5])
        assert bound_linear_map(np.eye(2), box) == box

    def test_mixed_signs(self):
        out = bound_linear_map([[1, -1]], IntervalVector([0, 0], [1, 1]))
        assert out.lo.tolist() == [-1]
        assert out.hi.tolist() == [1]

    def test_nonnegative(self):
        A = np.array([[2.0, 0.0], [0.0, 3.0]])
        box = IntervalVector([1, -2], [2, 4])
        out = bound_linear_map(A, box)
        assert np.allclose(out.lo, A @ box.lo)
        assert np.allclose(out.hi, A @ box.hi)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            bound_linear_map(np.eye(3), IntervalVector([0, 0], [1, 1]))

    def test_soundness(self, rng):
        for _ in range(10_000 // 50):
            A = rng.normal(size=(3, 4))
            lo = rng.normal(size=4)
            box = IntervalVector(lo, lo + rng.uniform(0, 2, 4))
            out = bound_linear_map(A, box)
            xs = rng.uniform(box.lo, box.hi, size=(50, 4))
            values = xs @ A.T
            assert (values >= out.lo - 1e-12).all()
            assert (values <= out.hi + 1e-12).all()


class TestRowsupp:
    def test_zero(self):
        assert rowsupp(np.zeros((3, 2))).tolist() == [0, 0, 0]

    def test_unobserved_direction(self):
        A = np.array([[1.0, 0.0]])
        assert rowsupp(np.eye(2) - pseudoinverse(A) @ A).tolist() == [0, 1]

    def test_all_nonzero(self):
        assert rowsupp([[1, 0], [0, -2]]).tolist() == [1, 1]

    def test_tolerance(self):
        assert rowsupp([[1e-12, 0.0], [1e-6, 0.0]]).tolist() == [0, 1]


class TestPseudoinverse:
    def test_invertible(self, rng):
        A = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        assert np.allclose(pseudoinverse(A), np.linalg.inv(A), atol=1e-9)

    def test_row(self):
        assert np.allclose(pseudoinverse([[1.0, 0.0]]), [[1.0], [0.0]])

    def test_zero(self):
        out = pseudoinverse(np.zeros((2, 3)))
        assert out.shape == (3, 2)
        assert not out.any()

    @pytest.mark.parametrize("shape", [(2, 5), (5, 2), (8, 8), (3, 3)])
    def test_penrose_identities(self, rng, shape):
        A = rng.normal(size=shape)
        P = pseudoinverse(A)
        scale = np.linalg.norm(A)
        assert np.linalg.norm(A @ P @ A - A) <= 1e-8 * scale
        assert np.linalg.norm(P @ A @ P - P) <= 1e-8 * np.linalg.norm(P)
        assert np.allclose((A @ P).T, A @ P, atol=1e-8)
        assert np.allclose((P @ A).T, P @ A, atol=1e-8)

    def test_rank_deficient(self):
        A = np.array([[1.0, 2.0], [2.0, 4.0]])
        P = pseudoinverse(A)
        assert np.allclose(A @ P @ A, A)


class TestContractLinear:
    def test_example(self):
        box = IntervalVector([0.0, 0.0], [1.0, 1.0])
        lo, hi = contract_linear([[1.0, 1.0]], IntervalVector([0.0], [0.5]), box)
        assert lo.tolist() == [0.0, 0.0]
        assert hi.tolist() == [0.5, 0.5]

    def test_negative_coefficient(self):
        box = IntervalVector([0.0, 0.0], [1.0, 1.0])
        lo, hi = contract_linear([[1.0, -1.0]], IntervalVector([0.5], [2.0]), box)
        assert lo.tolist() == [0.5, 0.0]
        assert hi.tolist() == [1.0, 0.5]

    def test_small_coefficients_skipped(self):
        box = IntervalVector([0.0, 0.0], [1.0, 100.0])
        lo, hi = contract_linear([[1.0, 1e-9]], IntervalVector([0.0], [0.2]), box)
        assert lo[1] == 0.0 and hi[1] == 100.0
        assert hi[0] == pytest.approx(0.2)

    def test_inconsistent_target(self):
        box = IntervalVector([0.0, 0.0], [1.0, 1.0])
        lo, hi = contract_linear([[1.0, 1.0]], IntervalVector([3.0], [4.0]), box)
        assert (lo > hi).any()

    def test_dimension_mismatch(self):
        box = IntervalVector([0.0, 0.0], [1.0, 1.0])
        with pytest.raises(DimensionError):
            contract_linear([[1.0, 1.0]], IntervalVector([0.0, 0.0], [1.0, 1.0]), box)

    def test_soundness(self, rng):
        for _ in range(200):
            A = rng.normal(size=(3, 4))
            lo = rng.uniform(-2, 0, 4)
            box = IntervalVector(lo, lo + rng.uniform(0, 3, 4))
            x = rng.uniform(box.lo, box.hi)
            margin = rng.uniform(0, 0.5, 3)
            target = IntervalVector(A @ x - margin, A @ x + margin)
            new_lo, new_hi = contract_linear(A, target, box)
            assert (new_lo <= x + 1e-9).all()
            assert (x <= new_hi + 1e-9).all()
            assert (new_lo >= box.lo).all() and (new_hi <= box.hi).all()
