import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.analytic import CorrelationTable
from src.inequalities import (
    CFFW,
    CJWR,
    SteeringEvaluation,
    cffw,
    cjwr,
    cjwr_bound,
    evaluate,
    evaluate_all,
)
from src.model import DomainError, InvariantError
from src.optimizer import platonic_axes

C = math.cos(math.pi / 4)


def _table(entries, bob=1):
    return CorrelationTable(bob, np.array(entries, dtype=float))


def tables(n):
    return arrays(np.float64, (n, n), elements=st.floats(-1.0, 1.0))


class TestCFFW:
    def test_tsirelson_table(self):
        result = cffw(_table([[-C, -C], [-C, C]]))
        assert result.value == pytest.approx(2 * math.sqrt(2))
        assert result.violated
        assert result.label == "S_1"

    def test_scales_with_sharpness(self):
        lam = 0.74
        result = cffw(_table(lam * np.array([[-C, -C], [-C, C]])))
        assert result.value == pytest.approx(2 * math.sqrt(2) * lam)

    def test_classical_table_at_bound(self):
        result = cffw(_table([[1.0, 0.0], [0.0, 1.0]]))
        assert result.value == pytest.approx(2.0)
        assert not result.violated

    def test_needs_two_by_two(self):
        with pytest.raises(DomainError):
            cffw(_table(np.eye(3)))

    def test_value_never_negative(self):
        assert cffw(_table([[0.0, 0.0], [0.0, 0.0]])).value == 0.0

    @given(tables(2))
    def test_swapping_bob_settings_keeps_value(self, c):
        assert cffw(_table(c[:, ::-1])).value == pytest.approx(cffw(_table(c)).value, abs=1e-12)

    @given(tables(2), st.sampled_from([0, 1]))
    def test_flipping_an_alice_setting_keeps_value(self, c, row):
        flipped = c.copy()
        flipped[row] *= -1.0
        assert cffw(_table(flipped)).value == pytest.approx(cffw(_table(c)).value, abs=1e-12)

    @given(tables(2))
    def test_bounded_by_column_norms(self, c):
        """S <= 2 sqrt(|u|^2 + |v|^2) <= 2 sqrt(2) max column norm <= 4 max |C|."""
        value = cffw(_table(c)).value
        longest = float(np.max(np.linalg.norm(c, axis=0)))
        assert value <= 2 * math.sqrt(2) * longest + 1e-12
        assert value <= 4 * float(np.max(np.abs(c))) + 1e-12

    def test_entry_bound_is_attained(self):
        assert cffw(_table([[1.0, 1.0], [1.0, -1.0]])).value == pytest.approx(4.0)

    @given(st.floats(0.01, 1.0), st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi))
    def test_single_bob_below_tsirelson_times_sharpness(self, lam, y0, y1):
        """Orthonormal Alice rows cap every Bob column norm at lambda."""
        alice = np.array([[1.0, 0.0], [0.0, 1.0]])
        bob = np.array([[math.sin(y0), math.cos(y0)], [math.sin(y1), math.cos(y1)]])
        c = -lam * alice @ bob.T
        assert cffw(_table(c)).value <= 2 * math.sqrt(2) * lam + 1e-12


class TestCJWR:
    @pytest.mark.parametrize("n", [2, 3])
    def test_perfect_anticorrelation(self, n):
        result = cjwr(_table(-np.eye(n)))
        assert result.value == pytest.approx(math.sqrt(n))
        assert result.label == f"F^{n}_1"

    def test_bound_is_strict(self):
        result = cjwr(_table(np.diag([1.0, 1.0, 1.0]) / math.sqrt(3)))
        assert result.value == pytest.approx(1.0)
        assert not SteeringEvaluation(CJWR, 1, 1.0, 1.0).violated

    def test_square_required(self):
        with pytest.raises(DomainError):
            cjwr(_table(np.ones((2, 3)) * 0.1))

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_bounded_by_largest_entry(self, n):
        rng = np.random.default_rng(n)
        for _ in range(50):
            c = rng.uniform(-1.0, 1.0, (n, n))
            assert cjwr(_table(c)).value <= math.sqrt(n) * float(np.max(np.abs(c))) + 1e-12

    def test_custom_bound(self):
        result = cjwr(_table(-np.eye(4)), bound=cjwr_bound([a.vector for a in platonic_axes(4)]))
        assert result.bound == pytest.approx(2 / math.sqrt(3))
        assert result.violated


class TestLocalBounds:
    def test_orthonormal_bound_is_one(self):
        assert cjwr_bound(np.eye(3)) == pytest.approx(1.0)
        assert cjwr_bound(np.eye(3)[:2]) == pytest.approx(1.0)

    def test_cube_axes(self):
        """sqrt(16/3)/2 for the four body diagonals."""
        axes = [a.vector for a in platonic_axes(4)]
        assert cjwr_bound(axes) == pytest.approx(math.sqrt(16 / 3) / 2)


class TestEvaluate:
    def test_dispatch(self):
        table = _table([[-C, -C], [-C, C]])
        assert evaluate(CFFW, table).kind == CFFW
        assert evaluate(CJWR, table).kind == CJWR

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            evaluate("chsh", _table(np.eye(2)))

    def test_evaluate_all_skips_cffw_for_three_settings(self):
        results = evaluate_all([_table(-np.eye(2), 1), _table(-np.eye(3) * 0.5, 2)])
        assert [(r.kind, r.bob_index) for r in results] == [
            (CFFW, 1),
            (CJWR, 1),
            (CJWR, 2),
        ]

    def test_bad_kind_rejected(self):
        with pytest.raises(InvariantError):
            SteeringEvaluation("bell", 1, 1.0, 2.0)
