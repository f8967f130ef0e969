import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from src.analytic import (
    CorrelationMatrixState,
    CorrelationTable,
    averaged_state,
    conditional_correlation,
    correlation_table,
    correlation_tables,
    decohere_average,
)
from src.density import joint_distribution, werner
from src.model import (
    AliceConfig,
    BobConfig,
    DomainError,
    InvariantError,
    Scenario,
    direction_from_angles,
)

X = direction_from_angles(math.pi / 2, 0.0)
Y = direction_from_angles(math.pi / 2, math.pi / 2)
Z = direction_from_angles(0.0, 0.0)
D45 = direction_from_angles(math.pi / 4, 0.0)
D135 = direction_from_angles(3 * math.pi / 4, 0.0)

angle_pairs = st.tuples(
    st.floats(min_value=0.0, max_value=math.pi), st.floats(min_value=0.0, max_value=6.28)
)
rotvec = st.tuples(*[st.floats(min_value=-3.0, max_value=3.0)] * 3)


def _make_scenario(*lambdas, state=None):
    bobs = tuple(BobConfig((D45, D135), lam) for lam in lambdas)
    return Scenario(AliceConfig((X, Z)), bobs, state)


def _oracle_entry(scenario, bob_index, j, k):
    """Average of E[a b_m] over every upstream setting path."""
    n = scenario.n_settings
    total = 0.0
    paths = np.ndindex(*([n] * (bob_index - 1))) if bob_index > 1 else [()]
    count = 0
    for path in paths:
        tail = (0,) * (scenario.chain_length - bob_index)
        dist = joint_distribution(scenario, j, tuple(path) + (k,) + tail)
        total += dist.correlation("Alice", f"Bob{bob_index}")
        count += 1
    return total / count


# --- Correlation matrices ---


class TestCorrelationMatrix:
    def test_singular_values_bounded(self):
        with pytest.raises(InvariantError):
            CorrelationMatrixState(2.0 * np.eye(3))

    def test_shape(self):
        with pytest.raises(InvariantError):
            CorrelationMatrixState(np.eye(2))

    def test_from_state(self):
        t = CorrelationMatrixState.from_state(werner(0.4))
        assert t.max_singular_value() == pytest.approx(0.4)
        assert t.correlator([0, 0, 1], [0, 0, 1]) == pytest.approx(-0.4)

    def test_sharp_bob_keeps_only_his_axes(self):
        """lambda = 1 along z alone leaves just the zz correlation."""
        state = CorrelationMatrixState(-np.eye(3))
        bob = BobConfig((Z, Z), 1.0)
        after = decohere_average(state, bob, [0.5, 0.5])
        assert np.allclose(after.T, np.diag([0.0, 0.0, -1.0]))

    @settings(max_examples=40)
    @given(rotvec, rotvec, st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(0.01, 1.0))
    def test_linear_in_correlation_matrix(self, v1, v2, alpha, beta, lam):
        t1 = Rotation.from_rotvec(v1).as_matrix()
        t2 = Rotation.from_rotvec(v2).as_matrix()
        bob = BobConfig((D45, D135), lam)
        w = [0.5, 0.5]
        mixed = decohere_average(CorrelationMatrixState(alpha * t1 + beta * t2), bob, w)
        parts = alpha * decohere_average(CorrelationMatrixState(t1), bob, w).T + beta * (
            decohere_average(CorrelationMatrixState(t2), bob, w).T
        )
        assert np.allclose(mixed.T, parts, atol=1e-12)

    def test_weights_must_be_probabilities(self):
        state = CorrelationMatrixState(-np.eye(3))
        with pytest.raises(DomainError):
            decohere_average(state, BobConfig((X, Z), 0.5), [0.8, 0.8])


class TestCorrelationTables:
    def test_first_bob_table(self):
        table = correlation_table(_make_scenario(0.74), 1)
        c = math.cos(math.pi / 4)
        assert np.allclose(table.entries, -0.74 * np.array([[c, c], [c, -c]]))

    def test_second_bob_sees_decohered_state(self):
        lam1 = 0.74
        f1 = math.sqrt(1 - lam1**2)
        state = averaged_state(_make_scenario(lam1, 1.0), 2)
        # isotropic in the x-z plane, untouched along y
        assert np.allclose(state.T, -np.diag([(1 + f1) / 2, f1, (1 + f1) / 2]))

    def test_single_pass_matches_per_bob(self):
        scenario = _make_scenario(0.6, 0.8, 1.0)
        for table in correlation_tables(scenario):
            again = correlation_table(scenario, table.bob_index)
            assert np.allclose(table.entries, again.entries, atol=1e-15)

    def test_bob_index_out_of_range(self):
        with pytest.raises(DomainError):
            correlation_table(_make_scenario(0.5), 2)

    @pytest.mark.parametrize("state", [None, werner(0.8)])
    def test_matches_oracle_for_three_bobs(self, state):
        scenario = _make_scenario(0.5, 0.7, 0.9, state=state)
        for table in correlation_tables(scenario):
            for j in range(2):
                for k in range(2):
                    expected = _oracle_entry(scenario, table.bob_index, j, k)
                    assert table[j, k] == pytest.approx(expected, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(angle_pairs, angle_pairs, angle_pairs, st.floats(0.05, 1.0), st.floats(0.05, 1.0))
    def test_matches_oracle_random_three_settings(self, y0, y1, y2, lam1, lam2):
        dirs = tuple(direction_from_angles(*p) for p in (y0, y1, y2))
        scenario = Scenario(
            AliceConfig((X, Y, Z)), (BobConfig(dirs, lam1), BobConfig(dirs, lam2))
        )
        table = correlation_table(scenario, 2)
        for j in range(3):
            for k in range(3):
                expected = _oracle_entry(scenario, 2, j, k)
                assert table[j, k] == pytest.approx(expected, abs=1e-9)

    @given(st.floats(0.05, 1.0), st.floats(0.05, 1.0))
    def test_homogeneous_in_last_sharpness(self, lam, other):
        scenario = _make_scenario(0.6, lam)
        a = correlation_table(scenario, 2).entries / lam
        b = correlation_table(scenario.with_sharpness(2, other), 2).entries / other
        assert np.allclose(a, b, atol=1e-12)

    @given(st.floats(0.01, 1.0))
    def test_contractive(self, lam):
        before = CorrelationMatrixState(-np.eye(3))
        after = decohere_average(before, BobConfig((D45, D135), lam), [0.5, 0.5])
        assert after.max_singular_value() <= before.max_singular_value() + 1e-12

    @given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
    def test_attenuation_monotone_in_earlier_sharpness(self, low, high, other):
        assume(low < high)
        for which in (1, 2):
            weak = _make_scenario(0.6, 0.6, 1.0).with_sharpness(which, low)
            strong = weak.with_sharpness(which, high)
            if which == 1:
                weak, strong = weak.with_sharpness(2, other), strong.with_sharpness(2, other)
            before = np.abs(correlation_table(weak, 3).entries)
            after = np.abs(correlation_table(strong, 3).entries)
            assert np.all(after <= before + 1e-12)

    def test_table_entries_bounded(self):
        with pytest.raises(InvariantError):
            CorrelationTable(1, np.array([[1.5, 0.0], [0.0, 0.0]]))


class TestConditionalCorrelation:
    def test_average_of_conditionals(self):
        scenario = _make_scenario(0.7, 0.9)
        mean = sum(conditional_correlation(scenario, 2, (c,)).entries for c in range(2)) / 2
        assert np.allclose(mean, correlation_table(scenario, 2).entries, atol=1e-13)

    def test_first_bob_needs_no_path(self):
        scenario = _make_scenario(0.7)
        assert np.allclose(
            conditional_correlation(scenario, 1, ()).entries,
            correlation_table(scenario, 1).entries,
        )

    def test_path_length_checked(self):
        with pytest.raises(DomainError):
            conditional_correlation(_make_scenario(0.7, 0.9), 2, ())

    def test_matches_oracle_for_fixed_path(self):
        scenario = _make_scenario(0.7, 0.9)
        table = conditional_correlation(scenario, 2, (1,))
        for j in range(2):
            for k in range(2):
                dist = joint_distribution(scenario, j, (1, k))
                assert table[j, k] == pytest.approx(dist.correlation("Alice", "Bob2"), abs=1e-12)
