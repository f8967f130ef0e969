import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src import density
from src.density import (
    OUTCOMES,
    TwoQubitState,
    averaged_channel,
    dephasing_form,
    effect,
    joint_distribution,
    marginal,
    pure_state,
    signalling_report,
    singlet,
    werner,
)
from src.model import (
    AliceConfig,
    BobConfig,
    DomainError,
    InvariantError,
    Scenario,
    direction_from_angles,
)

angles = st.tuples(
    st.floats(min_value=0.0, max_value=math.pi), st.floats(min_value=0.0, max_value=6.28)
)
sharpness = st.floats(min_value=0.01, max_value=1.0)

X = direction_from_angles(math.pi / 2, 0.0)
Z = direction_from_angles(0.0, 0.0)
D45 = direction_from_angles(math.pi / 4, 0.0)
D135 = direction_from_angles(3 * math.pi / 4, 0.0)


def _make_scenario(*lambdas, bob_dirs=(D45, D135)):
    bobs = tuple(BobConfig(bob_dirs, lam) for lam in lambdas)
    return Scenario(AliceConfig((X, Z)), bobs)


# --- States ---


class TestStates:
    def test_singlet_correlations(self):
        assert np.allclose(singlet().correlation_matrix(), -np.eye(3))

    def test_singlet_matrix_is_exact(self):
        """The Pauli expansion of the singlet matrix gives -I too."""
        rho = singlet().matrix
        t = np.empty((3, 3))
        for u, su in enumerate(density.PAULIS):
            for v, sv in enumerate(density.PAULIS):
                t[u, v] = np.real(np.trace(rho @ np.kron(su, sv)))
        assert np.allclose(t, -np.eye(3), atol=1e-15)

    def test_reduced_states_are_maximally_mixed(self):
        s = singlet()
        assert np.allclose(s.reduced_alice(), np.eye(2) / 2)
        assert np.allclose(s.reduced_bob(), np.eye(2) / 2)

    def test_werner_scales_correlations(self):
        assert np.allclose(werner(0.5).correlation_matrix(), -0.5 * np.eye(3))

    def test_pure_product_state(self):
        s = pure_state([1, 0, 0, 0])
        assert np.allclose(s.correlation_matrix(), np.diag([0.0, 0.0, 1.0]))

    def test_bad_trace(self):
        with pytest.raises(InvariantError, match="unit trace"):
            TwoQubitState(np.eye(4) / 2)

    def test_not_positive(self):
        rho = np.diag([0.6, 0.6, -0.2, 0.0])
        with pytest.raises(InvariantError, match="positive"):
            TwoQubitState(rho)

    def test_matrix_is_read_only(self):
        with pytest.raises(ValueError):
            singlet().matrix[0, 0] = 1.0

    def test_singlet_name_needs_singlet_matrix(self):
        with pytest.raises(InvariantError, match="singlet"):
            TwoQubitState(werner(0.5).matrix, name="singlet")

    def test_unnamed_singlet_matrix_uses_pauli_expansion(self):
        s = TwoQubitState(singlet().matrix)
        assert s.name == ""
        assert np.allclose(s.correlation_matrix(), -np.eye(3), atol=1e-15)


# --- Effects and instruments ---


class TestEffects:
    @given(angles, sharpness)
    def test_effects_sum_to_identity(self, pair, lam):
        d = direction_from_angles(*pair)
        total = effect(d, lam, +1).matrix + effect(d, lam, -1).matrix
        assert np.allclose(total, np.eye(2), atol=1e-12)

    @given(angles, sharpness)
    def test_eigenvalues(self, pair, lam):
        d = direction_from_angles(*pair)
        eig = effect(d, lam, +1).eigenvalues()
        assert eig == pytest.approx([(1 - lam) / 2, (1 + lam) / 2], abs=1e-12)

    def test_kraus_squares_to_effect(self):
        e = effect(D45, 0.6, -1)
        k = e.sqrt()
        assert np.allclose(k @ k, e.matrix, atol=1e-14)

    def test_bad_outcome(self):
        with pytest.raises(DomainError):
            effect(Z, 0.5, 0)

    @settings(max_examples=50)
    @given(angles, sharpness)
    def test_averaged_channel_dephasing_form(self, pair, lam):
        d = direction_from_angles(*pair)
        rho = werner(0.7).matrix
        assert np.allclose(averaged_channel(rho, d, lam), dephasing_form(rho, d, lam), atol=1e-10)

    def test_sharp_channel_is_full_dephasing(self):
        rho = singlet().matrix
        out = averaged_channel(rho, Z, 1.0)
        assert abs(out[1, 2]) < 1e-12
        assert np.trace(out).real == pytest.approx(1.0)


# --- Distributions ---


class TestJointDistribution:
    def test_one_sharp_bob_chsh_correlation(self):
        dist = joint_distribution(_make_scenario(1.0), 0, (0,))
        assert dist.correlation("Alice", "Bob1") == pytest.approx(-math.cos(math.pi / 4))

    def test_probabilities_sum_to_one(self):
        dist = joint_distribution(_make_scenario(0.7, 0.4, 1.0), 1, (0, 1, 0))
        assert sum(p for _, p in dist.rows()) == pytest.approx(1.0)
        assert len(list(dist.rows())) == 16

    def test_two_bob_closed_form(self):
        lam1, lam2 = 0.74, 0.9
        dist = marginal(joint_distribution(_make_scenario(lam1, lam2), 0, (0, 1)), ["Alice", "Bob2"])
        f1 = math.sqrt(1 - lam1**2)
        overlap = f1 * X.dot(D135) + (1 - f1) * X.dot(D45) * D45.dot(D135)
        for a in OUTCOMES:
            for b in OUTCOMES:
                expected = 0.25 * (1 - a * b * lam2 * overlap)
                assert dist.probability((a, b)) == pytest.approx(expected, abs=1e-12)

    def test_wrong_choice_count(self):
        with pytest.raises(DomainError):
            joint_distribution(_make_scenario(0.5, 0.5), 0, (0,))

    def test_choice_out_of_range(self):
        with pytest.raises(DomainError):
            joint_distribution(_make_scenario(0.5), 2, (0,))

    def test_empty_marginal(self):
        dist = joint_distribution(_make_scenario(0.5), 0, (0,))
        with pytest.raises(DomainError):
            marginal(dist, [])

    def test_bob_effects_come_from_his_unsharp_setting(self, monkeypatch):
        seen = []
        original = density.effect

        def recording(direction, lam, outcome):
            seen.append((direction, lam))
            return original(direction, lam, outcome)

        monkeypatch.setattr(density, "effect", recording)
        scenario = _make_scenario(0.74, 0.3)
        joint_distribution(scenario, 0, (1, 0))
        first = scenario.bob(1).setting(1)
        second = scenario.bob(2).setting(0)
        assert (first.direction, first.sharpness) in seen
        assert (second.direction, second.sharpness) in seen

    def test_repeated_sharp_measurement(self):
        """A sharp Bob1 leaves Bob2 on the same axis perfectly correlated with Bob1."""
        dist = joint_distribution(_make_scenario(1.0, 1.0, bob_dirs=(Z, X)), 0, (0, 0))
        assert dist.correlation("Bob1", "Bob2") == pytest.approx(1.0)


class TestSignalling:
    def test_needs_two_bobs(self):
        with pytest.raises(DomainError):
            signalling_report(_make_scenario(0.5))

    def test_structure_of_two_bob_chain(self):
        report = signalling_report(_make_scenario(0.74, 1.0))
        assert report.alice_gap < 1e-10
        assert report.last_bob_gap < 1e-10
        assert report.witness > 0.01
        assert report.witness_bob == 1

    def test_three_bob_chain(self):
        report = signalling_report(_make_scenario(0.6, 0.8, 1.0))
        assert report.alice_gap < 1e-10
        assert report.last_bob_gap < 1e-10
        assert report.witness > 0.0
