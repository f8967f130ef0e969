import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.model import (
    AliceConfig,
    BobConfig,
    ConfigError,
    DomainError,
    InvariantError,
    Scenario,
    SteeringError,
    UnsharpSetting,
    direction_from_angles,
    direction_from_vector,
    is_unit,
    unit_check,
    weak_equivalents,
)

finite_angles = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)


def _plane_alice():
    return AliceConfig(
        (direction_from_angles(math.pi / 2, 0.0), direction_from_angles(0.0, 0.0))
    )


def _make_bob(lam=0.8, n=2):
    dirs = (direction_from_angles(math.pi / 4, 0.0), direction_from_angles(3 * math.pi / 4, 0.0))
    if n == 3:
        dirs += (direction_from_angles(math.pi / 2, math.pi / 2),)
    return BobConfig(dirs, lam)


# --- Directions ---


class TestDirections:
    @given(finite_angles, finite_angles)
    def test_unit_norm(self, theta, phi):
        assert is_unit(direction_from_angles(theta, phi))

    @given(finite_angles, finite_angles)
    def test_canonical_ranges(self, theta, phi):
        d = direction_from_angles(theta, phi)
        assert 0.0 <= d.theta <= math.pi
        assert 0.0 <= d.phi < 2 * math.pi

    def test_pole_has_zero_azimuth(self):
        d = direction_from_angles(0.0, 1.3)
        assert d.phi == 0.0
        assert np.allclose(d.vector, [0.0, 0.0, 1.0])

    def test_folding_keeps_vector(self):
        """theta beyond pi folds back with phi shifted by pi."""
        raw_theta, raw_phi = 4.0, 0.5
        st_ = math.sin(raw_theta)
        expected = [
            st_ * math.cos(raw_phi),
            st_ * math.sin(raw_phi),
            math.cos(raw_theta),
        ]
        assert np.allclose(direction_from_angles(raw_theta, raw_phi).vector, expected)

    @pytest.mark.parametrize("theta,phi", [(math.nan, 0.0), (0.0, math.inf)])
    def test_non_finite_rejected(self, theta, phi):
        with pytest.raises(DomainError):
            direction_from_angles(theta, phi)

    def test_from_vector_roundtrip(self):
        v = np.array([0.3, -0.4, 0.5])
        d = direction_from_vector(v)
        assert np.allclose(d.vector, v / np.linalg.norm(v), atol=1e-14)

    def test_zero_vector_rejected(self):
        with pytest.raises(DomainError):
            direction_from_vector([0.0, 0.0, 0.0])

    def test_unit_check_is_tiny(self):
        assert unit_check(direction_from_angles(1.1, 2.2)) < 1e-12


# --- Sharpness ---


class TestSharpness:
    def test_sharp_measurement_destroys_coherence(self):
        assert weak_equivalents(1.0) == (0.0, 1.0)

    @given(st.floats(min_value=1e-6, max_value=1.0))
    def test_optimal_pointer_tradeoff(self, lam):
        f, g = weak_equivalents(lam)
        assert f * f + g * g == pytest.approx(1.0)

    @pytest.mark.parametrize("lam", [0.0, -0.1, 1.0000001, math.nan])
    def test_outside_unit_interval(self, lam):
        with pytest.raises(DomainError):
            weak_equivalents(lam)

    def test_setting_exposes_quality_and_precision(self):
        s = UnsharpSetting(direction_from_angles(0.0, 0.0), 0.6)
        assert s.quality_factor == pytest.approx(0.8)
        assert s.precision == 0.6


# --- Observers and scenarios ---


class TestAlice:
    def test_orthogonal_pair_accepted(self):
        assert _plane_alice().n_settings == 2

    def test_non_orthogonal_rejected(self):
        with pytest.raises(InvariantError, match="orthogonal"):
            AliceConfig(
                (direction_from_angles(0.0, 0.0), direction_from_angles(0.3, 0.0))
            )

    def test_single_setting_rejected(self):
        with pytest.raises(InvariantError):
            AliceConfig((direction_from_angles(0.0, 0.0),))

    def test_rounded_angles_break_orthogonality(self):
        """Two decimal places are not enough for a 1e-9 orthogonality check."""
        with pytest.raises(InvariantError):
            AliceConfig(
                (
                    direction_from_angles(math.pi / 2, 0.12),
                    direction_from_angles(math.pi, 0.0),
                    direction_from_angles(math.pi / 2, 1.69),
                )
            )


class TestScenario:
    def test_defaults_to_singlet_and_uniform_weights(self):
        s = Scenario(_plane_alice(), (_make_bob(), _make_bob(1.0)))
        assert s.state.name == "singlet"
        assert s.setting_weights == ((0.5, 0.5), (0.5, 0.5))
        assert s.chain_length == 2

    def test_setting_count_mismatch(self):
        with pytest.raises(InvariantError, match="as many settings"):
            Scenario(_plane_alice(), (_make_bob(n=3),))

    def test_empty_chain(self):
        with pytest.raises(InvariantError):
            Scenario(_plane_alice(), ())

    def test_bad_weights(self):
        with pytest.raises(InvariantError, match="probability"):
            Scenario(_plane_alice(), (_make_bob(),), setting_weights=((0.7, 0.7),))

    def test_bob_index_is_one_based(self):
        s = Scenario(_plane_alice(), (_make_bob(0.3), _make_bob(0.9)))
        assert s.bob(1).sharpness == 0.3
        with pytest.raises(DomainError):
            s.bob(3)

    def test_with_sharpness_leaves_original(self):
        s = Scenario(_plane_alice(), (_make_bob(0.3),))
        t = s.with_sharpness(1, 0.7)
        assert s.bob(1).sharpness == 0.3
        assert t.bob(1).sharpness == 0.7


class TestErrors:
    def test_hierarchy(self):
        for cls in (DomainError, InvariantError, ConfigError):
            assert issubclass(cls, SteeringError)
            assert issubclass(cls, ValueError)

    def test_config_error_location(self):
        err = ConfigError("bad value", line=4, field="bobs[1].lambda")
        assert "line 4" in str(err)
        assert "bobs[1].lambda" in str(err)

    def test_invariant_named(self):
        err = InvariantError("state has unit trace", "trace 2")
        assert err.invariant == "state has unit trace"
        assert "invariant violated" in str(err)
