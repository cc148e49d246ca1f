import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadet import check_identifiable, from_amplitudes, uniform_ask
from quadet.errors import ParameterError


class TestUniformAsk:
    def test_binary_energies(self):
        c = uniform_ask(2)
        np.testing.assert_allclose(c.energies, [0.0, 2.0], rtol=1e-15)

    def test_four_level_energies(self):
        # Oracle: normalization recomputed by direct summation of 0,1,4,9.
        c = uniform_ask(4)
        raw = np.array([0.0, 1.0, 4.0, 9.0])
        expected = raw * (4 / raw.sum())
        np.testing.assert_allclose(c.energies, expected, rtol=1e-14)
        assert abs(c.energies.mean() - 1.0) <= 1e-12

    def test_eight_level_variance_brute_force(self):
        c = uniform_ask(8)
        brute = sum((e - 1.0) ** 2 for e in c.energies) / 8
        np.testing.assert_allclose(c.energy_variance, brute, rtol=1e-14)

    @given(st.integers(min_value=2, max_value=64))
    def test_unit_mean_energy(self, m):
        c = uniform_ask(m)
        assert abs(c.energies.mean() - 1.0) <= 1e-12
        assert c.energies[0] == 0.0
        assert np.all(np.diff(c.energies) > 0)
        assert c.prior == 1.0 / m

    @pytest.mark.parametrize("m", [0, 1, -3])
    def test_order_too_small(self, m):
        with pytest.raises(ParameterError):
            uniform_ask(m)


class TestCustomConstellations:
    def test_non_ascending_rejected(self):
        with pytest.raises(ParameterError):
            from_amplitudes([0.0, 1.0, -1.0], normalize=True)

    def test_missing_null_symbol_rejected(self):
        with pytest.raises(ParameterError):
            from_amplitudes([0.5, 1.0], normalize=True)

    def test_unnormalized_rejected(self):
        with pytest.raises(ParameterError):
            from_amplitudes([0.0, 2.0])

    def test_normalize_flag(self):
        c = from_amplitudes([0.0, 1.0, 3.0], normalize=True)
        assert abs(c.energies.mean() - 1.0) <= 1e-12
        np.testing.assert_allclose(c.energies[2] / c.energies[1], 9.0, rtol=1e-14)

    def test_degenerate_needs_flag(self):
        amps = np.array([0.0, 1.0, 1.0, np.sqrt(2.0)])
        amps = amps / np.sqrt(np.mean(amps**2))
        with pytest.raises(ParameterError):
            from_amplitudes(amps)
        c = from_amplitudes(amps, allow_degenerate=True)
        assert c.m == 4


class TestIdentifiability:
    def test_uniform_ask_identifiable(self):
        assert check_identifiable(uniform_ask(4)) is True

    def test_duplicate_energy_not_identifiable(self):
        amps = np.array([0.0, 1.0, 1.0, np.sqrt(2.0)])
        amps = amps / np.sqrt(np.mean(amps**2))
        c = from_amplitudes(amps, allow_degenerate=True)
        assert check_identifiable(c) is False

    def test_near_duplicate_tolerance(self):
        amps = np.array([0.0, 1.0, 1.0 + 1e-14, 2.0])
        c = from_amplitudes(amps, allow_degenerate=True, normalize=True)
        assert check_identifiable(c) is False
