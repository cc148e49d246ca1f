import numpy as np
import pytest

from quadet import (
    ChannelSpec,
    CovariancePair,
    Spectrum,
    build_covariance_pair,
    build_exponential_covariance,
    decompose,
    derive_stream,
    sample_physical,
    sample_whitened,
    whiten,
)
from quadet.errors import CovarianceError, ParameterError, SingularityError


class TestExponentialCovariance:
    def test_zero_correlation_is_identity(self):
        assert np.array_equal(build_exponential_covariance(3, 0.0), np.eye(3))

    def test_two_antennas(self):
        np.testing.assert_allclose(
            build_exponential_covariance(2, 0.7), [[1.0, 0.7], [0.7, 1.0]], rtol=0, atol=0
        )

    def test_three_antennas_direct_formula(self):
        expected = [[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]]
        np.testing.assert_allclose(build_exponential_covariance(3, 0.5), expected, rtol=0, atol=0)

    @pytest.mark.parametrize("rho", [-0.1, 1.0, 1.5])
    def test_rho_out_of_range(self, rho):
        with pytest.raises(ParameterError):
            build_exponential_covariance(4, rho)

    def test_unit_diagonal_and_symmetry(self):
        c = build_exponential_covariance(9, 0.83)
        np.testing.assert_array_equal(np.diag(c), np.ones(9))
        np.testing.assert_array_equal(c, c.T)


class TestCovariancePair:
    def test_identity_case(self):
        pair = build_covariance_pair(ChannelSpec(4, 0.0, 1.0))
        np.testing.assert_array_equal(pair.c_h, np.eye(4))
        np.testing.assert_array_equal(pair.c_z, np.eye(4))

    def test_white_noise_scaling(self):
        pair = build_covariance_pair(ChannelSpec(2, 0.0, 10.0))
        np.testing.assert_allclose(pair.c_z, 0.1 * np.eye(2), rtol=1e-15)

    def test_trace_ratio_matches_snr(self):
        # Oracle: recompute the trace ratio from the produced matrices.
        pair = build_covariance_pair(ChannelSpec(8, 0.7, 2.0))
        np.testing.assert_allclose(pair.c_z, 0.5 * np.eye(8), rtol=1e-15)
        ratio = np.trace(pair.c_h).real / np.trace(pair.c_z).real
        assert abs(ratio - 2.0) <= 1e-12 * 2.0

    def test_custom_noise_rescaled(self):
        noise = np.diag([1.0, 2.0, 3.0])
        pair = build_covariance_pair(ChannelSpec(3, 0.5, 4.0, noise_cov=noise))
        ratio = np.trace(pair.c_h).real / np.trace(pair.c_z).real
        assert abs(ratio - 4.0) <= 1e-12 * 4.0
        # Shape preserved up to scale.
        np.testing.assert_allclose(pair.c_z / pair.c_z[0, 0], noise / noise[0, 0], rtol=1e-14)

    def test_custom_noise_not_pd_rejected(self):
        noise = np.diag([1.0, 0.0, 1.0])
        with pytest.raises(CovarianceError):
            build_covariance_pair(ChannelSpec(3, 0.5, 1.0, noise_cov=noise))

    def test_non_hermitian_rejected(self):
        with pytest.raises(CovarianceError):
            CovariancePair(c_h=np.array([[1.0, 0.5], [0.1, 1.0]]), c_z=np.eye(2))

    @pytest.mark.parametrize("kwargs", [dict(n_antennas=0), dict(rho=1.0), dict(snr=0.0), dict(snr=-1.0)])
    def test_spec_validation(self, kwargs):
        base = dict(n_antennas=4, rho=0.5, snr=1.0)
        base.update(kwargs)
        with pytest.raises(ParameterError):
            ChannelSpec(**base)


class TestDecompose:
    def test_identity_pair(self):
        spectrum = decompose(CovariancePair(np.eye(3), np.eye(3)))
        np.testing.assert_array_equal(spectrum.gamma, np.ones(3))
        np.testing.assert_array_equal(spectrum.u_basis, np.eye(3))

    def test_two_by_two_eigenvalues(self):
        pair = CovariancePair(build_exponential_covariance(2, 0.5), np.eye(2))
        spectrum = decompose(pair)
        np.testing.assert_allclose(spectrum.gamma, [1.5, 0.5], rtol=1e-14)

    def test_whitener_diagonalizes(self):
        # Matrix-product oracle: W c_h W^H must be diag(gamma) to 1e-9.
        pair = CovariancePair(build_exponential_covariance(8, 0.7), 0.5 * np.eye(8))
        s = decompose(pair)
        w = s.whitener
        np.testing.assert_allclose(w @ pair.c_z @ w.conj().T, np.eye(8), atol=1e-9)
        np.testing.assert_allclose(w @ pair.c_h @ w.conj().T, np.diag(s.gamma), atol=1e-9)
        assert np.all(np.diff(s.gamma) <= 0)

    def test_trace_conservation(self):
        pair = build_covariance_pair(ChannelSpec(16, 0.9, 3.0))
        s = decompose(pair)
        expected = np.trace(np.linalg.solve(pair.c_z, pair.c_h)).real
        assert abs(s.gamma.sum() - expected) <= 1e-10 * expected
        # White noise with sigma^2 = 1/alpha: sum(gamma) = alpha * N.
        assert abs(s.gamma.sum() - 3.0 * 16) <= 1e-10 * 48

    def test_deterministic(self):
        pair = build_covariance_pair(ChannelSpec(12, 0.6, 2.0))
        s1, s2 = decompose(pair), decompose(pair)
        assert np.array_equal(s1.gamma, s2.gamma)
        assert np.array_equal(s1.u_basis, s2.u_basis)
        assert np.array_equal(s1.whitener, s2.whitener)

    def test_sign_convention(self):
        pair = build_covariance_pair(ChannelSpec(6, 0.8, 1.0))
        u = decompose(pair).u_basis
        for j in range(6):
            first_nz = u[np.nonzero(np.abs(u[:, j]) > 1e-12)[0][0], j]
            assert first_nz.real > 0
            assert abs(np.imag(first_nz)) == 0

    def test_singular_noise_rejected(self):
        with pytest.raises((SingularityError, CovarianceError)):
            decompose(CovariancePair(np.eye(2), np.diag([1.0, 1e-15])))

    def test_complex_noise_covariance(self):
        rng = np.random.default_rng(6)
        b = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        pair = CovariancePair(build_exponential_covariance(5, 0.6), b @ b.conj().T + 5 * np.eye(5))
        s = decompose(pair)
        w = s.whitener
        assert np.max(np.abs(w @ pair.c_z @ w.conj().T - np.eye(5))) < 1e-9
        assert np.max(np.abs(w @ pair.c_h @ w.conj().T - np.diag(s.gamma))) < 1e-9
        for j in range(5):
            k = np.nonzero(np.abs(s.u_basis[:, j]) > 1e-12)[0][0]
            pivot = s.u_basis[k, j]
            assert abs(pivot.imag) < 1e-15 and pivot.real > 0


class TestSampling:
    def test_null_energy_unit_variance(self):
        s = Spectrum.from_gamma([3.0, 1.0])
        rng = derive_stream(0)
        draws = np.array([sample_whitened(s, 0.0, rng) for _ in range(200_000)])
        var = np.mean(np.abs(draws) ** 2, axis=0)
        np.testing.assert_allclose(var, [1.0, 1.0], atol=3 * 1.0 / np.sqrt(200_000))

    def test_conditional_variance(self):
        s = Spectrum.from_gamma([3.0, 1.0])
        rng = derive_stream(1)
        draws = np.array([sample_whitened(s, 2.0, rng) for _ in range(1_000_000)])
        var = np.mean(np.abs(draws) ** 2, axis=0)
        # Per-component |r|^2 is exponential with mean eps*gamma+1: se = mean/sqrt(K).
        np.testing.assert_allclose(var, [7.0, 3.0], atol=3 * 7.0 / np.sqrt(1_000_000))

    def test_circular_symmetry(self):
        s = Spectrum.from_gamma([2.0])
        rng = derive_stream(2)
        draws = np.array([sample_whitened(s, 1.0, rng)[0] for _ in range(100_000)])
        assert abs(np.mean(draws.real * draws.imag)) < 4 * 1.5 / np.sqrt(100_000)
        np.testing.assert_allclose(
            [np.var(draws.real), np.var(draws.imag)], [1.5, 1.5], rtol=0.05
        )

    def test_seed_determinism(self):
        s = Spectrum.from_gamma([1.0, 2.0, 0.5])
        a = sample_whitened(s, 1.5, derive_stream(42, 7))
        b = sample_whitened(s, 1.5, derive_stream(42, 7))
        assert np.array_equal(a, b)

    def test_negative_energy_rejected(self):
        with pytest.raises(ParameterError):
            sample_whitened(Spectrum.from_gamma([1.0]), -0.1, derive_stream(0))

    def test_physical_null_symbol_covariance(self):
        pair = build_covariance_pair(ChannelSpec(3, 0.6, 2.0))
        rng = derive_stream(3)
        ys = np.array([sample_physical(pair, 0.0, rng)[0] for _ in range(150_000)])
        emp = (ys[:, :, None] * ys[:, None, :].conj()).mean(axis=0)
        np.testing.assert_allclose(emp, pair.c_z, atol=4 * 1.0 / np.sqrt(150_000) * np.max(pair.c_z))

    def test_physical_determinism(self):
        pair = build_covariance_pair(ChannelSpec(4, 0.5, 1.0))
        y1, h1 = sample_physical(pair, 1.0 + 0j, derive_stream(9, 1))
        y2, h2 = sample_physical(pair, 1.0 + 0j, derive_stream(9, 1))
        assert np.array_equal(y1, y2) and h1 == h2


class TestRxSample:
    def test_validation(self):
        from quadet import RxSample

        sample = RxSample(r=np.array([1.0 + 1j, 0.5]), true_symbol_index=2, true_channel_norm=3.1)
        assert sample.true_symbol_index == 2
        with pytest.raises(ParameterError):
            RxSample(r=np.array([np.nan + 0j]), true_symbol_index=1, true_channel_norm=1.0)
        with pytest.raises(ParameterError):
            RxSample(r=np.array([1.0 + 0j]), true_symbol_index=0, true_channel_norm=1.0)


class TestWhiteningEquivalence:
    def test_moments_match_whitened_sampler(self):
        # W y and the direct whitened sampler must share first/second moments.
        pair = build_covariance_pair(ChannelSpec(6, 0.7, 2.0))
        spectrum = decompose(pair)
        x = np.sqrt(1.8)
        k = 120_000
        rng = derive_stream(4)
        r_phys = np.empty((k, 6), dtype=complex)
        for i in range(k):
            y, _ = sample_physical(pair, x, rng)
            r_phys[i] = whiten(spectrum, y)
        rng2 = derive_stream(5)
        r_dir = np.array([sample_whitened(spectrum, abs(x) ** 2, rng2) for _ in range(k)])
        target = abs(x) ** 2 * spectrum.gamma + 1.0
        se = target / np.sqrt(k)
        for r in (r_phys, r_dir):
            assert np.all(np.abs(np.mean(r, axis=0)) < 4 * np.sqrt(target / (2 * k)))
            np.testing.assert_array_less(np.abs(np.mean(np.abs(r) ** 2, axis=0) - target), 4 * se)
        # Cross-covariance of distinct components vanishes after whitening.
        cross = (r_phys[:, :, None] * r_phys[:, None, :].conj()).mean(axis=0)
        off = cross - np.diag(np.diag(cross))
        assert np.max(np.abs(off)) < 4 * np.max(target) / np.sqrt(k)
