"""Second-order channel model: covariances, whitening, and signal sampling.

The receiver knows the channel and noise only through their covariance
matrices (statistical CSI).  Everything downstream consumes the whitened
representation, in which the covariance of the received vector conditioned
on a transmitted energy ``eps`` is diagonal with entries ``eps * gamma + 1``.
Simulation therefore runs in the whitened domain at O(N) per sample; the
physical-domain sampler exists for cross-validation only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CovarianceError, ParameterError, SingularityError

# Relative eigenvalue threshold below which a matrix is treated as rank
# deficient.
RANK_TOL = 1e-12


def derive_stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 stream keyed by ``(master_seed, *key)``.

    Workers must never share a generator; deriving one stream per block or
    channel keeps results independent of thread scheduling.
    """
    return np.random.default_rng([int(master_seed), *(int(k) for k in key)])


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelSpec:
    """Statistical description of one SIMO link.

    ``rho`` is the exponential correlation coefficient of the channel
    covariance; ``rho = 1`` would collapse it to rank one and is rejected.
    ``snr`` is the average receive SNR in linear scale.  ``noise_cov=None``
    selects white noise scaled to the requested SNR; a custom matrix is
    rescaled so the trace ratio matches ``snr`` exactly.
    """

    n_antennas: int
    rho: float
    snr: float
    noise_cov: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.n_antennas < 1:
            raise ParameterError(f"n_antennas must be >= 1, got {self.n_antennas}")
        if not 0.0 <= self.rho < 1.0:
            raise ParameterError(
                f"rho must lie in [0, 1), got {self.rho}: rho = 1 makes the "
                "channel covariance rank deficient (full rank is required)"
            )
        if not self.snr > 0.0:
            raise ParameterError(f"snr must be positive, got {self.snr}")


@dataclass(frozen=True)
class CovariancePair:
    """Channel covariance ``c_h`` (Hermitian PSD) and noise covariance ``c_z`` (Hermitian PD)."""

    c_h: np.ndarray
    c_z: np.ndarray

    def __post_init__(self) -> None:
        c_h = np.asarray(self.c_h)
        c_z = np.asarray(self.c_z)
        if c_h.ndim != 2 or c_h.shape[0] != c_h.shape[1] or c_h.shape != c_z.shape:
            raise CovarianceError(f"expected matching square matrices, got {c_h.shape} and {c_z.shape}")
        for name, mat in (("c_h", c_h), ("c_z", c_z)):
            scale = float(np.max(np.abs(mat))) or 1.0
            if np.max(np.abs(mat - mat.conj().T)) > 1e-12 * scale:
                raise CovarianceError(f"{name} is not Hermitian to machine tolerance")
        eig_z = np.linalg.eigvalsh(c_z)
        if eig_z[0] <= RANK_TOL * eig_z[-1]:
            raise CovarianceError("c_z is not positive definite")
        object.__setattr__(self, "c_h", _freeze(c_h))
        object.__setattr__(self, "c_z", _freeze(c_z))

    @property
    def n(self) -> int:
        return self.c_h.shape[0]


@dataclass(frozen=True)
class Spectrum:
    """Whitened-domain description of a covariance pair.

    ``gamma`` holds the eigenvalues of ``c_z^{-1/2} c_h c_z^{-1/2}`` in
    descending order, ``u_basis`` the corresponding eigenbasis, and
    ``whitener`` the transform ``W = u_basis^H c_z^{-1/2}`` that maps a
    physical vector onto independent components.
    """

    gamma: np.ndarray
    u_basis: np.ndarray
    whitener: np.ndarray

    def __post_init__(self) -> None:
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim != 1 or gamma.size == 0:
            raise ParameterError("gamma must be a nonempty vector")
        if np.any(gamma < 0) or not np.all(np.isfinite(gamma)):
            raise ParameterError("gamma entries must be finite and nonnegative")
        if np.any(np.diff(gamma) > 0):
            raise ParameterError("gamma must be sorted in descending order")
        object.__setattr__(self, "gamma", _freeze(gamma))
        object.__setattr__(self, "u_basis", _freeze(np.asarray(self.u_basis)))
        object.__setattr__(self, "whitener", _freeze(np.asarray(self.whitener)))

    @property
    def n(self) -> int:
        return self.gamma.size

    @classmethod
    def from_gamma(cls, gamma: np.ndarray) -> "Spectrum":
        """Synthetic spectrum with identity basis and whitener.

        Equivalent to a pair with ``c_h = diag(gamma)`` and ``c_z = I``;
        handy for estimator-level math that only needs the eigenvalues.
        """
        gamma = np.sort(np.asarray(gamma, dtype=float))[::-1]
        n = gamma.size
        return cls(gamma=gamma, u_basis=np.eye(n), whitener=np.eye(n))


@dataclass(frozen=True)
class RxSample:
    """One whitened received vector together with the ground truth that produced it."""

    r: np.ndarray
    true_symbol_index: int
    true_channel_norm: float

    def __post_init__(self) -> None:
        r = np.asarray(self.r)
        if not np.all(np.isfinite(r.view(float))):
            raise ParameterError("received vector must be finite")
        if self.true_symbol_index < 1:
            raise ParameterError("symbol indices are 1-based")
        object.__setattr__(self, "r", _freeze(r))


def build_exponential_covariance(n: int, rho: float) -> np.ndarray:
    """Unit-diagonal exponential correlation matrix, entry (k, l) = rho^(l-k) for k <= l."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not 0.0 <= rho < 1.0:
        raise ParameterError(f"rho must lie in [0, 1), got {rho}")
    idx = np.arange(n)
    # Real rho only, so the conjugate-symmetric matrix is symmetric Toeplitz.
    return np.power(float(rho), np.abs(idx[:, None] - idx[None, :]), dtype=float)


def build_covariance_pair(spec: ChannelSpec) -> CovariancePair:
    """Materialize (c_h, c_z) for a channel spec.

    White noise is scaled as ``sigma^2 = trace(c_h) / (N * snr)`` so that
    ``trace(c_h) / trace(c_z) == snr``; a custom noise matrix is validated
    and rescaled to satisfy the same trace ratio.
    """
    c_h = build_exponential_covariance(spec.n_antennas, spec.rho)
    if spec.noise_cov is None:
        sigma2 = np.trace(c_h).real / (spec.n_antennas * spec.snr)
        c_z = sigma2 * np.eye(spec.n_antennas)
    else:
        c_z = np.array(spec.noise_cov, dtype=complex if np.iscomplexobj(spec.noise_cov) else float)
        if c_z.shape != c_h.shape:
            raise CovarianceError(f"noise covariance must be {c_h.shape}, got {c_z.shape}")
        scale = float(np.max(np.abs(c_z))) or 1.0
        if np.max(np.abs(c_z - c_z.conj().T)) > 1e-12 * scale:
            raise CovarianceError("custom noise covariance is not Hermitian")
        eig = np.linalg.eigvalsh(c_z)
        if eig[0] <= RANK_TOL * eig[-1]:
            raise CovarianceError("custom noise covariance is not positive definite")
        c_z = c_z * (np.trace(c_h).real / (spec.snr * np.trace(c_z).real))
    return CovariancePair(c_h=c_h, c_z=c_z)


def _fix_eigvec_signs(u: np.ndarray) -> np.ndarray:
    """Rotate each column so its first nonzero component is real positive."""
    u = u.copy()
    absu = np.abs(u)
    col_max = absu.max(axis=0)
    for j in range(u.shape[1]):
        nz = np.nonzero(absu[:, j] > 1e-12 * col_max[j])[0]
        k = nz[0] if nz.size else 0
        pivot = u[k, j]
        if pivot != 0:
            u[:, j] = u[:, j] * (np.conj(pivot) / abs(pivot))
    if not np.iscomplexobj(u):
        return u
    # Drop an all-zero imaginary part so real inputs keep real output.
    if np.max(np.abs(u.imag)) == 0.0:
        return u.real
    return u


def decompose(pair: CovariancePair) -> Spectrum:
    """Eigendecompose ``c_z^{-1/2} c_h c_z^{-1/2}`` and build the whitener.

    Output is deterministic for identical input: eigenvalues sorted in
    descending order, each eigenvector scaled so its first nonzero
    component is real positive.
    """
    eig_z, vec_z = np.linalg.eigh(pair.c_z)
    if eig_z[0] <= RANK_TOL * eig_z[-1]:
        raise SingularityError("noise covariance is rank deficient; cannot whiten")
    inv_sqrt_z = (vec_z / np.sqrt(eig_z)) @ vec_z.conj().T
    m = inv_sqrt_z @ pair.c_h @ inv_sqrt_z
    m = 0.5 * (m + m.conj().T)
    eigvals, eigvecs = np.linalg.eigh(m)
    # Stable descending order keeps tied eigenvectors in eigh's output order.
    order = np.argsort(-eigvals, kind="stable")
    gamma = eigvals[order]
    u = _fix_eigvec_signs(eigvecs[:, order])
    # eigh on a PSD matrix can return tiny negative values; clip them.
    tiny = 1e-12 * max(gamma[0], 1.0)
    if gamma[-1] < -tiny:
        raise SingularityError("effective spectrum has a significantly negative eigenvalue")
    gamma = np.maximum(gamma, 0.0)
    whitener = u.conj().T @ inv_sqrt_z

    trace_ref = np.trace(np.linalg.solve(pair.c_z, pair.c_h)).real
    if abs(gamma.sum() - trace_ref) > 1e-10 * max(abs(trace_ref), 1.0):
        raise CovarianceError("spectrum does not conserve trace(c_z^-1 c_h)")
    n = pair.n
    if np.max(np.abs(u.conj().T @ u - np.eye(n))) > 1e-10:
        raise CovarianceError("eigenbasis is not unitary to tolerance")
    if np.max(np.abs(whitener @ pair.c_z @ whitener.conj().T - np.eye(n))) > 1e-9:
        raise CovarianceError("whitener does not whiten the noise covariance")
    if np.max(np.abs(whitener @ pair.c_h @ whitener.conj().T - np.diag(gamma))) > 1e-9 * max(gamma[0], 1.0):
        raise CovarianceError("whitener does not diagonalize the channel covariance")
    return Spectrum(gamma=gamma, u_basis=u, whitener=whitener)


def sample_whitened(spectrum: Spectrum, energy: float, rng: np.random.Generator) -> np.ndarray:
    """Draw one whitened received vector for a transmitted energy.

    Components are independent circularly-symmetric complex Gaussians with
    per-component variance ``energy * gamma_n + 1``.  The real parts of the
    standard Gaussian seed are drawn first, then the imaginary parts, so
    the output is reproducible for a fixed generator state.
    """
    if energy < 0:
        raise ParameterError(f"energy must be nonnegative, got {energy}")
    n = spectrum.n
    g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return np.sqrt(0.5 * (energy * spectrum.gamma + 1.0)) * g


def sample_physical(
    pair: CovariancePair, symbol: complex, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Draw ``y = h * symbol + z`` in the physical domain.

    ``h`` and ``z`` are generated through the Cholesky factors of their
    covariances (real seeds first, imaginary second, channel before noise).
    Returns the received vector and ``||h||^2`` for outage conditioning.
    """
    n = pair.n
    chol_h = np.linalg.cholesky(pair.c_h)
    chol_z = np.linalg.cholesky(pair.c_z)
    g_h = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(0.5)
    g_z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(0.5)
    h = chol_h @ g_h
    z = chol_z @ g_z
    y = h * symbol + z
    return y, float(np.real(np.vdot(h, h)))


def whiten(spectrum: Spectrum, y: np.ndarray) -> np.ndarray:
    """Map a physical received vector into the whitened domain."""
    y = np.asarray(y)
    if y.shape[-1] != spectrum.n:
        raise ParameterError(f"expected a length-{spectrum.n} vector, got shape {y.shape}")
    return y @ spectrum.whitener.T if y.ndim > 1 else spectrum.whitener @ y
