"""Quadratic energy estimators and their moment calculus.

All estimators share the form ``eps_hat(r) = sum_n a_n |r_n|^2 + c`` in the
whitened basis, where every optimal solution is diagonal.  The four builders
differ only in how ``a`` weights the spectrum:

* energy detector (ED): uniform weights, ignores the spectrum shape;
* high-SNR (HSNR): inverse-spectrum weights;
* BQUE: minimum conditional variance among conditionally unbiased
  quadratic estimators, attains the CRB but needs the true energy
  (genie parameter);
* QMMSE: Bayesian minimum average MSE under the constellation's
  energy prior.

Unbiased kinds fix the affine term to ``c = 1 - sum_n a_n (gamma_n + 1)``,
which makes the conditional mean equal the true energy.

Minimizing the error variance is also the information-theoretic design rule:
it maximizes a Gaussian lower bound on the information the scalar statistic
keeps about the transmitted symbol.  The bound itself is rationale, not a
computed quantity (the symbol prior is discrete).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Spectrum
from .errors import DimensionError, ParameterError, SingularityError

# Relative threshold below which a spectral line counts as zero for the
# inverse-spectrum weighting.
SINGULAR_TOL = 1e-12

UNBIASED_KINDS = ("ed", "hsnr", "bque")


@dataclass(frozen=True)
class QuadraticEstimator:
    """Diagonal quadratic form plus affine term, tagged with its provenance."""

    a_diag: np.ndarray
    c_affine: float
    kind: str
    eps_assumed: float | None = None
    sigma_eps_sq: float | None = None
    mse_avg: float | None = None

    def __post_init__(self) -> None:
        a = np.asarray(self.a_diag, dtype=float)
        if not np.all(np.isfinite(a)):
            raise ParameterError("quadratic coefficients must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "a_diag", a)

    @property
    def n(self) -> int:
        return self.a_diag.size


@dataclass(frozen=True)
class EstimatorStats:
    """Conditional moments of an estimator at one true energy."""

    cond_mean: float
    cond_var: float
    bias: float
    mse_avg: float | None = None


def quadform_moments(a_diag, c: float, cov_diag) -> tuple[float, float, float]:
    """Mean, variance and second moment of ``z^H diag(a) z + c``.

    ``z`` is circularly-symmetric complex Gaussian with independent
    components of variance ``cov_diag``; then the mean is ``a . cov + c``
    and the variance is ``sum a_n^2 cov_n^2``.
    """
    a = np.asarray(a_diag, dtype=float)
    cov = np.asarray(cov_diag, dtype=float)
    if a.shape != cov.shape or a.ndim != 1:
        raise DimensionError(f"coefficient/covariance shape mismatch: {a.shape} vs {cov.shape}")
    if np.any(cov <= 0):
        raise ParameterError("covariance entries must be positive")
    mean = float(a @ cov + c)
    variance = float(np.sum((a * cov) ** 2))
    return mean, variance, variance + mean * mean


def _unbiased_affine(a: np.ndarray, gamma: np.ndarray) -> float:
    return float(1.0 - a @ (gamma + 1.0))


def _check_unbiased(a: np.ndarray, gamma: np.ndarray, kind: str) -> None:
    dev = abs(float(a @ gamma) - 1.0)
    if dev > 1e-12:
        raise SingularityError(f"{kind} weights violate the unbiasedness constraint (dev={dev:.3e})")


def build_ed(spectrum: Spectrum) -> QuadraticEstimator:
    """Energy detector: uniform weights ``1 / sum(gamma)``."""
    gamma = spectrum.gamma
    total = float(gamma.sum())
    if total <= 0:
        raise SingularityError("spectrum sums to zero; energy carries no signal")
    a = np.full(gamma.size, 1.0 / total)
    est = QuadraticEstimator(a_diag=a, c_affine=_unbiased_affine(a, gamma), kind="ed")
    _check_unbiased(a, gamma, "ed")
    return est


def build_hsnr(spectrum: Spectrum) -> QuadraticEstimator:
    """High-SNR weights ``1 / (N * gamma_n)``; needs a fully nonzero spectrum."""
    gamma = spectrum.gamma
    if gamma[-1] <= SINGULAR_TOL * gamma[0]:
        raise SingularityError("spectrum has (near-)zero lines; inverse weighting is singular")
    a = 1.0 / (gamma.size * gamma)
    est = QuadraticEstimator(a_diag=a, c_affine=_unbiased_affine(a, gamma), kind="hsnr")
    _check_unbiased(a, gamma, "hsnr")
    return est


def build_bque(spectrum: Spectrum, eps_assumed: float) -> QuadraticEstimator:
    """Minimum-variance conditionally unbiased weights for a known energy.

    ``a_n = [gamma_n / (eps gamma_n + 1)^2] / sum_k [gamma_k / (eps gamma_k + 1)]^2``.
    The assumed energy is recorded: the estimator is only realizable through
    the decision-directed scheme in the detection layer.
    """
    if eps_assumed < 0:
        raise ParameterError(f"assumed energy must be nonnegative, got {eps_assumed}")
    gamma = spectrum.gamma
    if not np.any(gamma > 0):
        raise SingularityError("spectrum is identically zero")
    cov = eps_assumed * gamma + 1.0
    fisher = float(np.sum((gamma / cov) ** 2))
    a = (gamma / cov**2) / fisher
    est = QuadraticEstimator(
        a_diag=a,
        c_affine=_unbiased_affine(a, gamma),
        kind="bque",
        eps_assumed=float(eps_assumed),
    )
    _check_unbiased(a, gamma, "bque")
    return est


def build_qmmse(spectrum: Spectrum, sigma_eps_sq: float) -> QuadraticEstimator:
    """Bayesian quadratic MMSE weights for a prior energy variance.

    With ``ring_n^2 = (s+1) gamma_n^2 + 2 gamma_n + 1`` (s the prior
    variance), the weights are ``s gamma_n / ring_n^2`` normalized by
    ``1 + s sum_k gamma_k^2 / ring_k^2``; the same normalization gives the
    average MSE the estimator attains, exposed as ``mse_avg``.  The result
    is biased toward the prior mean; the affine term still follows the
    ``1 - a . (gamma + 1)`` convention so all detectors share one
    threshold recipe.
    """
    if sigma_eps_sq <= 0:
        raise ParameterError(f"prior energy variance must be positive, got {sigma_eps_sq}")
    gamma = spectrum.gamma
    ring_sq = (sigma_eps_sq + 1.0) * gamma**2 + 2.0 * gamma + 1.0
    denom = 1.0 + sigma_eps_sq * float(np.sum(gamma**2 / ring_sq))
    a = (sigma_eps_sq * gamma / ring_sq) / denom
    return QuadraticEstimator(
        a_diag=a,
        c_affine=_unbiased_affine(a, gamma),
        kind="qmmse",
        sigma_eps_sq=float(sigma_eps_sq),
        mse_avg=float(sigma_eps_sq / denom),
    )


def estimate(est: QuadraticEstimator, r: np.ndarray):
    """Evaluate ``sum a_n |r_n|^2 + c`` on one vector or a stack of vectors."""
    r = np.asarray(r)
    if r.shape[-1] != est.n:
        raise DimensionError(f"expected trailing dimension {est.n}, got shape {r.shape}")
    sq = r.real**2 + r.imag**2 if np.iscomplexobj(r) else r**2
    out = sq @ est.a_diag + est.c_affine
    return float(out) if np.ndim(out) == 0 else out


def crb(spectrum: Spectrum, eps: float) -> float:
    """Estimation-variance lower bound ``1 / sum_n [gamma_n / (eps gamma_n + 1)]^2``."""
    if eps < 0:
        raise ParameterError(f"energy must be nonnegative, got {eps}")
    gamma = spectrum.gamma
    if not np.any(gamma > 0):
        raise SingularityError("spectrum is identically zero; energy is not estimable")
    fisher = float(np.sum((gamma / (eps * gamma + 1.0)) ** 2))
    return 1.0 / fisher


def cond_stats(est: QuadraticEstimator, spectrum: Spectrum, eps: float) -> EstimatorStats:
    """Conditional mean/variance of the estimator at a true energy.

    Uses the shared affine convention, under which the conditional mean is
    ``1 - (1 - eps) * (a . gamma)``; unbiased kinds therefore return
    ``cond_mean == eps`` and zero bias.
    """
    gamma = spectrum.gamma
    if est.n != gamma.size:
        raise DimensionError(f"estimator has {est.n} taps, spectrum has {gamma.size}")
    a = est.a_diag
    trace_ag = float(a @ gamma)
    cond_mean = 1.0 - (1.0 - eps) * trace_ag
    cond_var = float(np.sum((a * (eps * gamma + 1.0)) ** 2))
    return EstimatorStats(
        cond_mean=cond_mean,
        cond_var=cond_var,
        bias=cond_mean - eps,
        mse_avg=est.mse_avg,
    )
