"""Numerical diagnostics for the asymptotic behavior of the detection problem.

These routines quantify, for finite configurations, the effects that drive
the asymptotic results: the deflection of the pairwise log-likelihood ratio
(whose unbounded growth in N certifies vanishing pairwise errors), chi-squared
sandwich bounds on the pairwise error probability, error-floor levels at a
fixed high SNR, and the fourth-moment Lyapunov ratio that justifies the
Gaussian treatment of the quadratic statistics.

Everything is specialized to the whitened diagonal basis, where the ellipsoid
matrices are diagonal and eigenvalue extraction is trivial.  Bound constants
of the form ``|C|^{-1} w^N`` are evaluated in the log domain: at large N they
underflow long before the bound itself does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .channel import Spectrum, derive_stream
from .constellation import Constellation
from .errors import (
    DegenerateConfigurationError,
    DimensionError,
    IdentifiabilityError,
    ParameterError,
)
from .quadform import build_ed, build_hsnr, build_qmmse
from . import detect


@dataclass(frozen=True)
class PairwiseContext:
    """Variance ratios ``lambda_n = (eps_a gamma_n + 1) / (eps_b gamma_n + 1)`` of a hypothesis pair."""

    eps_a: float
    eps_b: float
    lambdas: np.ndarray

    def __post_init__(self) -> None:
        lam = np.asarray(self.lambdas, dtype=float)
        if np.any(lam <= 0):
            raise ParameterError("variance ratios must be positive")
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)


def pairwise_context(spectrum: Spectrum, eps_a: float, eps_b: float) -> PairwiseContext:
    if eps_a < 0 or eps_b < 0:
        raise ParameterError("energies must be nonnegative")
    gamma = spectrum.gamma
    lam = (eps_a * gamma + 1.0) / (eps_b * gamma + 1.0)
    return PairwiseContext(eps_a=float(eps_a), eps_b=float(eps_b), lambdas=lam)


def effective_rank(spectrum: Spectrum, rel_tol: float = 1e-12) -> int:
    """Number of spectral lines carrying signal (above ``rel_tol * max``).

    This is the count whose unbounded growth with the array size drives the
    vanishing of pairwise errors; no growth law is modeled, only the count.
    """
    gamma = spectrum.gamma
    if gamma[0] <= 0:
        return 0
    return int(np.count_nonzero(gamma > rel_tol * gamma[0]))


@dataclass(frozen=True)
class DeflectionResult:
    delta: float
    cantelli_bound: float


def deflection(ctx: PairwiseContext) -> DeflectionResult:
    """Squared-mean-to-variance ratio of the pairwise log-likelihood ratio.

    ``delta = (sum eta(lambda_n))^2 / sum (lambda_n - 1)^2`` with
    ``eta(x) = x - 1 - log(x)``, a nonnegative convex function that vanishes
    only at 1.  Also returns the one-sided concentration bound
    ``1 / (1 + delta)`` on the pairwise error probability.
    """
    lam = ctx.lambdas
    denom = float(np.sum((lam - 1.0) ** 2))
    if denom == 0.0:
        raise IdentifiabilityError(
            "hypotheses are indistinguishable (all variance ratios equal 1)"
        )
    eta = lam - 1.0 - np.log(lam)
    delta = float(np.sum(eta)) ** 2 / denom
    return DeflectionResult(delta=delta, cantelli_bound=1.0 / (1.0 + delta))


def pep_chisq_bounds(
    spectrum: Spectrum, eps_a: float, eps_b: float, n: int | None = None
) -> tuple[float, float]:
    """Chi-squared CDF sandwich on the pairwise error probability P(a -> b).

    The ML decision region boundary is an ellipsoid ``r^H K r = 1`` with
    ``K = (C_b^{-1} - C_a^{-1}) / log|C_a C_b^{-1}|``, diagonal here.  After
    mapping the region to a ball of equal volume, the Gaussian integrand is
    sandwiched between isotropic Gaussians built from the extreme eigenvalues
    of ``Omega = C_a K / |K|^{1/N}``, which integrate to chi-squared CDFs
    (inside the ball, when ``eps_a > eps_b``) or survival functions (outside,
    when ``eps_a < eps_b``, the null-symbol direction).
    """
    gamma = spectrum.gamma
    if n is not None and n != gamma.size:
        raise DimensionError(f"n={n} disagrees with the spectrum size {gamma.size}")
    if eps_a < 0 or eps_b < 0:
        raise ParameterError("energies must be nonnegative")
    if eps_a == eps_b:
        raise IdentifiabilityError("hypothesis energies coincide; the decision boundary is empty")
    n_dim = gamma.size
    ca = eps_a * gamma + 1.0
    cb = eps_b * gamma + 1.0
    log_ratio = float(np.sum(np.log(ca) - np.log(cb)))
    k_diag = (1.0 / cb - 1.0 / ca) / log_ratio
    if np.any(k_diag <= 0):
        raise IdentifiabilityError(
            "boundary ellipsoid matrix is not positive definite (rank-deficient spectrum)"
        )
    log_k = np.log(k_diag)
    log_radius = -float(np.mean(log_k))  # log |K|^{-1/N}
    log_omega = np.log(ca) + log_k + log_radius
    log_w_min = float(np.min(log_omega))
    log_w_max = float(np.max(log_omega))
    log_det_ca = float(np.sum(np.log(ca)))
    dof = 2 * n_dim

    def _bound(log_w: float) -> float:
        x = 2.0 * np.exp(log_radius - log_w)
        log_tail = chi2.logcdf(x, dof) if eps_a > eps_b else chi2.logsf(x, dof)
        return float(np.exp(-log_det_ca + n_dim * log_w + log_tail))

    return _bound(log_w_min), _bound(log_w_max)


def simulate_pep(
    spectrum: Spectrum,
    eps_a: float,
    eps_b: float,
    trials: int,
    seed: int,
    block: int = 65536,
) -> tuple[float, float]:
    """Monte Carlo pairwise error probability P(LLR(a, b) <= 0 | a sent).

    Components of the whitened vector are independent, so each ``|r_n|^2``
    is an exponential variate scaled by its conditional variance.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    gamma = spectrum.gamma
    ca = eps_a * gamma + 1.0
    cb = eps_b * gamma + 1.0
    weights = 1.0 / cb - 1.0 / ca
    offset = float(np.sum(np.log(cb) - np.log(ca)))  # log |C_b| / |C_a|
    hits = 0
    done = 0
    idx = 0
    while done < trials:
        size = min(block, trials - done)
        rng = derive_stream(seed, idx)
        sq = ca * rng.standard_exponential((size, gamma.size))
        llr = sq @ weights + offset
        hits += int(np.count_nonzero(llr <= 0))
        done += size
        idx += 1
    pep = hits / trials
    stderr = float(np.sqrt(pep * (1.0 - pep) / trials))
    return pep, stderr


def rescale_to_snr(spectrum: Spectrum, snr_linear: float) -> Spectrum:
    """Scale the spectrum so its implied average SNR matches the target.

    Assumes the white-noise convention ``sum(gamma) = N * snr`` under which
    SNR scaling acts linearly on the spectrum.
    """
    if snr_linear <= 0:
        raise ParameterError("snr must be positive")
    gamma = spectrum.gamma
    total = float(gamma.sum())
    if total <= 0:
        raise ParameterError("cannot rescale an identically zero spectrum")
    return Spectrum.from_gamma(gamma * (snr_linear * gamma.size / total))


def floor_estimate(
    detector: str,
    spectrum: Spectrum,
    constellation: Constellation,
    snr_db: float = 30.0,
    trials: int = 100_000,
    seed: int = 0,
) -> float:
    """Error-floor proxy: the SER evaluated at a fixed high SNR.

    Quadratic detectors use the analytic Q-function approximation; ML has no
    tractable expression and falls back to Monte Carlo with the given trial
    budget.
    """
    scaled = rescale_to_snr(spectrum, 10.0 ** (snr_db / 10.0))
    if detector == "ml":
        return _ml_ser(scaled, constellation, trials, seed)
    if detector == "ed":
        est = build_ed(scaled)
    elif detector == "hsnr":
        est = build_hsnr(scaled)
    elif detector == "qmmse":
        est = build_qmmse(scaled, constellation.energy_variance)
    elif detector == "bque":
        return detect.analytic_ser_genie(scaled, constellation)[0]
    else:
        raise ParameterError(f"unknown detector {detector!r}")
    taus = detect.compute_thresholds(est, scaled, constellation)
    return detect.analytic_ser(est, scaled, constellation, taus)[0]


def _ml_ser(spectrum: Spectrum, constellation: Constellation, trials: int, seed: int) -> float:
    gamma = spectrum.gamma
    eps = constellation.energies
    cov = eps[:, None] * gamma[None, :] + 1.0
    inv_cov = (1.0 / cov).T
    log_det = np.sum(np.log(cov), axis=1)
    errors = 0
    done = 0
    idx = 0
    block = max(1024, (1 << 21) // gamma.size)
    while done < trials:
        size = min(block, trials - done)
        rng = derive_stream(seed, idx)
        sym = rng.integers(0, constellation.m, size)
        sq = cov[sym] * rng.standard_exponential((size, gamma.size))
        metrics = sq @ inv_cov + log_det[None, :]
        dec = np.argmin(metrics, axis=1)
        errors += int(np.count_nonzero(dec != sym))
        done += size
        idx += 1
    return errors / trials


def lyapunov_ratio(a_diag, gamma, eps: float, delta: int = 4) -> float:
    """Fourth-moment Lyapunov ratio ``sum 9 a^4 c^4 / (sum a^2 c^2)^2`` with ``c = eps*gamma + 1``.

    Only the fourth-order condition is implemented (the exponential summands
    have ``E[w^4] = 9 sigma^4``); it collapses to exactly ``9/N`` in the
    uniform case and must shrink with N for the Gaussian limit to hold.
    """
    if delta != 4:
        raise ParameterError("only the fourth-moment condition (delta=4) is supported")
    a = np.asarray(a_diag, dtype=float)
    g = np.asarray(gamma, dtype=float)
    if a.shape != g.shape or a.ndim != 1:
        raise DimensionError(f"coefficient/spectrum shape mismatch: {a.shape} vs {g.shape}")
    cov = eps * g + 1.0
    if np.any(cov <= 0):
        raise ParameterError("conditional variances must be positive")
    t = (a * cov) ** 2
    # Exactly rounded sums, then ratio first: the common scale cancels
    # exactly in the uniform case, collapsing the bound to 9/N.
    s2 = math.fsum(t)
    if s2 == 0.0:
        raise DegenerateConfigurationError("estimator has zero conditional variance")
    return 9.0 * (math.fsum(t * t) / (s2 * s2))
