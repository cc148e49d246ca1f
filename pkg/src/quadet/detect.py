"""Symbol decision layer: ML detection, Gaussian thresholds, and error analysis.

Quadratic detectors decide in two stages: estimate the transmitted energy
with a diagonal quadratic form, then place the estimate among fixed
thresholds on the real line.  For a large array the estimate conditioned on
a symbol is approximately Gaussian with mean ``1 - (1 - eps_i) * tr(A Gamma)``
and variance ``sum_n a_n^2 (eps_i gamma_n + 1)^2``, so the error-minimizing
thresholds are intersections of adjacent Gaussian likelihoods and the
residual error is a sum of Q-function tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .channel import Spectrum
from .constellation import Constellation, check_identifiable
from .errors import (
    DegenerateConfigurationError,
    DimensionError,
    GeometryError,
    IdentifiabilityError,
    ParameterError,
)
from .quadform import QuadraticEstimator, build_bque, build_ed, estimate

# Relative size below which the quadratic coefficient of the intersection
# polynomial is treated as zero (equal-variance case).
QUAD_TOL = 1e-14

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ThresholdSet:
    """Ascending decision boundaries tagged with the estimator that produced them."""

    taus: np.ndarray
    estimator_kind: str

    def __post_init__(self) -> None:
        taus = np.asarray(self.taus, dtype=float)
        if taus.ndim != 1:
            raise ParameterError("thresholds must form a 1-D vector")
        if np.any(np.diff(taus) <= 0):
            raise DegenerateConfigurationError(f"thresholds must be strictly ascending, got {taus}")
        taus.setflags(write=False)
        object.__setattr__(self, "taus", taus)


@dataclass(frozen=True)
class Decision:
    """1-based symbol decision and the statistic that produced it."""

    symbol_index: int
    statistic: float


def q_function(x):
    """Upper tail of the standard normal, ``0.5 * erfc(x / sqrt(2))``.

    Stays nonzero (subnormal) out to arguments around 38, which the error
    analysis needs at high SNR; the vectorized erfc flushes to zero earlier
    than the libm one, so that band is patched elementwise.
    """
    arr = np.asarray(x, dtype=float)
    out = 0.5 * special.erfc(arr / _SQRT2)
    flushed = (out == 0.0) & (arr < 39.0) & np.isfinite(arr)
    if np.any(flushed):
        out = np.atleast_1d(out)
        xs = np.atleast_1d(arr)
        mask = np.atleast_1d(flushed)
        out[mask] = [0.5 * math.erfc(v / _SQRT2) for v in xs[mask]]
        out = out.reshape(arr.shape) if arr.shape else out[0]
    return float(out) if np.ndim(out) == 0 else out


def normal_intersection(mu1: float, mu2: float, var1: float, var2: float) -> float:
    """Crossing point of two Gaussian densities, the larger root when two exist.

    Solves ``a t^2 + b t + c = 0`` with ``a = 1/var2 - 1/var1``,
    ``b = 2 (mu1/var1 - mu2/var2)`` and
    ``c = mu2^2/var2 - mu1^2/var1 + log(var2/var1)``.  Equal variances
    collapse the polynomial to its linear part, giving the midpoint.
    """
    if var1 <= 0 or var2 <= 0:
        raise ParameterError("variances must be positive")
    if not mu1 < mu2:
        raise ParameterError(f"means must be ordered mu1 < mu2, got {mu1} >= {mu2}")
    a = 1.0 / var2 - 1.0 / var1
    b = 2.0 * (mu1 / var1 - mu2 / var2)
    c = mu2 * mu2 / var2 - mu1 * mu1 / var1 + math.log(var2 / var1)
    if abs(a) < QUAD_TOL * max(1.0 / var1, 1.0 / var2):
        return -c / b
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise GeometryError("likelihoods do not intersect (negative discriminant)")
    sqrt_disc = math.sqrt(disc)
    # Numerically stable root pair.
    q = -0.5 * (b + math.copysign(sqrt_disc, b)) if b != 0 else 0.5 * sqrt_disc
    roots = (q / a, c / q) if q != 0 else (0.0, 0.0)
    return max(roots)


def _clt_params(
    est: QuadraticEstimator, spectrum: Spectrum, constellation: Constellation
) -> tuple[np.ndarray, np.ndarray]:
    """Per-symbol Gaussian (means, variances) of the estimator output."""
    gamma = spectrum.gamma
    if est.n != gamma.size:
        raise DimensionError(f"estimator has {est.n} taps, spectrum has {gamma.size}")
    eps = constellation.energies
    trace_ag = float(est.a_diag @ gamma)
    mus = 1.0 - (1.0 - eps) * trace_ag
    variances = np.array(
        [float(np.sum((est.a_diag * (e * gamma + 1.0)) ** 2)) for e in eps]
    )
    return mus, variances


def compute_thresholds(
    est: QuadraticEstimator, spectrum: Spectrum, constellation: Constellation
) -> ThresholdSet:
    """Decision boundaries between the Gaussian likelihoods of adjacent symbols."""
    if not check_identifiable(constellation):
        raise IdentifiabilityError("constellation has coincident energy levels; no thresholds exist")
    mus, variances = _clt_params(est, spectrum, constellation)
    taus = [
        normal_intersection(mus[i], mus[i + 1], variances[i], variances[i + 1])
        for i in range(constellation.m - 1)
    ]
    taus = np.asarray(taus)
    if np.any(np.diff(taus) <= 0):
        raise DegenerateConfigurationError(
            f"intersection thresholds are not ascending: {taus}; "
            "the Gaussian approximation is degenerate for this configuration"
        )
    return ThresholdSet(taus=taus, estimator_kind=est.kind)


def place_estimate(taus: np.ndarray, value) -> np.ndarray | int:
    """Map estimates to 1-based symbol indices; boundary ties go to the lower index."""
    idx = np.searchsorted(taus, value, side="left") + 1
    return int(idx) if np.ndim(idx) == 0 else idx


def classify(est: QuadraticEstimator, thresholds: ThresholdSet, r: np.ndarray) -> Decision:
    """Estimate the energy of one received vector and place it among the thresholds."""
    value = estimate(est, r)
    return Decision(symbol_index=place_estimate(thresholds.taus, value), statistic=value)


def ml_detect(spectrum: Spectrum, constellation: Constellation, r: np.ndarray) -> Decision:
    """Exact one-shot ML decision in the whitened domain.

    Minimizes ``sum_n |r_n|^2 / (eps_i gamma_n + 1) + log(eps_i gamma_n + 1)``
    over the constellation; ties resolve to the lower-energy symbol.
    """
    r = np.asarray(r)
    if r.shape != (spectrum.n,):
        raise DimensionError(f"expected a length-{spectrum.n} vector, got shape {r.shape}")
    sq = r.real**2 + r.imag**2 if np.iscomplexobj(r) else r**2
    cov = constellation.energies[:, None] * spectrum.gamma[None, :] + 1.0
    metrics = np.sum(sq[None, :] / cov + np.log(cov), axis=1)
    i = int(np.argmin(metrics))
    return Decision(symbol_index=i + 1, statistic=float(metrics[i]))


def ml_detect_isotropic(
    spectrum: Spectrum, constellation: Constellation, r: np.ndarray
) -> Decision:
    """ML fast path for an isotropic spectrum, driven by ||r||^2 alone."""
    gamma = spectrum.gamma
    if gamma[0] - gamma[-1] > 1e-9 * max(gamma[0], 1.0):
        raise ParameterError("spectrum is not isotropic; use ml_detect instead")
    r = np.asarray(r)
    if r.shape != (spectrum.n,):
        raise DimensionError(f"expected a length-{spectrum.n} vector, got shape {r.shape}")
    alpha = float(gamma.mean())
    sq_norm = float(np.sum(r.real**2 + r.imag**2)) if np.iscomplexobj(r) else float(np.sum(r**2))
    cov = constellation.energies * alpha + 1.0
    metrics = sq_norm / cov + spectrum.n * np.log(cov)
    i = int(np.argmin(metrics))
    return Decision(symbol_index=i + 1, statistic=float(metrics[i]))


def build_bque_bank(
    spectrum: Spectrum, constellation: Constellation
) -> list[tuple[QuadraticEstimator, ThresholdSet]]:
    """Per-symbol genie estimators with their own thresholds, computed once."""
    bank = []
    for eps in constellation.energies:
        est = build_bque(spectrum, float(eps))
        bank.append((est, compute_thresholds(est, spectrum, constellation)))
    return bank


def abque_detect(
    spectrum: Spectrum,
    constellation: Constellation,
    ed_thresholds: ThresholdSet,
    bque_bank: list[tuple[QuadraticEstimator, ThresholdSet]],
    r: np.ndarray,
) -> Decision:
    """Two-stage decision: an energy-detector pass selects the genie estimator to apply."""
    if len(bque_bank) != constellation.m:
        raise DimensionError(f"bank must hold {constellation.m} estimators, got {len(bque_bank)}")
    first = classify(build_ed(spectrum), ed_thresholds, r)
    est, taus = bque_bank[first.symbol_index - 1]
    return classify(est, taus, r)


def gaussian_threshold_ser(
    mus: np.ndarray, sigmas: np.ndarray, taus: np.ndarray
) -> tuple[float, np.ndarray]:
    """Error probability of Gaussian likelihoods split by ascending thresholds.

    Returns the prior-averaged total and the per-symbol conditional error
    probabilities (lower tail below the left boundary plus upper tail above
    the right one).
    """
    mus = np.asarray(mus, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    taus = np.asarray(taus, dtype=float)
    m = mus.size
    if sigmas.size != m or taus.size != m - 1:
        raise DimensionError("need one mean/sigma per symbol and one threshold per adjacent pair")
    per_symbol = np.zeros(m)
    per_symbol[1:] += q_function((mus[1:] - taus) / sigmas[1:])
    per_symbol[:-1] += q_function((taus - mus[:-1]) / sigmas[:-1])
    return float(per_symbol.mean()), per_symbol


def analytic_ser(
    est: QuadraticEstimator,
    spectrum: Spectrum,
    constellation: Constellation,
    thresholds: ThresholdSet,
) -> tuple[float, np.ndarray]:
    """Q-function approximation of the symbol error rate for one detector.

    The thresholds may come from a different estimator; the Gaussian
    parameters always belong to ``est``, which is what makes cross-detector
    floor comparisons possible.
    """
    mus, variances = _clt_params(est, spectrum, constellation)
    return gaussian_threshold_ser(mus, np.sqrt(variances), thresholds.taus)


def analytic_ser_genie(
    spectrum: Spectrum,
    constellation: Constellation,
    bque_bank: list[tuple[QuadraticEstimator, ThresholdSet]] | None = None,
) -> tuple[float, np.ndarray]:
    """Error approximation for the genie-aided scheme.

    Each transmitted symbol is scored with its own estimator and threshold
    set, so the per-symbol terms are drawn from different Gaussian families.
    """
    if bque_bank is None:
        bque_bank = build_bque_bank(spectrum, constellation)
    per_symbol = np.empty(constellation.m)
    for i, (est, taus) in enumerate(bque_bank):
        _, per = analytic_ser(est, spectrum, constellation, taus)
        per_symbol[i] = per[i]
    return float(per_symbol.mean()), per_symbol
