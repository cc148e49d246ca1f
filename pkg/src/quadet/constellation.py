"""Unipolar PAM constellations carrying information in symbol energy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

# Relative tolerance for distinguishing user-supplied energy levels.
IDENT_TOL = 1e-12


@dataclass(frozen=True)
class Constellation:
    """Ascending unipolar amplitudes with unit average energy.

    The null symbol (amplitude 0) is always present, and the uniform prior
    over the M symbols gives mean energy exactly 1.  ``energy_variance`` is
    the prior variance of the transmitted energy, the quantity the Bayesian
    quadratic estimator needs.
    """

    amplitudes: np.ndarray
    energies: np.ndarray
    m: int
    prior: float
    energy_variance: float

    def __post_init__(self) -> None:
        for arr in (self.amplitudes, self.energies):
            arr.setflags(write=False)


def _build(amplitudes: np.ndarray, allow_degenerate: bool) -> Constellation:
    amps = np.asarray(amplitudes, dtype=float)
    m = amps.size
    if m < 2:
        raise ParameterError(f"constellation order must be >= 2, got {m}")
    if amps[0] != 0.0:
        raise ParameterError("the null symbol (amplitude 0) must be present")
    diffs = np.diff(amps)
    if np.any(diffs < 0) or (not allow_degenerate and np.any(diffs <= 0)):
        raise ParameterError("amplitudes must be ascending (strictly, unless degenerate levels are allowed)")
    energies = amps * amps
    mean_energy = energies.mean()
    if abs(mean_energy - 1.0) > 1e-12:
        raise ParameterError(f"average energy must be 1, got {mean_energy!r}")
    return Constellation(
        amplitudes=amps,
        energies=energies,
        m=m,
        prior=1.0 / m,
        energy_variance=float(np.mean((energies - 1.0) ** 2)),
    )


def uniform_ask(m: int) -> Constellation:
    """Uniform unipolar M-ASK with amplitudes proportional to 0..M-1.

    Energies are ``(i-1)^2 * M / sum(k^2, k=0..M-1)`` so the mean energy
    under the uniform prior is exactly 1.
    """
    if m < 2:
        raise ParameterError(f"constellation order must be >= 2, got {m}")
    levels = np.arange(m, dtype=float)
    scale = np.sqrt(m / np.sum(levels**2))
    return _build(levels * scale, allow_degenerate=False)


def from_amplitudes(
    amplitudes,
    allow_degenerate: bool = False,
    normalize: bool = False,
) -> Constellation:
    """Build a custom constellation from ascending nonnegative amplitudes.

    ``normalize`` rescales the amplitudes to unit mean energy; otherwise the
    input must already satisfy it.  ``allow_degenerate`` admits repeated
    energy levels, useful only for demonstrating loss of identifiability.
    """
    amps = np.asarray(amplitudes, dtype=float)
    if amps.ndim != 1:
        raise ParameterError("amplitudes must be a 1-D sequence")
    if np.any(amps < 0):
        raise ParameterError("amplitudes must be nonnegative")
    if normalize:
        mean_energy = np.mean(amps * amps)
        if mean_energy <= 0:
            raise ParameterError("cannot normalize an all-zero constellation")
        amps = amps / np.sqrt(mean_energy)
    return _build(amps, allow_degenerate=allow_degenerate)


def check_identifiable(c: Constellation, rel_tol: float = IDENT_TOL) -> bool:
    """True iff every pair of energy levels is distinct.

    Distinctness is relative to the largest energy, so rescaled copies of a
    constellation give the same verdict.
    """
    gaps = np.diff(np.sort(c.energies))
    return bool(np.all(gaps > rel_tol * max(float(c.energies.max()), 1.0)))
