"""Seeded Monte Carlo engine: SER sweeps, outage runs, and estimator validation.

Work is split into fixed-size blocks, each driven by an RNG stream derived
from ``(seed, point_index, block_index)``, so results are bit-identical for a
given spec regardless of how blocks are scheduled across threads.  All
detectors at a grid point consume the same samples (common random numbers),
which makes paired comparisons sharp.

Decisions only depend on the received vector through the per-antenna powers
``|r_n|^2``; conditioned on a transmitted energy these are independent
exponential variates scaled by ``eps * gamma_n + 1``, which is what the SER
path draws directly.  The outage path conditions on a channel realization and
must therefore keep the complex signal-plus-noise structure.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import detect
from .channel import (
    ChannelSpec,
    Spectrum,
    build_covariance_pair,
    decompose,
    derive_stream,
)
from .constellation import Constellation, uniform_ask
from .errors import ParameterError, QuadetError
from .quadform import build_bque, build_ed, build_hsnr, build_qmmse, crb

DETECTOR_NAMES = ("ml", "ed", "hsnr", "bque", "qmmse", "abque")
SWEEP_KINDS = ("snr_grid", "antenna_grid", "rho_grid")


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def _as_grid(value) -> tuple:
    if np.isscalar(value):
        return (value,)
    return tuple(value)


@dataclass(frozen=True)
class OutageSpec:
    """Outer/inner Monte Carlo sizes and the SER thresholds to scan."""

    zeta_grid: tuple[float, ...]
    n_channels: int
    inner_trials: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "zeta_grid", tuple(float(z) for z in self.zeta_grid))
        if len(self.zeta_grid) == 0 or not all(np.isfinite(self.zeta_grid)):
            raise ParameterError("zeta_grid must be nonempty and finite")
        if self.n_channels < 1 or self.inner_trials < 1:
            raise ParameterError("n_channels and inner_trials must be >= 1")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a sweep axis, a detector set, and explicit seeding."""

    sweep: str
    detectors: tuple[str, ...]
    n_antennas: int | tuple[int, ...]
    rho: float | tuple[float, ...]
    mod_order: int
    snr_db: float | tuple[float, ...]
    trials: int
    seed: int
    outage: OutageSpec | None = None
    threads: int = 1

    def __post_init__(self) -> None:
        if self.sweep not in SWEEP_KINDS:
            raise ParameterError(f"sweep must be one of {SWEEP_KINDS}, got {self.sweep!r}")
        detectors = tuple(self.detectors)
        if not detectors:
            raise ParameterError("at least one detector is required")
        unknown = [d for d in detectors if d not in DETECTOR_NAMES]
        if unknown:
            raise ParameterError(f"unknown detectors {unknown}; choose from {DETECTOR_NAMES}")
        object.__setattr__(self, "detectors", detectors)
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.mod_order < 2:
            raise ParameterError("mod_order must be >= 2")
        if self.threads < 1:
            raise ParameterError("threads must be >= 1")
        for name, value, swept in (
            ("n_antennas", self.n_antennas, self.sweep == "antenna_grid"),
            ("rho", self.rho, self.sweep == "rho_grid"),
            ("snr_db", self.snr_db, self.sweep == "snr_grid"),
        ):
            grid = _as_grid(value)
            if len(grid) == 0 or not all(np.isfinite(grid)):
                raise ParameterError(f"{name} grid must be nonempty and finite")
            if not swept and len(grid) > 1:
                raise ParameterError(f"{name} must be a scalar unless it is the sweep axis")

    def grid_points(self) -> list[tuple[int, float, float]]:
        ns = [int(v) for v in _as_grid(self.n_antennas)]
        rhos = [float(v) for v in _as_grid(self.rho)]
        snrs = [float(v) for v in _as_grid(self.snr_db)]
        if self.sweep == "antenna_grid":
            return [(n, rhos[0], snrs[0]) for n in ns]
        if self.sweep == "rho_grid":
            return [(ns[0], r, snrs[0]) for r in rhos]
        return [(ns[0], rhos[0], s) for s in snrs]


@dataclass(frozen=True)
class SerPoint:
    detector: str
    n: int
    rho: float
    m: int
    snr_db: float
    trials: int
    errors: int
    ser: float
    stderr: float
    analytic_ser: float | None


@dataclass(frozen=True)
class SerResult:
    spec: ExperimentSpec
    points: tuple[SerPoint, ...]


@dataclass(frozen=True)
class OutagePoint:
    detector: str
    n: int
    rho: float
    m: int
    snr_db: float
    n_channels: int
    inner_trials: int
    zetas: tuple[float, ...]
    p_out: np.ndarray
    stderr: np.ndarray
    channel_norms: np.ndarray
    cond_ser: np.ndarray
    warnings: tuple[str, ...]


@dataclass(frozen=True)
class OutageResult:
    spec: ExperimentSpec
    points: tuple[OutagePoint, ...]


def spectrum_for(n: int, rho: float, snr_db: float) -> Spectrum:
    """Whitened spectrum of the exponential-correlation channel at a given SNR."""
    pair = build_covariance_pair(ChannelSpec(n_antennas=n, rho=rho, snr=db_to_linear(snr_db)))
    return decompose(pair)


def _block_sizes(total: int, n: int) -> list[int]:
    block = max(1024, min(65536, (1 << 21) // max(n, 1)))
    full, rem = divmod(total, block)
    return [block] * full + ([rem] if rem else [])


def _run_blocks(fn, items, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


class _PointEngine:
    """Per-grid-point detector state: coefficients, thresholds, analytic SER."""

    def __init__(self, spectrum: Spectrum, constellation: Constellation, detectors):
        self.gamma = spectrum.gamma
        self.m = constellation.m
        self.detectors = tuple(detectors)
        self.cov_rows = constellation.energies[:, None] * spectrum.gamma[None, :] + 1.0
        self.analytic: dict[str, float] = {}
        self.quad: dict[str, tuple[np.ndarray, float, np.ndarray]] = {}
        self.ed_rule = None
        self.bank = None
        self.ml_rule = None

        if {"ed", "abque"} & set(self.detectors):
            est = build_ed(spectrum)
            taus = detect.compute_thresholds(est, spectrum, constellation)
            self.ed_rule = (est.a_diag, est.c_affine, taus.taus)
            if "ed" in self.detectors:
                self.quad["ed"] = self.ed_rule
                self.analytic["ed"] = detect.analytic_ser(est, spectrum, constellation, taus)[0]
        if "hsnr" in self.detectors:
            est = build_hsnr(spectrum)
            taus = detect.compute_thresholds(est, spectrum, constellation)
            self.quad["hsnr"] = (est.a_diag, est.c_affine, taus.taus)
            self.analytic["hsnr"] = detect.analytic_ser(est, spectrum, constellation, taus)[0]
        if "qmmse" in self.detectors:
            est = build_qmmse(spectrum, constellation.energy_variance)
            taus = detect.compute_thresholds(est, spectrum, constellation)
            self.quad["qmmse"] = (est.a_diag, est.c_affine, taus.taus)
            self.analytic["qmmse"] = detect.analytic_ser(est, spectrum, constellation, taus)[0]
        if {"bque", "abque"} & set(self.detectors):
            bank = detect.build_bque_bank(spectrum, constellation)
            self.bank = [(e.a_diag, e.c_affine, t.taus) for e, t in bank]
            if "bque" in self.detectors:
                self.analytic["bque"] = detect.analytic_ser_genie(spectrum, constellation, bank)[0]
        if "ml" in self.detectors:
            self.ml_rule = ((1.0 / self.cov_rows).T, np.sum(np.log(self.cov_rows), axis=1))

    def _quad_decide(self, rule, sq: np.ndarray) -> np.ndarray:
        a, c, taus = rule
        return np.searchsorted(taus, sq @ a + c, side="left")

    def _bank_decide(self, labels: np.ndarray, sq: np.ndarray) -> np.ndarray:
        out = np.empty(labels.size, dtype=np.int64)
        for j in range(self.m):
            mask = labels == j
            if mask.any():
                out[mask] = self._quad_decide(self.bank[j], sq[mask])
        return out

    def decide(self, sq: np.ndarray, sym: np.ndarray) -> dict[str, np.ndarray]:
        """0-based decisions of every configured detector on shared samples."""
        out: dict[str, np.ndarray] = {}
        ed_dec = self._quad_decide(self.ed_rule, sq) if self.ed_rule is not None else None
        for name in self.detectors:
            if name == "ed":
                out[name] = ed_dec
            elif name in self.quad:
                out[name] = self._quad_decide(self.quad[name], sq)
            elif name == "bque":
                out[name] = self._bank_decide(sym, sq)
            elif name == "abque":
                out[name] = self._bank_decide(ed_dec, sq)
            elif name == "ml":
                inv_cov, log_det = self.ml_rule
                out[name] = np.argmin(sq @ inv_cov + log_det[None, :], axis=1)
        return out


def run_ser(spec: ExperimentSpec) -> SerResult:
    """Symbol error rates for every (detector, grid point) of the sweep."""
    constellation = uniform_ask(spec.mod_order)
    points: list[SerPoint] = []
    for p_idx, (n, rho, snr_db) in enumerate(spec.grid_points()):
        spectrum = spectrum_for(n, rho, snr_db)
        try:
            engine = _PointEngine(spectrum, constellation, spec.detectors)
        except QuadetError as exc:
            raise type(exc)(f"{exc} (grid point n={n}, rho={rho}, snr_db={snr_db})") from exc
        sizes = _block_sizes(spec.trials, n)

        def work(item):
            b_idx, size = item
            rng = derive_stream(spec.seed, p_idx, b_idx)
            sym = rng.integers(0, constellation.m, size)
            sq = engine.cov_rows[sym] * rng.standard_exponential((size, n))
            decisions = engine.decide(sq, sym)
            return {d: int(np.count_nonzero(v != sym)) for d, v in decisions.items()}

        tallies = _run_blocks(work, list(enumerate(sizes)), spec.threads)
        for d in spec.detectors:
            errors = sum(t[d] for t in tallies)
            ser = errors / spec.trials
            points.append(
                SerPoint(
                    detector=d,
                    n=n,
                    rho=rho,
                    m=constellation.m,
                    snr_db=snr_db,
                    trials=spec.trials,
                    errors=errors,
                    ser=ser,
                    stderr=math.sqrt(ser * (1.0 - ser) / spec.trials),
                    analytic_ser=engine.analytic.get(d),
                )
            )
    return SerResult(spec=spec, points=tuple(points))


def run_outage(spec: ExperimentSpec) -> OutageResult:
    """Outage probabilities over channel realizations.

    Each channel draw conditions the statistics of the whitened signal while
    the detectors keep their unconditional thresholds (the receiver has no
    instantaneous CSI).  The per-channel conditional SER samples are retained
    so callers can evaluate the outage probability at any threshold.
    """
    if spec.outage is None:
        raise ParameterError("spec.outage must be configured for an outage run")
    out_cfg = spec.outage
    constellation = uniform_ask(spec.mod_order)
    zetas = np.asarray(out_cfg.zeta_grid, dtype=float)
    points: list[OutagePoint] = []
    for p_idx, (n, rho, snr_db) in enumerate(spec.grid_points()):
        pair = build_covariance_pair(ChannelSpec(n_antennas=n, rho=rho, snr=db_to_linear(snr_db)))
        spectrum = decompose(pair)
        engine = _PointEngine(spectrum, constellation, spec.detectors)
        chol_h = np.linalg.cholesky(pair.c_h)
        whitener = spectrum.whitener
        amps = constellation.amplitudes
        inner_sizes = _block_sizes(out_cfg.inner_trials, n)

        def channel_work(ch_idx):
            rng = derive_stream(spec.seed, p_idx, ch_idx)
            g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(0.5)
            h = chol_h @ g
            h_norm_sq = float(np.real(np.vdot(h, h)))
            gw = whitener @ h
            gw_re, gw_im = gw.real, gw.imag
            errors = dict.fromkeys(spec.detectors, 0)
            for size in inner_sizes:
                sym = rng.integers(0, constellation.m, size)
                x = amps[sym][:, None]
                w_re = rng.standard_normal((size, n)) * np.sqrt(0.5)
                w_im = rng.standard_normal((size, n)) * np.sqrt(0.5)
                sq = (gw_re[None, :] * x + w_re) ** 2 + (gw_im[None, :] * x + w_im) ** 2
                for d, dec in engine.decide(sq, sym).items():
                    errors[d] += int(np.count_nonzero(dec != sym))
            cond = {d: errors[d] / out_cfg.inner_trials for d in spec.detectors}
            return h_norm_sq, cond

        results = _run_blocks(channel_work, list(range(out_cfg.n_channels)), spec.threads)
        norms = np.array([r[0] for r in results])
        warnings = tuple(
            f"zeta={z:g} is below the resolution 10/inner_trials={10 / out_cfg.inner_trials:g}"
            for z in zetas
            if z < 10.0 / out_cfg.inner_trials
        )
        for d in spec.detectors:
            cond_ser = np.array([r[1][d] for r in results])
            p_out = np.array([float(np.mean(cond_ser > z)) for z in zetas])
            stderr = np.sqrt(p_out * (1.0 - p_out) / out_cfg.n_channels)
            points.append(
                OutagePoint(
                    detector=d,
                    n=n,
                    rho=rho,
                    m=constellation.m,
                    snr_db=snr_db,
                    n_channels=out_cfg.n_channels,
                    inner_trials=out_cfg.inner_trials,
                    zetas=tuple(float(z) for z in zetas),
                    p_out=p_out,
                    stderr=stderr,
                    channel_norms=norms,
                    cond_ser=cond_ser,
                    warnings=warnings,
                )
            )
    return OutageResult(spec=spec, points=tuple(points))


def _moment_sweep(a: np.ndarray, c: float, cov: np.ndarray, trials: int, seed: int):
    """Running power sums of the estimator output over exponential draws."""
    sums = np.zeros(4)
    done = 0
    idx = 0
    n = cov.size
    block = max(1024, min(65536, (1 << 21) // n))
    while done < trials:
        size = min(block, trials - done)
        rng = derive_stream(seed, idx)
        values = (cov * rng.standard_exponential((size, n))) @ a + c
        sums += [values.sum(), (values**2).sum(), (values**3).sum(), (values**4).sum()]
        done += size
        idx += 1
    return sums / trials


def _shape_stats(moments: np.ndarray) -> tuple[float, float, float]:
    """(mean, skewness, excess kurtosis) from raw power means."""
    m1, m2, m3, m4 = moments
    var = m2 - m1**2
    mu3 = m3 - 3 * m1 * m2 + 2 * m1**3
    mu4 = m4 - 4 * m1 * m3 + 6 * m1**2 * m2 - 3 * m1**4
    return float(m1), float(mu3 / var**1.5), float(mu4 / var**2 - 3.0)


def run_estimator_validation(spec: ExperimentSpec, clt_n_grid=(16, 64, 256, 1024)) -> dict:
    """Numeric health report for the estimator layer.

    Bundles the sampling checks the analytic layer rests on: conditional
    unbiasedness, CRB attainment of the genie estimator, the Bayesian
    estimator's average MSE, the Gaussian-limit shape trend, and the
    fourth-moment ratios.  Output is JSON-ready.
    """
    n, rho, snr_db = spec.grid_points()[0]
    constellation = uniform_ask(spec.mod_order)
    spectrum = spectrum_for(n, rho, snr_db)
    gamma = spectrum.gamma
    eps_top = float(constellation.energies[-1])
    trials = spec.trials

    report: dict = {
        "config": {
            "n": n,
            "rho": rho,
            "snr_db": snr_db,
            "mod_order": spec.mod_order,
            "trials": trials,
            "seed": spec.seed,
        }
    }

    builders = {
        "ed": lambda: build_ed(spectrum),
        "hsnr": lambda: build_hsnr(spectrum),
        "bque": lambda: build_bque(spectrum, eps_top),
    }
    unbiasedness = []
    for sub, (kind, make) in enumerate(builders.items()):
        est = make()
        cov = eps_top * gamma + 1.0
        moments = _moment_sweep(est.a_diag, est.c_affine, cov, trials, spec.seed + 1000 + sub)
        mean = moments[0]
        var = moments[1] - mean**2
        stderr = math.sqrt(var / trials)
        unbiasedness.append(
            {
                "kind": kind,
                "eps": eps_top,
                "mean": float(mean),
                "mean_dev": float(mean - eps_top),
                "stderr": stderr,
                "ok": bool(abs(mean - eps_top) < 4 * stderr),
            }
        )
    report["unbiasedness"] = unbiasedness

    est_bque = build_bque(spectrum, eps_top)
    moments = _moment_sweep(
        est_bque.a_diag, est_bque.c_affine, eps_top * gamma + 1.0, trials, spec.seed + 2000
    )
    emp_var = float(moments[1] - moments[0] ** 2)
    bound = crb(spectrum, eps_top)
    report["bque_efficiency"] = {
        "eps": eps_top,
        "empirical_var": emp_var,
        "crb": bound,
        "ratio": emp_var / bound,
        "ok": bool(0.98 <= emp_var / bound <= 1.02),
    }

    est_q = build_qmmse(spectrum, constellation.energy_variance)
    sq_err_sum = 0.0
    done = 0
    idx = 0
    block = max(1024, min(65536, (1 << 21) // n))
    while done < trials:
        size = min(block, trials - done)
        rng = derive_stream(spec.seed + 3000, idx)
        eps_draw = constellation.energies[rng.integers(0, constellation.m, size)]
        cov = eps_draw[:, None] * gamma[None, :] + 1.0
        values = (cov * rng.standard_exponential((size, n))) @ est_q.a_diag + est_q.c_affine
        sq_err_sum += float(np.sum((values - eps_draw) ** 2))
        done += size
        idx += 1
    emp_mse = sq_err_sum / trials
    report["qmmse_mse"] = {
        "empirical": emp_mse,
        "analytic": est_q.mse_avg,
        "ratio": emp_mse / est_q.mse_avg,
        "ok": bool(abs(emp_mse / est_q.mse_avg - 1.0) <= 0.02),
    }

    skews, kurts, skews_exact, kurts_exact = [], [], [], []
    for sub, n_clt in enumerate(clt_n_grid):
        spectrum_n = spectrum_for(int(n_clt), rho, snr_db)
        est = build_ed(spectrum_n)
        cov = eps_top * spectrum_n.gamma + 1.0
        moments = _moment_sweep(est.a_diag, est.c_affine, cov, trials, spec.seed + 4000 + sub)
        _, skew, kurt = _shape_stats(moments)
        t = est.a_diag * cov
        s2 = float(np.sum(t**2))
        skews.append(skew)
        kurts.append(kurt)
        skews_exact.append(2.0 * float(np.sum(t**3)) / s2**1.5)
        kurts_exact.append(6.0 * float(np.sum(t**4)) / s2**2)
    report["clt_trend"] = {
        "n_grid": [int(v) for v in clt_n_grid],
        "skewness": skews,
        "excess_kurtosis": kurts,
        "skewness_exact": skews_exact,
        "excess_kurtosis_exact": kurts_exact,
        "monotone": bool(
            all(a > b for a, b in zip(skews, skews[1:]))
            and all(a > b for a, b in zip(kurts, kurts[1:]))
        ),
    }

    from .asymptotics import lyapunov_ratio

    ratios = []
    for n_clt in clt_n_grid:
        spectrum_n = spectrum_for(int(n_clt), rho, snr_db)
        est = build_ed(spectrum_n)
        ratios.append(lyapunov_ratio(est.a_diag, spectrum_n.gamma, eps_top))
    report["lyapunov"] = {
        "n_grid": [int(v) for v in clt_n_grid],
        "ratios": ratios,
        "decreasing": bool(all(a > b for a, b in zip(ratios, ratios[1:]))),
    }
    return report
