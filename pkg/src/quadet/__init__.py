"""Quadratic energy detection for noncoherent massive SIMO links.

The package covers the full receive chain for one-shot energy-modulated
transmission over correlated Rayleigh fading with statistical CSI only:
channel statistics and whitening (`channel`), unipolar PAM constellations
(`constellation`), quadratic energy estimators with their moment calculus and
the estimation-variance bound (`quadform`), threshold detection with analytic
error rates (`detect`), asymptotic diagnostics (`asymptotics`), and a seeded
Monte Carlo engine (`sim`) behind the `quadet` CLI (`cli`).
"""

__version__ = "0.1.0"

from .channel import (
    ChannelSpec,
    CovariancePair,
    RxSample,
    Spectrum,
    build_covariance_pair,
    build_exponential_covariance,
    decompose,
    derive_stream,
    sample_physical,
    sample_whitened,
    whiten,
)
from .constellation import Constellation, check_identifiable, from_amplitudes, uniform_ask
from .detect import (
    Decision,
    ThresholdSet,
    abque_detect,
    analytic_ser,
    analytic_ser_genie,
    build_bque_bank,
    classify,
    compute_thresholds,
    gaussian_threshold_ser,
    ml_detect,
    ml_detect_isotropic,
    normal_intersection,
    q_function,
)
from .quadform import (
    EstimatorStats,
    QuadraticEstimator,
    build_bque,
    build_ed,
    build_hsnr,
    build_qmmse,
    cond_stats,
    crb,
    estimate,
    quadform_moments,
)
from .asymptotics import (
    DeflectionResult,
    PairwiseContext,
    deflection,
    effective_rank,
    floor_estimate,
    lyapunov_ratio,
    pairwise_context,
    pep_chisq_bounds,
    rescale_to_snr,
    simulate_pep,
)
from .sim import (
    ExperimentSpec,
    OutagePoint,
    OutageResult,
    OutageSpec,
    SerPoint,
    SerResult,
    run_estimator_validation,
    run_outage,
    run_ser,
    spectrum_for,
)

__all__ = [name for name in dir() if not name.startswith("_")]
