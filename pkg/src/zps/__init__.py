"""Photon statistics of heralded zero-photon subtraction.

A beam splitter of reflectance R taps an input light field; conditioning on
no photon in the reflected arm maps ``p_n -> p_n (1-R)**n / sum_k p_k (1-R)**k``.
The package computes the conditioned statistics, the normalized intensity
K(R) and its extrema, nonclassicality witnesses, detector-model variants,
parameter-space scans and a Monte-Carlo simulator of the experiment.
"""

from .detectors import DetectorModel, k_click, k_dark, k_exp, k_pnr
from .distribution import PhotonNumberDistribution
from .engine import (
    AttenuationCurve,
    Extremum,
    apply_zps,
    dk_dr,
    dkdr_limit_r1,
    find_extrema,
    g_n_zero,
    k_limit_r1,
    k_of_r,
    moments,
    n_out,
    q_out,
    sample_curve,
)
from .exceptions import (
    ConsistencyError,
    DegenerateConditioningError,
    DomainError,
    NormalizationError,
    TruncationError,
)
from .montecarlo import EstimateResult, ExperimentConfig, convergence_check, run_experiment
from .scan import classify_cell, scan_family, trace_boundary
from .states import (
    StateSpec,
    make_ccs,
    make_coherent,
    make_custom,
    make_dsq,
    make_fock,
    make_superposition,
    make_thermal,
)
from .witness import TransformabilityReport, check_classical_bounds, classify, predict_transformable

__version__ = "0.1.0"
