"""Nonclassicality certificates and transformability prediction.

A classical input obeys ``dK/dR <= 0`` and ``K <= 1`` for every R.  The
transformability criteria compare the input (R = 0) with the R -> 1 limits,
which depend only on ``<n>_in`` and ``p_0, p_1, p_2``:

* super-Poissonian inputs transform if ``p_0 = 0`` (Lee), ``p_0 <n> < p_1``
  or ``2 p_0 p_2 < p_1**2`` (Klyshko);
* sub-Poissonian inputs transform if ``p_0 <n> > p_1`` or
  ``2 p_0 p_2 > p_1**2``.

The criteria are sufficient, not necessary: a state that transforms an even
number of times can slip past all of them.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .distribution import as_probs
from .engine import (
    DEFAULT_GRID,
    SLOPE_NOISE,
    DEFAULT_R_STOP,
    Extremum,
    _curve_arrays,
    _require_mean,
    _signs,
    dkdr_limit_r1,
    find_extrema,
    k_limit_r1,
    moments,
)
from .exceptions import ConsistencyError, DomainError

__all__ = [
    "ClassicalBounds",
    "Q_ZERO_BAND",
    "TransformabilityReport",
    "check_classical_bounds",
    "classify",
    "json_value",
    "klyshko",
    "lee",
    "predict_transformable",
]

Q_ZERO_BAND = 1e-10
_K_NOISE = 1e-12


class ClassicalBounds(NamedTuple):
    slope_violation: bool
    slope_witness_r: float | None
    magnitude_violation: bool
    magnitude_witness_r: float | None


def _first3(p: np.ndarray) -> tuple[float, float, float]:
    pad = np.zeros(3)
    pad[: min(3, p.size)] = p[:3]
    return float(pad[0]), float(pad[1]), float(pad[2])


def lee(dist, p0_epsilon: float = 0.0) -> bool:
    """Zero vacuum probability."""
    return bool(as_probs(dist)[0] <= p0_epsilon)


def klyshko(dist) -> bool:
    """Strict Klyshko inequality ``2 p_0 p_2 < p_1**2``."""
    p0, p1, p2 = _first3(as_probs(dist))
    return bool(2.0 * p0 * p2 < p1 * p1)


def check_classical_bounds(dist, r_stop: float = DEFAULT_R_STOP,
                           n_grid: int = DEFAULT_GRID) -> ClassicalBounds:
    """Look for ``dK/dR > 0`` or ``K > 1`` on a grid over [0, r_stop].

    The witness returned for each violation is the smallest grid reflectance
    at which it occurs.
    """
    if not 0 < r_stop < 1:
        raise DomainError(f"r_stop must lie in (0, 1), got {r_stop}")
    p = as_probs(dist)
    _require_mean(p)
    grid = np.linspace(0.0, r_stop, n_grid)
    k, slope, _, noise = _curve_arrays(p, grid)
    up = np.flatnonzero(_signs(slope, noise) > 0)
    over = np.flatnonzero(k > 1.0 + _K_NOISE)
    return ClassicalBounds(
        bool(up.size),
        float(grid[up[0]]) if up.size else None,
        bool(over.size),
        float(grid[over[0]]) if over.size else None,
    )


def json_value(x: float):
    """JSON-safe form of a limit: "+inf"/"-inf" for infinities, "indeterminate" for NaN."""
    if math.isnan(x):
        return "indeterminate"
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return x


@dataclass
class TransformabilityReport:
    q_in: float
    initially_sub: bool
    lee: bool
    mean_ratio: bool
    klyshko: bool
    limit_k: float
    limit_dkdr: float
    predicted_transformable: bool
    observed_extrema: list[Extremum] | None = None
    nonclassical_by_slope: bool | None = None
    nonclassical_by_magnitude: bool | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def observed_transformable(self) -> bool | None:
        if self.observed_extrema is None:
            return None
        return bool(self.observed_extrema)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["limit_k"] = json_value(self.limit_k)
        d["limit_dkdr"] = json_value(self.limit_dkdr)
        if self.observed_extrema is not None:
            d["observed_extrema"] = [e.to_dict() for e in self.observed_extrema]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def predict_transformable(dist, q_band: float = Q_ZERO_BAND) -> TransformabilityReport:
    """Apply the sufficient criteria in the direction set by the sign of Q_in.

    Inside ``|Q_in| < q_band`` no directional prediction is made and all
    criterion fields are False.
    """
    p = as_probs(dist)
    mean = _require_mean(p)
    q = moments(p).mandel_q
    p0, p1, p2 = _first3(p)
    super_ = q >= q_band
    sub = q <= -q_band
    if super_:
        lee_hit = p0 == 0
        ratio = p0 * mean < p1
        kly = 2.0 * p0 * p2 < p1 * p1
    elif sub:
        # Lee's criterion says nothing about sub-Poissonian inputs.
        lee_hit = False
        ratio = p0 * mean > p1
        kly = 2.0 * p0 * p2 > p1 * p1
    else:
        lee_hit = ratio = kly = False
    return TransformabilityReport(
        q_in=float(q),
        initially_sub=bool(sub),
        lee=bool(lee_hit),
        mean_ratio=bool(ratio),
        klyshko=bool(kly),
        limit_k=k_limit_r1(p),
        limit_dkdr=dkdr_limit_r1(p),
        predicted_transformable=bool(lee_hit or ratio or kly),
    )


def _slope_sign_log_t(logp: np.ndarray, log_t: float) -> tuple[float, float]:
    """``<n>_c**2 - <n(n-1)>_c`` (same sign as dK/dR) and its noise scale at T = exp(log_t)."""
    n = np.arange(logp.size, dtype=float)
    logw = logp + n * log_t
    logw -= logw.max()
    w = np.exp(logw)
    w /= w.sum()
    c1 = float(w @ n)
    c2 = float(w @ (n * (n - 1.0)))
    return c1 * c1 - c2, SLOPE_NOISE * (abs(c2) + c1 * c1)


def _extrema_near_one(p: np.ndarray, r_stop: float,
                      log_t_min: float = -800.0) -> tuple[list[Extremum], list[float]]:
    """Extrema of K in (r_stop, 1), searched on a grid uniform in log T.

    Working in log T reaches reflectances far closer to 1 than a float R
    can represent, where ``r_star`` rounds to 1.0; the matching values of
    ``T = 1 - R`` are returned alongside.
    """
    with np.errstate(divide="ignore"):
        logp = np.log(p)
    log_t = np.linspace(math.log1p(-r_stop), log_t_min, 4000)
    vals = np.array([_slope_sign_log_t(logp, u) for u in log_t])
    signs = np.sign(vals[:, 0])
    signs[np.abs(vals[:, 0]) <= vals[:, 1]] = 0
    mean = float(p @ np.arange(p.size))
    found, gaps = [], []
    idx = np.flatnonzero(signs)
    for i, j in zip(idx, idx[1:]):
        if signs[i] == signs[j]:
            continue
        u = optimize.brentq(lambda x: _slope_sign_log_t(logp, x)[0], log_t[j], log_t[i],
                            xtol=1e-12, maxiter=200)
        t = math.exp(u)
        n = np.arange(p.size, dtype=float)
        logw = logp + n * u
        w = np.exp(logw - logw.max())
        k = float(w @ n / w.sum()) / (t * mean)
        found.append(Extremum(float(-math.expm1(u)), "min" if signs[i] < 0 else "max", k, edge=True))
        gaps.append(t)
    return found, gaps


def classify(dist, r_stop: float = DEFAULT_R_STOP, n_grid: int = DEFAULT_GRID,
             q_band: float = Q_ZERO_BAND) -> TransformabilityReport:
    """Prediction plus the numeric extremum scan and classical-bound checks.

    Observed transformability means at least one extremum of K on
    (0, r_stop).  When the criteria predict a transformation but the window
    shows none, the search continues toward R = 1; such extrema are
    reported with ``edge=True``.  A prediction still unmatched after that
    raises :class:`ConsistencyError`.
    """
    p = as_probs(dist)
    report = predict_transformable(p, q_band)
    extrema = find_extrema(p, r_stop, n_grid)
    if report.predicted_transformable and not extrema:
        extrema, gaps = _extrema_near_one(p, r_stop)
        if not extrema:
            raise ConsistencyError("criteria predict a transformation but K(R) has no extremum")
        text = ", ".join(f"{t:.3g}" for t in gaps)
        report.notes.append(f"extremum beyond r_stop, located by the R -> 1 extension at 1 - R = {text}")
    bounds = check_classical_bounds(p, r_stop, n_grid)
    report.observed_extrema = extrema
    report.nonclassical_by_slope = bounds.slope_violation
    report.nonclassical_by_magnitude = bounds.magnitude_violation
    return report
