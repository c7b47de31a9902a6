"""Zero-photon subtraction (ZPS) on photon-number distributions.

Heralding on zero reflected photons at a beamsplitter of reflectance ``R``
reweights the input as ``p_n -> p_n T**n / sum_k p_k T**k`` with ``T = 1 - R``.
Everything here is an exact sum over the truncated distribution.

The relative attenuation is ``K(R) = <n>_out / (T <n>_in)``.  Writing
``<.>_c`` for moments of the conditioned distribution,

    dK/dR = -(<n(n-1)>_c - <n>_c**2) / (T**2 <n>_in)

which is how :func:`dk_dr` evaluates it.  :func:`q_out` takes the other route
(variance over mean of the conditioned state) so ``Q_out = -T K'/K`` can be
checked between two independent paths.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, TextIO

import numpy as np
from scipy import optimize

from .distribution import PhotonNumberDistribution, as_probs
from .exceptions import DegenerateConditioningError, DomainError

__all__ = [
    "AttenuationCurve",
    "Extremum",
    "Moments",
    "apply_zps",
    "closed_form_dkdr_ccs",
    "closed_form_dkdr_dsq",
    "closed_form_k_ccs",
    "closed_form_k_dsq",
    "dk_dr",
    "dkdr_limit_r1",
    "find_extrema",
    "g_n_zero",
    "k_limit_r1",
    "k_of_r",
    "moments",
    "n_out",
    "q_out",
    "sample_curve",
]

DEFAULT_R_STOP = 0.999
DEFAULT_GRID = 512
# Relative size below which a slope is indistinguishable from rounding noise.
SLOPE_NOISE = 1e-9


class Moments(NamedTuple):
    mean: float
    variance: float
    mandel_q: float | None


@dataclass(frozen=True)
class Extremum:
    r_star: float
    kind: str  # "min" or "max"
    k_value: float
    edge: bool = False

    def to_dict(self) -> dict:
        return {"R": self.r_star, "kind": self.kind, "K": self.k_value, "edge": self.edge}


# ---------------------------------------------------------------------------
# internals


def _check_r(R: float, allow_one: bool = False) -> None:
    hi_ok = R <= 1 if allow_one else R < 1
    if not (R >= 0 and hi_ok):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise DomainError(f"reflectance R must lie in {bound}, got {R}")


def _mean(p: np.ndarray) -> float:
    return float(p @ np.arange(p.size))


def _require_mean(p: np.ndarray) -> float:
    m = _mean(p)
    if not m > 0:
        raise DomainError("input has zero mean photon number (vacuum); K(R) is undefined")
    return m


def _conditioned(p: np.ndarray, R) -> np.ndarray:
    """Rows of ZPS-conditioned distributions, one per reflectance in ``R``.

    Weights are formed in log space so that ``T**n`` underflow at large ``n``
    cannot turn the normalization into 0/0.
    """
    R = np.atleast_1d(np.asarray(R, dtype=float))
    n = np.arange(p.size, dtype=float)
    one = R == 1.0
    if np.any(one) and p[0] == 0:
        raise DegenerateConditioningError("R = 1 heralds only the vacuum component, but p_0 = 0")
    with np.errstate(divide="ignore"):
        logp = np.log(p)
        log_t = np.log1p(-np.where(one, 0.0, R))
    logw = logp[None, :] + log_t[:, None] * n[None, :]
    logw -= logw.max(axis=1, keepdims=True)
    out = np.exp(logw)
    out /= out.sum(axis=1, keepdims=True)
    out[one] = 0.0
    out[one, 0] = 1.0
    return out


def _conditioned_stats(p: np.ndarray, R):
    """Mean, falling second moment and variance of the conditioned states."""
    w = _conditioned(p, R)
    n = np.arange(p.size, dtype=float)
    c1 = w @ n
    c2 = w @ (n * (n - 1.0))
    var = np.einsum("ij,ij->i", w, (n[None, :] - c1[:, None]) ** 2)
    return c1, c2, var


# ---------------------------------------------------------------------------
# public operations


def apply_zps(dist, R: float) -> PhotonNumberDistribution:
    """Heralded output distribution after ZPS at reflectance ``R``."""
    _check_r(R, allow_one=True)
    p = as_probs(dist)
    w = _conditioned(p, R)[0]
    tail = getattr(dist, "tail_bound", 0.0)
    if tail and R < 1:
        # tail terms carry weight <= T**(n_max+1); divide by the retained weight
        n = np.arange(p.size)
        retained = float(p @ (1.0 - R) ** n)
        tail = tail * (1.0 - R) ** p.size / retained if retained > 0 else tail
    return PhotonNumberDistribution(w, tail, label=getattr(dist, "label", ""))


def moments(dist) -> Moments:
    """Mean, variance and Mandel Q; Q is ``None`` for the vacuum."""
    p = as_probs(dist)
    n = np.arange(p.size, dtype=float)
    mean = float(p @ n)
    var = float(p @ (n - mean) ** 2)
    q = var / mean - 1.0 if mean > 0 else None
    return Moments(mean, var, q)


def n_out(dist, R: float) -> float:
    """Mean photon number of the heralded output."""
    _check_r(R, allow_one=True)
    p = as_probs(dist)
    return float(_conditioned(p, R)[0] @ np.arange(p.size))


def k_of_r(dist, R: float) -> float:
    """Relative attenuation ``<n>_out / ((1 - R) <n>_in)``; exactly 1 at R = 0."""
    _check_r(R)
    p = as_probs(dist)
    m = _require_mean(p)
    if R == 0:
        return 1.0
    c1, _, _ = _conditioned_stats(p, R)
    return float(c1[0] / ((1.0 - R) * m))


def q_out(dist, R: float) -> float:
    """Mandel Q of the heralded output state."""
    _check_r(R)
    p = as_probs(dist)
    _require_mean(p)
    c1, _, var = _conditioned_stats(p, R)
    return float(var[0] / c1[0] - 1.0)


def dk_dr(dist, R: float) -> float:
    """Analytic slope dK/dR at reflectance ``R``."""
    _check_r(R)
    p = as_probs(dist)
    m = _require_mean(p)
    c1, c2, _ = _conditioned_stats(p, R)
    t = 1.0 - R
    return float(-(c2[0] - c1[0] ** 2) / (t * t * m))


def _curve_arrays(p: np.ndarray, R: np.ndarray):
    m = _require_mean(p)
    c1, c2, var = _conditioned_stats(p, R)
    t = 1.0 - R
    k = c1 / (t * m)
    k[R == 0] = 1.0
    slope = -(c2 - c1**2) / (t * t * m)
    noise = SLOPE_NOISE * (np.abs(c2) + c1**2) / (t * t * m)
    q = var / c1 - 1.0
    return k, slope, q, noise


def k_limit_r1(dist) -> float:
    """``lim_{R->1} K`` = p_1 / (p_0 <n>_in).

    Returns ``inf`` when p_0 = 0 < p_1 and ``nan`` (indeterminate 0/0 form)
    when p_0 = p_1 = 0.
    """
    p = as_probs(dist)
    m = _require_mean(p)
    p0, p1 = p[0], (p[1] if p.size > 1 else 0.0)
    if p0 > 0:
        with np.errstate(over="ignore"):
            return float(p1 / p0 / m)
    return math.inf if p1 > 0 else math.nan


def dkdr_limit_r1(dist) -> float:
    """``lim_{R->1} dK/dR`` = (p_1**2 - 2 p_0 p_2) / (p_0**2 <n>_in); ``inf`` when p_0 = 0."""
    p = as_probs(dist)
    m = _require_mean(p)
    p0 = p[0]
    p1 = p[1] if p.size > 1 else 0.0
    p2 = p[2] if p.size > 2 else 0.0
    if p0 > 0:
        # ratios first, so a tiny p_0 does not underflow p_0**2
        a, b = p1 / p0, p2 / p0
        with np.errstate(over="ignore", invalid="ignore"):
            return float((a * a - 2.0 * b) / m)
    return math.inf


def g_n_zero(dist, k: int) -> float:
    """Normalized k-th order correlation ``<n(n-1)...(n-k+1)> / <n>**k``."""
    if int(k) != k or k < 2:
        raise DomainError(f"correlation order must be an integer >= 2, got {k}")
    p = as_probs(dist)
    m = _require_mean(p)
    n = np.arange(p.size, dtype=float)
    falling = np.ones_like(n)
    for j in range(int(k)):
        falling *= n - j
    return float(p @ falling / m**k)


def _signs(values: np.ndarray, noise: np.ndarray) -> np.ndarray:
    s = np.sign(values)
    s[np.abs(values) <= noise] = 0
    return s


def _bracket_extrema(r_grid, slope_sign, slope_fn, k_fn, r_stop, edge_tol=0.0):
    """Sign changes of the slope on a grid, refined by Brent root finding."""
    found = []
    idx = np.flatnonzero(slope_sign)
    for a, b in zip(idx, idx[1:]):
        sa, sb = slope_sign[a], slope_sign[b]
        if sa == sb:
            continue
        lo, hi = r_grid[a], r_grid[b]
        r_star = optimize.brentq(slope_fn, lo, hi, xtol=1e-12, maxiter=200)
        kind = "min" if sa < 0 else "max"
        edge = edge_tol > 0 and r_stop - r_star <= edge_tol
        found.append(Extremum(float(r_star), kind, float(k_fn(r_star)), edge))
    return found


def find_extrema(dist, r_stop: float = DEFAULT_R_STOP, n_grid: int = DEFAULT_GRID,
                 edge_tol: float = 0.0) -> list[Extremum]:
    """Local extrema of K(R) on (0, r_stop].

    dK/dR is sampled on ``n_grid`` points; every sign change is refined by
    Brent root finding on dK/dR.  Slopes within rounding noise of zero (e.g. the flat
    coherent-state curve) carry no sign and cannot create an extremum.
    Extrema within ``edge_tol`` of ``r_stop`` are marked ``edge``.
    """
    if not 0 < r_stop < 1:
        raise DomainError(f"r_stop must lie in (0, 1), got {r_stop}")
    if n_grid < 2:
        raise DomainError("n_grid must be >= 2")
    p = as_probs(dist)
    _require_mean(p)
    grid = np.linspace(0.0, r_stop, n_grid)
    _, slope, _, noise = _curve_arrays(p, grid)
    return _bracket_extrema(grid, _signs(slope, noise), lambda r: dk_dr(p, r),
                            lambda r: k_of_r(p, r), r_stop, edge_tol)


@dataclass
class AttenuationCurve:
    r_grid: np.ndarray
    k_values: np.ndarray
    dkdr_values: np.ndarray
    q_out_values: np.ndarray
    extrema: list[Extremum] = field(default_factory=list)

    def rows(self):
        for row in zip(self.r_grid, self.k_values, self.dkdr_values, self.q_out_values):
            yield [float(v) for v in row]

    def write_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["R", "K", "dKdR", "Qout"])
        for row in self.rows():
            writer.writerow([repr(v) for v in row])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def extrema_json(self) -> str:
        return json.dumps({"extrema": [e.to_dict() for e in self.extrema]}, indent=2)


def sample_curve(dist, r_stop: float = DEFAULT_R_STOP, n_points: int = 200,
                 n_grid: int = DEFAULT_GRID) -> AttenuationCurve:
    if not 0 < r_stop < 1:
        raise DomainError(f"r_stop must lie in (0, 1), got {r_stop}")
    if n_points < 2:
        raise DomainError("n_points must be >= 2")
    p = as_probs(dist)
    grid = np.linspace(0.0, r_stop, n_points)
    k, slope, q, _ = _curve_arrays(p, grid)
    return AttenuationCurve(grid, k, slope, q, find_extrema(p, r_stop, n_grid))


# ---------------------------------------------------------------------------
# closed forms for the two parametric families


def _check_r_array(R):
    if np.ndim(R) == 0:
        R = float(R)
        ok = 0.0 <= R < 1.0
    else:
        R = np.asarray(R, dtype=float)
        ok = bool(np.all((R >= 0) & (R < 1)))
    if not ok:
        raise DomainError("reflectance R must lie in [0, 1)")
    return R


def _dsq_parts(z: float, r: float, R):
    if not r > 0:
        raise DomainError("closed-form DSQ K(R) is singular at r = 0 (K = 1 in that limit)")
    if z < 0:
        raise DomainError(f"z must be >= 0, got {z}")
    R = _check_r_array(R)
    t = 1.0 - R
    coth, tanh = 1.0 / math.tanh(r), math.tanh(r)
    h = 2.0 * z * z * (1.0 / math.tanh(2.0 * r) + 1.0)
    mean = math.sinh(r) ** 2 + z * z
    return t, coth, tanh, h, mean


def closed_form_k_dsq(z: float, r: float, R):
    """Closed-form K(R) for the displaced squeezed state (accepts array ``R``)."""
    t, coth, tanh, h, mean = _dsq_parts(z, r, R)
    val = (1.0 / (2.0 * (coth - t)) - (0.5 - h / (1.0 + t * tanh)) / (coth + t)) / mean
    return float(val) if np.ndim(val) == 0 else val


def closed_form_dkdr_dsq(z: float, r: float, R):
    t, coth, tanh, h, mean = _dsq_parts(z, r, R)
    a_dt = 0.5 / (coth - t) ** 2
    b = 1.0 / (coth + t)
    b_dt = -(b**2)
    c = 0.5 - h / (1.0 + t * tanh)
    c_dt = h * tanh / (1.0 + t * tanh) ** 2
    val = -(a_dt - b_dt * c - b * c_dt) / mean
    return float(val) if np.ndim(val) == 0 else val


def _ccs_poly(lam: float, alpha: float, R):
    if not 0 <= lam < 1:
        raise DomainError(f"lambda must satisfy 0 <= lambda < 1, got {lam}")
    if not alpha > 0:
        raise DomainError("ccs with alpha = 0 is the vacuum; K(R) is undefined")
    R = _check_r_array(R)
    a, s = alpha * alpha, 1.0 - lam
    # numerator / denominator as quadratics u0 + u1 T + u2 T^2
    num = ((1.0 - 2.0 * lam) ** 2, -a * lam * s * (2.0 - 5.0 * lam), a * a * lam * lam * s * s)
    den = (s, -a * lam * (2.0 - 3.0 * lam), a * a * lam * lam * s)
    return 1.0 - R, num, den


def _quad(c, t):
    return c[0] + c[1] * t + c[2] * t * t


def _dquad(c, t):
    return c[1] + 2.0 * c[2] * t


def closed_form_k_ccs(lam: float, alpha: float, R):
    """Closed-form K(R) for the catalyzed coherent state, normalized to K(0) = 1."""
    t, num, den = _ccs_poly(lam, alpha, R)
    norm = _quad(num, 1.0) / _quad(den, 1.0)
    val = _quad(num, t) / _quad(den, t) / norm
    return float(val) if np.ndim(val) == 0 else val


def closed_form_dkdr_ccs(lam: float, alpha: float, R):
    t, num, den = _ccs_poly(lam, alpha, R)
    norm = _quad(num, 1.0) / _quad(den, 1.0)
    n, d = _quad(num, t), _quad(den, t)
    dk_dt = (_dquad(num, t) * d - n * _dquad(den, t)) / (d * d) / norm
    val = -dk_dt
    return float(val) if np.ndim(val) == 0 else val
