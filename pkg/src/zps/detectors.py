"""Analytic models of imperfect heralding and output detectors.

``eta1`` is the effective efficiency of the heralding detector D1 (reflected
arm), ``eta2`` that of the output detector D2 (transmitted arm), and
``dark2`` the per-trial dark-count probability of D2.  Non-PNR detectors use
the click / no-click POVMs ``Pi_NC = sum_n (1 - eta)**n |n><n|``.

For n photons entering the beamsplitter, each photon independently ends up
detected at D1 with probability ``R eta1``, detected at D2 with probability
``T eta2``, or lost.  Every joint no-click probability is therefore a
generating-function sum ``sum_n p_n x**n``; :func:`_gen` is that kernel.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .distribution import as_probs
from .engine import _require_mean, k_of_r
from .exceptions import DomainError

__all__ = [
    "AnalyticLimitWarning",
    "ClickProbabilities",
    "DetectorModel",
    "click_probabilities",
    "detector_curve",
    "herald_success_prob",
    "k_click",
    "k_dark",
    "k_exp",
    "k_pnr",
    "subtract_dark",
]


class AnalyticLimitWarning(UserWarning):
    """A singular configuration was replaced by its analytic limit."""


@dataclass(frozen=True)
class DetectorModel:
    eta1: float = 1.0
    eta2: float = 1.0
    dark2: float = 0.0
    pnr: bool = False

    def __post_init__(self) -> None:
        for name in ("eta1", "eta2"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
        if not 0 <= self.dark2 < 1:
            raise DomainError(f"dark2 must lie in [0, 1), got {self.dark2}")

    @classmethod
    def from_dict(cls, data) -> "DetectorModel":
        unknown = set(data) - {"eta1", "eta2", "dark2", "pnr"}
        if unknown:
            raise DomainError(f"unknown detector field(s) {sorted(unknown)}")
        return cls(**{k: (bool(v) if k == "pnr" else float(v)) for k, v in data.items()})

    @classmethod
    def from_json(cls, text: str) -> "DetectorModel":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DomainError(f"detector is not valid JSON: {exc}") from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _check(R: float, eta1: float) -> None:
    if not 0 <= R <= 1:
        raise DomainError(f"reflectance R must lie in [0, 1], got {R}")
    if not 0 <= eta1 <= 1:
        raise DomainError(f"eta1 must lie in [0, 1], got {eta1}")


def _gen(p: np.ndarray, x: float) -> float:
    """``sum_n p_n x**n`` with ``0**0 = 1``."""
    n = np.arange(p.size)
    return float(p @ np.power(x, n, dtype=float))


def _one_minus_gen(p: np.ndarray, delta: float) -> float:
    """``sum_n p_n (1 - (1 - delta)**n)``, accurate for small ``delta``."""
    n = np.arange(p.size, dtype=float)
    if delta >= 1:
        return float(p[1:].sum())
    return float(p @ -np.expm1(n * np.log1p(-delta)))


def _gen_diff(p: np.ndarray, a: float, delta: float) -> float:
    """``sum_n p_n (a**n - (a - delta)**n)`` for 0 <= delta <= a, accurate for small ``delta``."""
    n = np.arange(p.size, dtype=float)
    if a <= 0:
        return 0.0
    an = np.power(a, n)
    if delta >= a:
        ratio_term = np.where(n > 0, 1.0, 0.0)
    else:
        ratio_term = -np.expm1(n * np.log1p(-delta / a))
    return float(p @ (an * ratio_term))


def _prob(x: float) -> float:
    # summation rounding can leave a probability a few ulps outside [0, 1]
    return min(max(x, 0.0), 1.0)


def herald_success_prob(dist, R: float, eta1: float = 1.0) -> float:
    """Probability of no click at D1: ``sum_n p_n (1 - R eta1)**n``."""
    _check(R, eta1)
    return _prob(_gen(as_probs(dist), 1.0 - R * eta1))


def k_exp(dist, R: float, eta1: float) -> float:
    """Ideal-D2 relative attenuation with heralding efficiency ``eta1``: K(R eta1)."""
    _check(R, eta1)
    if not R * eta1 < 1:
        raise DomainError("R * eta1 must be < 1")
    return k_of_r(dist, R * eta1)


def k_pnr(dist, R: float, model: DetectorModel) -> float:
    """Mean-count ratio at a photon-number-resolving D2 with efficiency ``eta2``.

    Both means carry the factor ``eta2``, so the result equals
    ``k_exp(dist, R, eta1)`` whenever ``eta2 > 0``.
    """
    _check(R, model.eta1)
    p = as_probs(dist)
    m = _require_mean(p)
    if model.eta2 == 0:
        raise DomainError("a PNR detector with eta2 = 0 registers no photons")
    s = 1.0 - R * model.eta1
    t = 1.0 - R
    n = np.arange(p.size, dtype=float)
    # given no D1 click, each surviving photon is in the transmitted arm w.p. t/s
    herald = _gen(p, s)
    cond_mean = model.eta2 * float(p @ (n * np.power(s, n))) / herald * (t / s)
    uncond_mean = model.eta2 * t * m
    return cond_mean / uncond_mean


class ClickProbabilities(NamedTuple):
    """D2 click statistics without and with heralding (dark counts excluded)."""
    p_c2: float          # P(C2)
    p_nc1: float         # P(NC1)
    p_c2_nc1: float      # P(C2 and NC1)

    @property
    def p_c2_given_nc1(self) -> float:
        return self.p_c2_nc1 / self.p_nc1


def click_probabilities(dist, R: float, model: DetectorModel) -> ClickProbabilities:
    _check(R, model.eta1)
    p = as_probs(dist)
    s = 1.0 - R * model.eta1
    t_eta = (1.0 - R) * model.eta2
    return ClickProbabilities(
        p_c2=_prob(_one_minus_gen(p, t_eta)),
        p_nc1=_prob(_gen(p, s)),
        p_c2_nc1=_prob(_gen_diff(p, s, min(t_eta, s))),
    )


def k_click(dist, R: float, model: DetectorModel) -> float:
    """``P(C2 | NC1) / P(C2)`` for a non-PNR D2.

    At ``eta2 = 0`` both probabilities vanish; the eta2 -> 0 limit
    ``K(R eta1)`` is returned with an :class:`AnalyticLimitWarning`.
    """
    p = as_probs(dist)
    _require_mean(p)
    if model.eta2 == 0:
        warnings.warn("eta2 = 0: returning the analytic limit K(R * eta1)",
                      AnalyticLimitWarning, stacklevel=2)
        return k_exp(p, R, model.eta1)
    c = click_probabilities(p, R, model)
    if c.p_nc1 <= 0:
        raise DomainError("heralding success probability is zero")
    if c.p_c2 <= 0:
        raise DomainError("D2 never clicks for this configuration")
    return c.p_c2_given_nc1 / c.p_c2


def k_dark(dist, R: float, model: DetectorModel, approximate: bool = False) -> float:
    """Click-ratio K with D2 dark-count probability ``model.dark2``.

    Exact form: ``(P(C2|NC1) + d P(NC2|NC1)) / (P(C2) + d P(NC2))``.
    With ``approximate=True`` the low-rate form ``(P(C2|NC1) + d) / (P(C2) + d)``.
    """
    p = as_probs(dist)
    _require_mean(p)
    d = model.dark2
    if d == 0:
        return k_click(p, R, model)
    if model.eta2 == 0:
        # no true clicks: every click is a dark count, in both arms of the ratio
        return 1.0
    c = click_probabilities(p, R, model)
    cond = c.p_c2_given_nc1
    if approximate:
        return (cond + d) / (c.p_c2 + d)
    return (cond + d * (1.0 - cond)) / (c.p_c2 + d * (1.0 - c.p_c2))


def subtract_dark(cond_rate: float, uncond_rate: float, d: float) -> float:
    """K recovered from click rates that include dark counts, by subtracting ``d``."""
    return (cond_rate - d) / (uncond_rate - d)


def detector_curve(dist, model: DetectorModel, r_grid) -> list[tuple[float, float, float, float]]:
    """Rows ``(R, K_exp, K_click, K_dark)`` over ``r_grid``."""
    rows = []
    for R in np.asarray(r_grid, dtype=float):
        kc = k_pnr(dist, R, model) if model.pnr else k_click(dist, R, model)
        rows.append((float(R), k_exp(dist, R, model.eta1), kc, k_dark(dist, R, model)))
    return rows


def detector_curve_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["R", "K_exp", "K_click", "K_dark"])
    for row in rows:
        w.writerow([repr(v) for v in row])
    return buf.getvalue()
