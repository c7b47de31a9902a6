"""Builders for the photon-number distributions of the state families in use.

Every builder returns a :class:`~zps.distribution.PhotonNumberDistribution`
whose cutoff ``n_max`` is chosen adaptively so that the discarded tail of
``n**2 p_n`` is at most ``tol``.  That bounds the missing probability mass and
keeps the first two moments (hence Mandel Q and K) accurate to about ``tol``.
The cutoff is capped by :func:`zps.distribution.max_nmax`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np
from scipy import stats

from .distribution import DEFAULT_TOL, PhotonNumberDistribution, max_nmax
from .exceptions import ConsistencyError, DomainError, NormalizationError, TruncationError

__all__ = [
    "StateSpec",
    "build",
    "load_custom_csv",
    "lambda_from_gain",
    "make_ccs",
    "make_coherent",
    "make_custom",
    "make_dsq",
    "make_fock",
    "make_superposition",
    "make_thermal",
]

def _check_tol(tol: float) -> None:
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol}")


def _check_cap(n_max: int, what: str) -> None:
    cap = max_nmax()
    if n_max > cap:
        raise TruncationError(
            f"{what}: cutoff n_max={n_max} needed for the requested tolerance exceeds cap {cap}"
        )


def _reverse_tails(x: np.ndarray) -> np.ndarray:
    # out[n] = sum_{k > n} x[k]
    return np.concatenate([np.cumsum(x[::-1])[::-1][1:], [0.0]])


def _cut_tail(terms: np.ndarray, tol: float, missing: float = 0.0) -> tuple[np.ndarray, float, float]:
    """Shortest prefix of ``terms`` whose discarded ``n**2 p_n`` tail is <= tol.

    ``missing`` bounds the weighted tail beyond the end of ``terms``.  Returns
    the prefix, its discarded mass and its discarded weighted tail.
    """
    n = np.arange(terms.size, dtype=float)
    weighted = _reverse_tails(terms * n * n) + missing
    ok = np.flatnonzero(weighted <= tol)
    n_max = int(ok[0]) if ok.size else terms.size - 1
    mass = float(_reverse_tails(terms)[n_max] + missing)
    return terms[: n_max + 1], mass, float(weighted[n_max])


def _series_tail(w: list[float] | np.ndarray) -> float:
    """Estimate of the sum beyond the end of a decaying series ``w``.

    Pairs of consecutive terms are compared so that even/odd oscillation
    does not fake a fast decay.  Returns inf while the series is not yet
    clearly decaying.
    """
    if len(w) < 4:
        return math.inf
    last, before = w[-1] + w[-2], w[-3] + w[-4]
    if last == 0.0 or before == 0.0:
        return 0.0 if last == before == 0.0 else math.inf
    rho = last / before
    if not rho < 0.999:
        return math.inf
    return last * rho / (1.0 - rho)


def make_coherent(mean_n: float, tol: float = DEFAULT_TOL) -> PhotonNumberDistribution:
    """Poisson distribution with mean ``mean_n``."""
    _check_tol(tol)
    if not mean_n >= 0:
        raise DomainError(f"coherent: mean_n must be >= 0, got {mean_n}")
    if mean_n == 0:
        return PhotonNumberDistribution(np.array([1.0]), label="coherent(0)")
    n_max = int(stats.poisson.isf(tol, mean_n))
    # sum_{k > n} k**2 p_k = mu**2 P(N > n - 2) + mu P(N > n - 1)
    while mean_n**2 * stats.poisson.sf(n_max - 2, mean_n) + mean_n * stats.poisson.sf(n_max - 1, mean_n) > tol:
        n_max += 1
        _check_cap(n_max, "coherent")
    probs = stats.poisson.pmf(np.arange(n_max + 1), mean_n)
    tail = float(stats.poisson.sf(n_max, mean_n))
    return PhotonNumberDistribution(probs, tail, label=f"coherent({mean_n:g})")


def make_fock(n: int) -> PhotonNumberDistribution:
    if int(n) != n or n < 0:
        raise DomainError(f"fock: n must be a non-negative integer, got {n}")
    probs = np.zeros(int(n) + 1)
    probs[-1] = 1.0
    return PhotonNumberDistribution(probs, label=f"fock({int(n)})")


def make_thermal(nbar: float, tol: float = DEFAULT_TOL) -> PhotonNumberDistribution:
    """Geometric distribution ``nbar**n / (1 + nbar)**(n + 1)``."""
    _check_tol(tol)
    if not nbar >= 0:
        raise DomainError(f"thermal: nbar must be >= 0, got {nbar}")
    if nbar == 0:
        return PhotonNumberDistribution(np.array([1.0]), label="thermal(0)")
    ratio = nbar / (1.0 + nbar)

    def weighted_tail(n: int) -> float:
        # P(N > n) = ratio**(n+1); given that, N - (n+1) is again geometric with mean nbar
        m = n + 1
        return ratio**m * (m * m + 2 * m * nbar + 2 * nbar * nbar + nbar)

    n_max = max(0, math.ceil(math.log(tol) / math.log(ratio)) - 1)
    while weighted_tail(n_max) > tol:
        n_max += 1
        _check_cap(n_max, "thermal")
    n = np.arange(n_max + 1)
    probs = (1.0 - ratio) * ratio**n
    return PhotonNumberDistribution(probs, ratio ** (n_max + 1), label=f"thermal({nbar:g})")


def _term(item) -> tuple[int, complex]:
    if len(item) == 2:
        n, amp = item
        phase = 0.0
    elif len(item) == 3:
        n, amp, phase = item
    else:
        raise DomainError(f"superposition term must be (n, amplitude[, phase]), got {item!r}")
    if int(n) != n or n < 0:
        raise DomainError(f"superposition: photon number must be a non-negative integer, got {n}")
    return int(n), complex(amp) * complex(math.cos(phase), math.sin(phase))


def make_superposition(terms: Iterable) -> PhotonNumberDistribution:
    """Diagonal of the pure state ``sum_n c_n |n>``.

    ``terms`` holds ``(n, amplitude)`` or ``(n, amplitude, phase)`` items.
    Repeated photon numbers add coherently.
    """
    amps: dict[int, complex] = {}
    for item in terms:
        n, c = _term(item)
        amps[n] = amps.get(n, 0j) + c
    if not amps:
        raise NormalizationError("superposition: no terms given")
    weights = np.zeros(max(amps) + 1)
    for n, c in amps.items():
        weights[n] = abs(c) ** 2
    if weights.sum() == 0:
        raise NormalizationError("superposition: all amplitudes are zero")
    # Drop trailing zero-weight entries so n_max is the top populated level.
    top = int(np.flatnonzero(weights)[-1])
    return PhotonNumberDistribution(weights[: top + 1], label="superposition")


def make_custom(probs: Iterable[float]) -> PhotonNumberDistribution:
    p = np.asarray(list(probs), dtype=float)
    if p.size == 0:
        raise DomainError("custom: empty probability list")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise DomainError("custom: probabilities must be finite and non-negative")
    if p.sum() <= 0:
        raise DomainError("custom: probabilities must have a positive sum")
    return PhotonNumberDistribution(p, label="custom")


def ccs_normalizer(lam: float, alpha: float) -> float:
    """Sum over n of the unnormalized catalyzed-coherent-state terms.

    Equal to ``1 - L - a*L*(2 - 3L) + a**2 * L**2 * (1 - L)`` with ``a = alpha**2``.
    """
    a = alpha * alpha
    return (1.0 - lam) - a * lam * (2.0 - 3.0 * lam) + a * a * lam * lam * (1.0 - lam)


def _ccs_unnormalized(lam: float, alpha: float, n: np.ndarray) -> np.ndarray:
    a = alpha * alpha
    s = 1.0 - lam
    # exp(-a s) a^n s^(n-1) / n!  ==  Poisson(n; a s) / s
    return stats.poisson.pmf(n, a * s) / s * (lam * (n + 1) - 1.0) ** 2


def make_ccs(lam: float, alpha: float, tol: float = DEFAULT_TOL) -> PhotonNumberDistribution:
    """Catalyzed coherent state: coherent amplitude ``alpha``, catalysis parameter ``lam``."""
    _check_tol(tol)
    if not 0 <= lam < 1:
        raise DomainError(f"ccs: lambda must satisfy 0 <= lambda < 1, got {lam}")
    if not alpha >= 0:
        raise DomainError(f"ccs: alpha must be >= 0, got {alpha}")
    norm = ccs_normalizer(lam, alpha)
    if not norm > 0:
        raise ConsistencyError(f"ccs normalizer {norm} <= 0 for lambda={lam}, alpha={alpha}")
    if alpha == 0:
        return PhotonNumberDistribution(np.array([1.0]), label="ccs")
    x = alpha * alpha * (1.0 - lam)
    size = int(x + 12.0 * math.sqrt(x) + 40)
    cap = max_nmax()
    n = np.arange(size)
    while True:
        terms = _ccs_unnormalized(lam, alpha, n) / norm
        missing = _series_tail(terms[-4:] * n[-4:] ** 2.0)
        if missing <= tol / 100.0 or size > 2 * cap:
            break
        size *= 2
        n = np.arange(size)
    probs, tail, weighted = _cut_tail(terms, tol, missing)
    if weighted > tol:
        raise TruncationError(f"ccs: cannot reach tail {tol} within cap {cap}")
    _check_cap(probs.size - 1, "ccs")
    return PhotonNumberDistribution(probs, tail, label=f"ccs({lam:g},{alpha:g})")


def make_dsq(z: float, r: float, tol: float = DEFAULT_TOL) -> PhotonNumberDistribution:
    """Displaced squeezed state with equal quadrature variances and opposite means.

    In that gauge the displacement points along the squeezed quadrature, so
    up to a global phase rotation the amplitudes are those of
    ``D(z) S(r) |0>`` with real ``z`` and ``r``.  They obey

        cosh(r) sqrt(n+1) c[n+1] = z e^r c[n] - sinh(r) sqrt(n) c[n-1],

    with ``c[0] = exp(-z**2 (1 + tanh r) / 2) / sqrt(cosh r)``.  The recursion
    runs on rescaled values with a separate log scale so neither large
    displacement nor long tails underflow.
    """
    _check_tol(tol)
    if not z >= 0 or not r >= 0:
        raise DomainError(f"dsq: need z >= 0 and r >= 0, got z={z}, r={r}")
    ch, sh = math.cosh(r), math.sinh(r)
    gamma = z * math.exp(r)
    log_c0 = -0.5 * z * z * (1.0 + math.tanh(r)) - 0.5 * math.log(ch)
    mean = sh * sh + z * z
    cap = max_nmax()
    target = tol / 100.0

    logp = [2.0 * log_c0]
    weighted = [0.0]
    prev, cur, log_scale = 0.0, 1.0, 0.0
    n = 0
    while (n < mean or _series_tail(weighted[-4:]) > target) and n <= 2 * cap:
        nxt = (gamma * cur - sh * math.sqrt(n) * prev) / (ch * math.sqrt(n + 1))
        prev, cur = cur, nxt
        n += 1
        big = max(abs(prev), abs(cur))
        if big > 1e150 or 0 < big < 1e-150:
            prev /= big
            cur /= big
            log_scale += math.log(big)
        lp = 2.0 * (math.log(abs(cur)) + log_scale + log_c0) if cur != 0 else -math.inf
        logp.append(lp)
        weighted.append(n * n * math.exp(lp))
    terms = np.exp(np.array(logp))
    probs, tail, weighted_tail = _cut_tail(terms, tol, _series_tail(weighted[-4:]))
    if weighted_tail > tol:
        raise TruncationError(f"dsq: cannot reach tail {tol} within cap {cap}")
    _check_cap(probs.size - 1, "dsq")
    return PhotonNumberDistribution(probs, tail, label=f"dsq({z:g},{r:g})")


def lambda_from_gain(g: float) -> float:
    """Catalysis parameter equivalent to an optical parametric amplifier of gain ``g``."""
    if not g >= 1:
        raise DomainError(f"gain must be >= 1, got {g}")
    return 1.0 - 1.0 / (g * g)


# --------------------------------------------------------------------------
# StateSpec

_REQUIRED: dict[str, tuple[str, ...]] = {
    "coherent": ("mean_n",),
    "fock": ("n",),
    "thermal": ("nbar",),
    "superposition": ("terms",),
    "dsq": ("z", "r"),
    "ccs": ("lambda", "alpha"),
    "custom": ("probs",),
}


@dataclass(frozen=True)
class StateSpec:
    """Parametric description of an input state.

    JSON form is flat, e.g. ``{"kind": "ccs", "lambda": 0.3, "alpha": 1.0}``.
    An optional ``tol`` key sets the truncation tolerance.
    """

    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _REQUIRED:
            raise DomainError(f"unknown state kind {self.kind!r}; expected one of {sorted(_REQUIRED)}")
        missing = [k for k in _REQUIRED[self.kind] if k not in self.params]
        if missing:
            raise DomainError(f"state kind {self.kind!r} requires parameter(s) {missing}")
        allowed = set(_REQUIRED[self.kind]) | {"tol"}
        extra = sorted(set(self.params) - allowed)
        if extra:
            raise DomainError(f"unexpected parameter(s) {extra} for state kind {self.kind!r}")
        p = self.params
        if self.kind == "ccs" and not 0 <= p["lambda"] < 1:
            raise DomainError(f"ccs: lambda must satisfy 0 <= lambda < 1, got {p['lambda']}")
        if self.kind == "superposition":
            if not any(abs(_term(t)[1]) > 0 for t in p["terms"]):
                raise NormalizationError("superposition: amplitudes have zero norm")
        if self.kind == "custom":
            probs = np.asarray(p["probs"], dtype=float)
            if probs.size == 0 or np.any(probs < 0) or probs.sum() <= 0:
                raise DomainError("custom: probabilities must be non-negative with a positive sum")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "StateSpec":
        if not isinstance(data, Mapping) or "kind" not in data:
            raise DomainError("state JSON must be an object with a 'kind' field")
        params = {k: v for k, v in data.items() if k != "kind"}
        if "terms" in params:
            params["terms"] = [list(t) for t in params["terms"]]
        if "probs" in params:
            params["probs"] = list(params["probs"])
        return cls(str(data["kind"]), params)

    @classmethod
    def from_json(cls, text: str) -> "StateSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"state is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.params}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def build(self) -> PhotonNumberDistribution:
        return build(self)


def build(spec: StateSpec) -> PhotonNumberDistribution:
    """Distribution described by ``spec``."""
    p = spec.params
    tol = p.get("tol", DEFAULT_TOL)
    if spec.kind == "coherent":
        return make_coherent(p["mean_n"], tol)
    if spec.kind == "fock":
        return make_fock(p["n"])
    if spec.kind == "thermal":
        return make_thermal(p["nbar"], tol)
    if spec.kind == "superposition":
        return make_superposition(p["terms"])
    if spec.kind == "dsq":
        return make_dsq(p["z"], p["r"], tol)
    if spec.kind == "ccs":
        return make_ccs(p["lambda"], p["alpha"], tol)
    return make_custom(p["probs"])


def load_custom_csv(path: str | Path) -> StateSpec:
    """Read a single-column CSV with header ``p_n`` (rows are n = 0, 1, 2, ...)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["p_n"]:
        raise DomainError(f"{path}: expected a single 'p_n' header column")
    try:
        probs = [float(row[0]) for row in rows[1:] if row]
    except (ValueError, IndexError) as exc:
        raise DomainError(f"{path}: malformed probability row") from exc
    return StateSpec("custom", {"probs": probs})
