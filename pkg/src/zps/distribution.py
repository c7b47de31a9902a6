"""Truncated photon-number distributions, the common currency of the package."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, NormalizationError

DEFAULT_TOL = 1e-12
DEFAULT_MAX_NMAX = 4096
NMAX_ENV = "ZPS_MAX_NMAX"


def max_nmax() -> int:
    """Hard cap on the truncation index; ``ZPS_MAX_NMAX`` overrides the default."""
    raw = os.environ.get(NMAX_ENV)
    if raw is None or raw == "":
        return DEFAULT_MAX_NMAX
    try:
        cap = int(raw)
    except ValueError as exc:
        raise DomainError(f"{NMAX_ENV} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise DomainError(f"{NMAX_ENV} must be >= 1, got {cap}")
    return cap


@dataclass(frozen=True, eq=False)
class PhotonNumberDistribution:
    """Diagonal of a single-mode density matrix in the Fock basis.

    ``probs[n]`` is the probability of ``n`` photons for ``n = 0..n_max``.
    ``tail_bound`` estimates the probability mass discarded above ``n_max``
    before the stored values were renormalized.
    """

    probs: np.ndarray
    tail_bound: float = 0.0
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=float, copy=True).ravel()
        if p.size == 0:
            raise DomainError("distribution needs at least one entry")
        if not np.all(np.isfinite(p)):
            raise DomainError("probabilities must be finite")
        if np.any(p < 0):
            raise DomainError("probabilities must be non-negative")
        total = p.sum()
        if total <= 0:
            raise NormalizationError("probabilities must have a positive sum")
        p /= total
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "tail_bound", float(max(self.tail_bound, 0.0)))

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def photon_numbers(self) -> np.ndarray:
        return np.arange(self.probs.size)

    def __getitem__(self, n: int) -> float:
        """Probability of ``n`` photons; zero beyond the truncation."""
        if n < 0:
            raise IndexError(n)
        return float(self.probs[n]) if n <= self.n_max else 0.0

    def __len__(self) -> int:
        return self.probs.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PhotonNumberDistribution):
            return NotImplemented
        return self.tail_bound == other.tail_bound and np.array_equal(self.probs, other.probs)

    def __repr__(self) -> str:
        name = f" {self.label}" if self.label else ""
        return f"<PhotonNumberDistribution{name} n_max={self.n_max} tail_bound={self.tail_bound:.2e}>"


def as_probs(dist) -> np.ndarray:
    """Probability vector of a distribution or a raw array-like (normalized copy)."""
    if isinstance(dist, PhotonNumberDistribution):
        return dist.probs
    return PhotonNumberDistribution(np.asarray(dist, dtype=float)).probs
