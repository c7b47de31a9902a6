"""Parameter-space sweeps for the DSQ and CCS families.

Cells are classified from the closed-form K(R) and its analytic slope (fast
path).  A seeded random subsample of cells is rebuilt through the generic
engine and compared against the closed form.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import engine
from .engine import Extremum
from .exceptions import DomainError
from .states import _ccs_unnormalized, make_ccs, make_dsq

__all__ = [
    "AXES",
    "BoundaryTrace",
    "CellClass",
    "RegionScan",
    "classify_cell",
    "default_grid",
    "scan_family",
    "trace_boundary",
]

AXES = {"dsq": ("z", "r"), "ccs": ("lambda", "alpha")}
DEFAULT_RANGES = {"dsq": ((0.0, 2.5), (0.0, 2.5)), "ccs": ((0.01, 0.95), (0.1, 5.0))}
EDGE_TOL = 1e-3
CROSSCHECK_TOL = 1e-6
_Q_BAND = 1e-10
_SLOPE_NOISE = 1e-12


def default_grid(family: str, n: int = 101) -> tuple[np.ndarray, np.ndarray]:
    _family(family)
    (a0, a1), (b0, b1) = DEFAULT_RANGES[family]
    return np.linspace(a0, a1, n), np.linspace(b0, b1, n)


def _family(family: str) -> None:
    if family not in AXES:
        raise DomainError(f"unknown family {family!r}; expected 'dsq' or 'ccs'")


@dataclass(frozen=True)
class CellClass:
    q_in_sign: str  # "sub", "super", "poissonian" or "error"
    has_min: bool
    has_max: bool
    klyshko: bool
    q_in: float = math.nan
    extrema: tuple[Extremum, ...] = ()
    error: str | None = None


def _dsq_first3(z: float, r: float) -> tuple[float, float, float]:
    ch, sh = math.cosh(r), math.sinh(r)
    g = z * math.exp(r)
    c0 = math.exp(-0.5 * z * z * (1.0 + math.tanh(r))) / math.sqrt(ch)
    c1 = g * c0 / ch
    c2 = (g * c1 - sh * c0) / (ch * math.sqrt(2.0))
    return c0 * c0, c1 * c1, c2 * c2


def _first3(family: str, a: float, b: float) -> tuple[float, float, float]:
    if family == "dsq":
        return _dsq_first3(a, b)
    p = _ccs_unnormalized(a, b, np.arange(3))
    return float(p[0]), float(p[1]), float(p[2])


def _closed_form(family: str, a: float, b: float):
    if family == "dsq":
        return (lambda R: engine.closed_form_k_dsq(a, b, R),
                lambda R: engine.closed_form_dkdr_dsq(a, b, R))
    return (lambda R: engine.closed_form_k_ccs(a, b, R),
            lambda R: engine.closed_form_dkdr_ccs(a, b, R))


def _build(family: str, a: float, b: float):
    return make_dsq(a, b) if family == "dsq" else make_ccs(a, b)


def _has_closed_form(family: str, a: float, b: float) -> bool:
    # dsq needs r > 0 (coth r), ccs needs alpha > 0 (nonzero mean)
    return b > 0


def _sign_label(q: float) -> str:
    if q >= _Q_BAND:
        return "super"
    if q <= -_Q_BAND:
        return "sub"
    return "poissonian"


def classify_cell(family: str, a: float, b: float, r_stop: float = engine.DEFAULT_R_STOP,
                  n_grid: int = engine.DEFAULT_GRID) -> CellClass:
    """Classify one parameter point; closed form when defined, generic engine otherwise."""
    _family(family)
    p0, p1, p2 = _first3(family, a, b)
    kly = bool(2.0 * p0 * p2 < p1 * p1)
    grid = np.linspace(0.0, r_stop, n_grid)
    if _has_closed_form(family, a, b):
        k_fn, slope_fn = _closed_form(family, a, b)
        slope = slope_fn(grid)
        signs = np.sign(slope)
        signs[np.abs(slope) <= _SLOPE_NOISE] = 0
        extrema = engine._bracket_extrema(grid, signs, slope_fn, k_fn, r_stop, EDGE_TOL)
        q_in = -float(slope[0])
    else:
        # r = 0 (coherent) or alpha = 0 (vacuum): no closed form
        dist = _build(family, a, b)
        q = engine.moments(dist).mandel_q
        if q is None:
            raise DomainError(f"{family}({a}, {b}) is the vacuum")
        extrema = engine.find_extrema(dist, r_stop, n_grid, edge_tol=EDGE_TOL)
        q_in = q
    inner = [e for e in extrema if not e.edge]
    return CellClass(
        q_in_sign=_sign_label(q_in),
        has_min=any(e.kind == "min" for e in inner),
        has_max=any(e.kind == "max" for e in inner),
        klyshko=kly,
        q_in=q_in,
        extrema=tuple(extrema),
    )


@dataclass
class RegionScan:
    family: str
    axis1: str
    axis2: str
    grid1: np.ndarray
    grid2: np.ndarray
    cells: list[list[CellClass]]
    crosscheck: dict = field(default_factory=dict)

    def cell(self, a: float, b: float) -> CellClass:
        """Cell at the grid point nearest to (a, b)."""
        i = int(np.argmin(np.abs(self.grid1 - a)))
        j = int(np.argmin(np.abs(self.grid2 - b)))
        return self.cells[i][j]

    def iter_cells(self):
        for i, a in enumerate(self.grid1):
            for j, b in enumerate(self.grid2):
                yield float(a), float(b), self.cells[i][j]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param1", "param2", "qsign", "has_min", "has_max", "klyshko"])
        for a, b, c in self.iter_cells():
            w.writerow([repr(a), repr(b), c.q_in_sign, int(c.has_min), int(c.has_max), int(c.klyshko)])
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "family": self.family,
            "param1": self.axis1,
            "param2": self.axis2,
            "shape": [len(self.grid1), len(self.grid2)],
            "errors": [
                {"param1": a, "param2": b, "error": c.error}
                for a, b, c in self.iter_cells() if c.error
            ],
            "crosscheck": self.crosscheck,
        }


def _strictly_increasing(g: np.ndarray, name: str) -> None:
    if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
        raise DomainError(f"{name} grid must be a non-empty, strictly increasing 1-D array")


def scan_family(family: str, grid1=None, grid2=None, r_stop: float = engine.DEFAULT_R_STOP,
                n_grid: int = engine.DEFAULT_GRID, crosscheck_fraction: float = 0.01,
                seed: int = 0) -> RegionScan:
    """Classify every cell of ``grid1 x grid2``.

    Per-cell failures are recorded on the cell (``q_in_sign == "error"``)
    rather than aborting the sweep.
    """
    _family(family)
    if not 0 < r_stop < 1:
        raise DomainError(f"r_stop must lie in (0, 1), got {r_stop}")
    d1, d2 = default_grid(family)
    g1 = d1 if grid1 is None else np.asarray(grid1, dtype=float)
    g2 = d2 if grid2 is None else np.asarray(grid2, dtype=float)
    _strictly_increasing(g1, AXES[family][0])
    _strictly_increasing(g2, AXES[family][1])

    cells: list[list[CellClass]] = []
    for a in g1:
        row = []
        for b in g2:
            try:
                row.append(classify_cell(family, float(a), float(b), r_stop, n_grid))
            except (DomainError, ArithmeticError) as exc:
                row.append(CellClass("error", False, False, False, error=str(exc)))
        cells.append(row)

    scan = RegionScan(family, *AXES[family], g1, g2, cells)
    scan.crosscheck = _crosscheck(scan, crosscheck_fraction, seed)
    return scan


def _crosscheck(scan: RegionScan, fraction: float, seed: int) -> dict:
    """Compare closed-form K against the generic engine on a random subsample."""
    eligible = [
        (i, j) for i, a in enumerate(scan.grid1) for j, b in enumerate(scan.grid2)
        if scan.cells[i][j].error is None and _has_closed_form(scan.family, a, b)
    ]
    if fraction <= 0 or not eligible:
        return {"checked": 0, "max_abs_diff": 0.0, "failures": []}
    rng = np.random.default_rng(seed)
    count = max(1, int(round(fraction * len(eligible))))
    picks = rng.choice(len(eligible), size=min(count, len(eligible)), replace=False)
    r_check = np.linspace(0.0, 0.99, 12)
    worst, failures = 0.0, []
    for idx in sorted(picks):
        i, j = eligible[idx]
        a, b = float(scan.grid1[i]), float(scan.grid2[j])
        dist = _build(scan.family, a, b)
        k_fn, _ = _closed_form(scan.family, a, b)
        diff = max(abs(engine.k_of_r(dist, R) - k_fn(R)) for R in r_check)
        worst = max(worst, diff)
        if diff > CROSSCHECK_TOL:
            failures.append({"param1": a, "param2": b, "max_abs_diff": diff})
    return {"checked": int(len(picks)), "max_abs_diff": worst, "failures": failures}


# ---------------------------------------------------------------------------
# boundaries

CRITERIA = ("q_in_zero", "klyshko", "has_min", "has_max")


@dataclass
class BoundaryTrace:
    family: str
    criterion: str
    axis: str
    fixed: dict
    points: list[float]
    notice: str = ""

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "criterion": self.criterion,
            "axis": self.axis,
            "fixed": self.fixed,
            "points": self.points,
            "notice": self.notice,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _margin(family: str, criterion: str, a: float, b: float, r_stop: float) -> float:
    """Signed quantity whose zero crossing marks the criterion boundary."""
    if criterion == "klyshko":
        p0, p1, p2 = _first3(family, a, b)
        return p1 * p1 - 2.0 * p0 * p2
    if criterion == "q_in_zero":
        if _has_closed_form(family, a, b):
            return -float(_closed_form(family, a, b)[1](0.0))
        q = engine.moments(_build(family, a, b)).mandel_q
        if q is None:
            raise DomainError(f"{family}({a}, {b}) is the vacuum")
        return q
    cell = classify_cell(family, a, b, r_stop)
    flag = cell.has_min if criterion == "has_min" else cell.has_max
    return 1.0 if flag else -1.0


def trace_boundary(family: str, criterion: str, axis: str, bounds: tuple[float, float],
                   fixed: float, r_stop: float = engine.DEFAULT_R_STOP,
                   n_coarse: int = 201, xtol: float = 1e-7) -> BoundaryTrace:
    """Points along ``axis`` in ``bounds`` where ``criterion`` changes value.

    The other parameter is held at ``fixed``.  Sign changes found on a
    coarse grid are refined by bisection to ``xtol``.
    """
    _family(family)
    if criterion not in CRITERIA:
        raise DomainError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    names = AXES[family]
    if axis not in names:
        raise DomainError(f"axis for {family} must be one of {names}, got {axis!r}")
    lo, hi = bounds
    if not lo < hi:
        raise DomainError(f"empty range {bounds}")
    other = names[1] if axis == names[0] else names[0]

    def f(x: float) -> float:
        a, b = (x, fixed) if axis == names[0] else (fixed, x)
        return _margin(family, criterion, a, b, r_stop)

    xs = np.linspace(lo, hi, n_coarse)
    vals = np.array([f(x) for x in xs])
    signs = np.sign(vals)
    points = []
    nz = np.flatnonzero(signs)
    for i, j in zip(nz, nz[1:]):
        if signs[i] != signs[j]:
            points.append(float(optimize.bisect(f, xs[i], xs[j], xtol=xtol, maxiter=200)))
    notice = "" if points else f"{criterion} does not change along {axis} in [{lo}, {hi}]"
    return BoundaryTrace(family, criterion, axis, {other: fixed}, points, notice)
