"""Shot-by-shot simulation of the heralded attenuation experiment.

Per shot: draw a photon number n from the input distribution (inverse CDF);
send each photon to the reflected arm with probability R; thin the reflected
arm by eta1 and the transmitted arm by eta2; D1 clicks on any surviving
reflected photon, D2 on any surviving transmitted photon or a dark count
(probability ``dark2``).  Independent per-photon Bernoulli trials are drawn
as binomials, which is the same distribution.

Each shot falls in one of four cells: A = (no D1 click, D2 click),
B = (no D1 click, no D2 click), C = (D1 click, D2 click), D = (D1 click,
no D2 click).  The estimate is

    K = [A / (A + B)] / [(A + C) / N]

and its standard error follows from the multinomial delta method on log K:
with gradient ``g_A = 1/pi_A - 1/(pi_A + pi_B) - 1/(pi_A + pi_C)``,
``g_B = -1/(pi_A + pi_B)``, ``g_C = -1/(pi_A + pi_C)``, ``g_D = 0``,

    Var(log K) = (sum_i g_i**2 pi_i - 1) / N.

Random numbers come from PCG64 generators.  Shots are split into
``partitions`` contiguous blocks, block i using the i-th child of
``SeedSequence(seed)``, so a run is reproducible for fixed (seed, partitions).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .detectors import DetectorModel
from .distribution import PhotonNumberDistribution
from .exceptions import DomainError
from .states import StateSpec

__all__ = [
    "ALGORITHM",
    "SHOT_FLOOR",
    "Convergence",
    "EstimateResult",
    "ExperimentConfig",
    "convergence_check",
    "run_experiment",
]

ALGORITHM = "numpy.PCG64 via SeedSequence(seed).spawn(partitions)"
# Below this many shots the confidence interval is too wide to test anything.
SHOT_FLOOR = 10_000
_CHUNK = 1 << 18


@dataclass(frozen=True)
class ExperimentConfig:
    state: StateSpec
    R: float
    detectors: DetectorModel = field(default_factory=DetectorModel)
    shots: int = 1_000_000
    seed: int = 0
    partitions: int = 1

    def __post_init__(self) -> None:
        if not 0 <= self.R <= 1:
            raise DomainError(f"R must lie in [0, 1], got {self.R}")
        if int(self.shots) != self.shots or self.shots < 1:
            raise DomainError(f"shots must be a positive integer, got {self.shots}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if int(self.partitions) != self.partitions or self.partitions < 1:
            raise DomainError(f"partitions must be a positive integer, got {self.partitions}")

    @classmethod
    def from_dict(cls, data) -> "ExperimentConfig":
        try:
            state = StateSpec.from_dict(data["state"])
            R = float(data["R"])
        except KeyError as exc:
            raise DomainError(f"experiment config is missing {exc}") from exc
        return cls(
            state=state,
            R=R,
            detectors=DetectorModel.from_dict(data.get("detectors", {})),
            shots=int(data.get("shots", 1_000_000)),
            seed=int(data.get("seed", 0)),
            partitions=int(data.get("partitions", 1)),
        )

    def to_dict(self) -> dict:
        return {
            "state": self.state.to_dict(),
            "R": self.R,
            "detectors": self.detectors.to_dict(),
            "shots": self.shots,
            "seed": self.seed,
            "partitions": self.partitions,
        }


@dataclass(frozen=True)
class EstimateResult:
    k_estimate: float
    std_error: float
    herald_rate: float
    herald_std_error: float
    shots: int
    clicks: int
    no_clicks: int
    heralds: int
    conditioned_clicks: int
    defined: bool = True
    reason: str = ""
    algorithm: str = ALGORITHM
    seed: int = 0
    partitions: int = 1

    @property
    def informative(self) -> bool:
        return self.shots >= SHOT_FLOOR

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("k_estimate", "std_error"):
            if not math.isfinite(d[key]):
                d[key] = None
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _simulate(cdf: np.ndarray, R: float, det: DetectorModel, shots: int,
              seed_seq: np.random.SeedSequence) -> np.ndarray:
    """Counts of the four (D1, D2) outcome cells for one partition."""
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    counts = np.zeros(4, dtype=np.int64)
    n_top = cdf.size - 1
    done = 0
    while done < shots:
        m = min(_CHUNK, shots - done)
        n = np.minimum(np.searchsorted(cdf, rng.random(m), side="right"), n_top)
        refl = rng.binomial(n, R)
        c1 = rng.binomial(refl, det.eta1) > 0
        c2 = rng.binomial(n - refl, det.eta2) > 0
        if det.dark2 > 0:
            c2 |= rng.random(m) < det.dark2
        nc1 = ~c1
        a = int(np.count_nonzero(nc1 & c2))
        b = int(np.count_nonzero(nc1)) - a
        c = int(np.count_nonzero(c1 & c2))
        counts += (a, b, c, m - a - b - c)
        done += m
    return counts


def _ratio_estimate(a: int, b: int, c: int, shots: int) -> tuple[float, float, str]:
    if a + b == 0:
        return math.nan, math.nan, "no heralding events (D1 always clicked)"
    if a + c == 0:
        return math.nan, math.nan, "no D2 clicks recorded"
    if a == 0:
        return 0.0, math.nan, "no heralded D2 clicks recorded"
    k = (a / (a + b)) / ((a + c) / shots)
    pa, pb, pc = a / shots, b / shots, c / shots
    g_a = 1.0 / pa - 1.0 / (pa + pb) - 1.0 / (pa + pc)
    g_b = -1.0 / (pa + pb)
    g_c = -1.0 / (pa + pc)
    var_log = max(g_a * g_a * pa + g_b * g_b * pb + g_c * g_c * pc - 1.0, 0.0) / shots
    return k, k * math.sqrt(var_log), ""


def run_experiment(config: ExperimentConfig,
                   dist: PhotonNumberDistribution | None = None) -> EstimateResult:
    """Simulate ``config.shots`` trials and estimate K_click and the herald rate.

    ``dist`` may be passed to skip rebuilding the state from ``config.state``.
    """
    if dist is None:
        dist = config.state.build()
    cdf = np.cumsum(dist.probs)
    cdf /= cdf[-1]
    parts = config.partitions
    sizes = [config.shots // parts + (i < config.shots % parts) for i in range(parts)]
    children = np.random.SeedSequence(config.seed).spawn(parts)
    jobs = [(cdf, config.R, config.detectors, s, ss) for s, ss in zip(sizes, children) if s]
    if len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(lambda j: _simulate(*j), jobs))
    else:
        results = [_simulate(*j) for j in jobs]
    a, b, c, d = (int(v) for v in np.sum(results, axis=0))
    k, se, reason = _ratio_estimate(a, b, c, config.shots)
    herald = (a + b) / config.shots
    return EstimateResult(
        k_estimate=k,
        std_error=se,
        herald_rate=herald,
        herald_std_error=math.sqrt(herald * (1.0 - herald) / config.shots),
        shots=config.shots,
        clicks=a + c,
        no_clicks=b + d,
        heralds=a + b,
        conditioned_clicks=a,
        defined=not reason,
        reason=reason,
        seed=config.seed,
        partitions=parts,
    )


@dataclass(frozen=True)
class Convergence:
    ok: bool
    deviation: float
    std_error: float
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def convergence_check(config: ExperimentConfig, analytic: float, n_sigma: float = 4.0,
                      result: EstimateResult | None = None) -> Convergence:
    """Whether the simulated K lies within ``n_sigma`` standard errors of ``analytic``.

    Below :data:`SHOT_FLOOR` shots the interval is wide enough that a pass
    carries little information.
    """
    if not math.isfinite(analytic):
        raise DomainError("analytic value must be finite")
    if result is None:
        result = run_experiment(config)
    if not result.defined or not math.isfinite(result.std_error):
        return Convergence(False, math.nan, math.nan, result.reason or "estimate undefined")
    dev = abs(result.k_estimate - analytic)
    ok = dev <= n_sigma * result.std_error
    note = "" if result.informative else f"non-informative: fewer than {SHOT_FLOOR} shots"
    return Convergence(ok, dev, result.std_error, note)
