import json
import math

import numpy as np
import pytest

from zps.detectors import DetectorModel, herald_success_prob, k_click, k_dark
from zps.exceptions import DomainError
from zps.montecarlo import (
    ALGORITHM,
    SHOT_FLOOR,
    ExperimentConfig,
    _ratio_estimate,
    convergence_check,
    run_experiment,
)
from zps.states import StateSpec


def config(state, R=0.5, shots=200_000, seed=1, **det):
    return ExperimentConfig(StateSpec.from_dict(state), R, DetectorModel(**det), shots, seed)


THERMAL = {"kind": "thermal", "nbar": 3.0}
COHERENT = {"kind": "coherent", "mean_n": 1.0}


class TestConfig:
    def test_round_trip(self):
        c = config(THERMAL, eta1=0.9, eta2=0.5, dark2=1e-3)
        assert ExperimentConfig.from_dict(json.loads(json.dumps(c.to_dict()))) == c

    @pytest.mark.parametrize("kwargs", [{"R": 1.5}, {"shots": 0}, {"seed": -1}, {"partitions": 0}])
    def test_rejects(self, kwargs):
        args = dict(state=StateSpec.from_dict(COHERENT), R=0.5)
        args.update(kwargs)
        with pytest.raises(DomainError):
            ExperimentConfig(**args)

    def test_missing_key(self):
        with pytest.raises(DomainError):
            ExperimentConfig.from_dict({"state": COHERENT})


class TestEstimate:
    def test_counts_consistent(self):
        r = run_experiment(config(THERMAL, eta1=0.8, eta2=0.6, dark2=0.01))
        assert r.clicks + r.no_clicks == r.shots
        assert r.conditioned_clicks <= r.heralds <= r.shots
        assert r.std_error > 0 and r.defined
        assert r.algorithm == ALGORITHM

    def test_coherent_independence(self):
        r = run_experiment(config(COHERENT, R=0.7, shots=1_000_000, eta1=0.6, eta2=0.4))
        assert abs(r.k_estimate - 1) < 3 * r.std_error

    def test_thermal_small_eta2(self):
        r = run_experiment(config(THERMAL, shots=1_000_000, eta2=1e-3))
        assert abs(r.k_estimate - 0.4) < 3 * r.std_error

    def test_dark_dominated(self):
        r = run_experiment(config({"kind": "coherent", "mean_n": 1e-6}, eta2=0.5, dark2=0.5))
        if r.heralds == r.shots:
            # every shot heralded: the estimator is identically 1
            assert (r.k_estimate, r.std_error) == (1.0, 0.0)
        else:
            assert abs(r.k_estimate - 1) < 4 * r.std_error

    def test_dark_dominated_with_heralding_failures(self):
        r = run_experiment(config({"kind": "coherent", "mean_n": 0.01}, eta2=0.5, dark2=0.5))
        assert r.heralds < r.shots and r.std_error > 0
        assert abs(r.k_estimate - 1) < 4 * r.std_error

    def test_matches_dark_model(self):
        c = config(THERMAL, R=0.3, shots=400_000, eta1=0.9, eta2=0.4, dark2=0.05)
        dist = c.state.build()
        assert convergence_check(c, k_dark(dist, 0.3, c.detectors))

    def test_herald_rate(self):
        c = config(THERMAL, R=0.4, eta1=0.7)
        r = run_experiment(c)
        p = herald_success_prob(c.state.build(), 0.4, 0.7)
        assert abs(r.herald_rate - p) < 4 * r.herald_std_error


class TestReproducibility:
    def test_same_seed_same_result(self):
        c = config(THERMAL, eta1=0.9, eta2=0.5)
        assert run_experiment(c).to_json() == run_experiment(c).to_json()

    def test_seed_changes_result(self):
        a = run_experiment(config(THERMAL, seed=1))
        b = run_experiment(config(THERMAL, seed=2))
        assert a.k_estimate != b.k_estimate

    def test_partitions_deterministic(self):
        c = ExperimentConfig(StateSpec.from_dict(THERMAL), 0.5, DetectorModel(eta2=0.5), 300_001, 7, 4)
        a, b = run_experiment(c), run_experiment(c)
        assert a == b and a.partitions == 4 and a.shots == 300_001


class TestConvergence:
    def test_mismatched_reflectance(self):
        c = config(THERMAL, R=0.9, shots=1_000_000)
        analytic = k_click(c.state.build(), 0.5, c.detectors)
        res = convergence_check(c, analytic)
        assert not res and res.deviation > 4 * res.std_error

    def test_few_shots_non_informative(self):
        c = config(THERMAL, shots=10)
        res = convergence_check(c, 0.4)
        assert "non-informative" in res.reason or not res.ok
        assert SHOT_FLOOR > 10

    def test_undefined_estimate(self):
        # D2 never fires: no clicks to form a ratio
        c = config(THERMAL, shots=1000, eta2=0.0)
        res = convergence_check(c, 0.4)
        assert not res and res.reason

    def test_non_finite_analytic(self):
        with pytest.raises(DomainError):
            convergence_check(config(THERMAL, shots=100), math.inf)


def test_standard_error_scaling():
    c = config(THERMAL, eta1=0.9, eta2=0.5)
    ses = {n: np.mean([run_experiment(ExperimentConfig(c.state, 0.5, c.detectors, n, s)).std_error
                       for s in range(30)]) for n in (10_000, 100_000)}
    ratio = ses[10_000] / ses[100_000]
    assert ratio == pytest.approx(math.sqrt(10), rel=0.2)


def test_delta_method_matches_spread():
    # the reported std error tracks the seed-to-seed scatter of the estimate
    c = config(THERMAL, eta1=0.9, eta2=0.5, shots=20_000)
    runs = [run_experiment(ExperimentConfig(c.state, 0.5, c.detectors, 20_000, s)) for s in range(200)]
    spread = np.std([r.k_estimate for r in runs], ddof=1)
    assert np.mean([r.std_error for r in runs]) == pytest.approx(spread, rel=0.2)


def test_ratio_estimate_edge_cases():
    assert math.isnan(_ratio_estimate(0, 0, 5, 10)[0])
    assert math.isnan(_ratio_estimate(0, 5, 0, 10)[0])
    k, se, reason = _ratio_estimate(0, 5, 5, 10)
    assert k == 0.0 and reason
