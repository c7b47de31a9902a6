import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import COUNTEREXAMPLE
from zps.engine import find_extrema, g_n_zero, k_of_r
from zps.exceptions import DomainError
from zps.states import make_ccs, make_coherent, make_custom, make_dsq, make_fock, make_thermal
from zps.witness import (
    check_classical_bounds,
    classify,
    json_value,
    klyshko,
    lee,
    predict_transformable,
)


class TestClassicalBounds:
    def test_coherent_saturates(self):
        b = check_classical_bounds(make_coherent(1.5))
        assert not b.slope_violation and not b.magnitude_violation

    def test_thermal(self):
        b = check_classical_bounds(make_thermal(2.0))
        assert not b.slope_violation and not b.magnitude_violation

    def test_intro_violates_both(self, intro):
        b = check_classical_bounds(intro)
        assert b.slope_violation and b.magnitude_violation
        # the slope turns positive past the minimum, before K exceeds 1
        assert 0.43 < b.slope_witness_r < b.magnitude_witness_r
        assert k_of_r(intro, b.magnitude_witness_r) > 1

    def test_vacuum(self):
        with pytest.raises(DomainError):
            check_classical_bounds(make_fock(0))


class TestCriteria:
    def test_lee(self, intro):
        assert lee(intro)
        assert not lee(make_coherent(1.0))
        assert not lee(make_custom(COUNTEREXAMPLE))

    def test_lee_epsilon(self):
        d = make_custom([1e-16, 1.0])
        assert not lee(d)
        assert lee(d, p0_epsilon=1e-15)

    def test_klyshko(self):
        assert not klyshko(make_custom([1, 2, 2]))  # Poisson-like equality 2 p0 p2 = p1^2
        assert klyshko(make_ccs(0.3, 1.0))
        assert not klyshko(make_thermal(2.0))

    @pytest.mark.parametrize("lam", [0.1, 0.3, 0.5, 0.7, 0.8, 0.9])
    def test_klyshko_ccs_alpha_independent(self, lam):
        flags = {klyshko(make_ccs(lam, a)) for a in (0.5, 1.0, 2.0, 4.0)}
        assert len(flags) == 1


class TestPrediction:
    def test_intro(self, intro):
        r = predict_transformable(intro)
        assert not r.initially_sub
        assert r.lee and r.mean_ratio and r.klyshko and r.predicted_transformable
        assert r.limit_k == math.inf

    def test_thermal(self):
        r = predict_transformable(make_thermal(3.0))
        assert not (r.lee or r.mean_ratio or r.klyshko or r.predicted_transformable)

    def test_counterexample_missed(self):
        d = make_custom(COUNTEREXAMPLE)
        r = predict_transformable(d)
        assert r.q_in == pytest.approx(0.16)
        assert not r.predicted_transformable
        assert len(find_extrema(d)) >= 2

    def test_sub_poissonian_excludes_lee(self):
        # p0 = 0 and sub-Poissonian: Lee does not apply
        r = predict_transformable(make_fock(3))
        assert r.initially_sub and not r.lee

    def test_poissonian_band(self):
        r = predict_transformable(make_coherent(2.0))
        assert not r.predicted_transformable and not r.initially_sub

    def test_klyshko_p1_zero(self):
        # p1 = 0 with p0 p2 > 0: false for a super-Poissonian input
        r = predict_transformable(make_custom([0.5, 0, 0.3, 0, 0.2]))
        assert r.q_in > 0 and not r.klyshko
        # and true for the reversed test on a sub-Poissonian input
        r = predict_transformable(make_custom([0.01, 0, 0.01, 0, 0, 0.98]))
        assert r.q_in < 0 and r.klyshko


class TestClassify:
    def test_psi_prime(self, psi_prime):
        r = classify(psi_prime)
        assert r.initially_sub and r.nonclassical_by_slope
        assert [e.kind for e in r.observed_extrema] == ["max", "min"]

    def test_dsq_one_one(self):
        d = make_dsq(1.0, 1.0)
        r = classify(d)
        assert r.q_in > 0 and r.klyshko
        assert [e.kind for e in r.observed_extrema] == ["min"]
        assert all(g_n_zero(d, k) > 1 for k in range(2, 7))

    def test_coherent(self):
        r = classify(make_coherent(1.0))
        assert r.observed_extrema == []
        assert not (r.lee or r.mean_ratio or r.klyshko or r.predicted_transformable)
        assert not (r.nonclassical_by_slope or r.nonclassical_by_magnitude)

    def test_ccs_maximum(self):
        r = classify(make_ccs(0.75, 1.0))
        assert [e.kind for e in r.observed_extrema] == ["max"]
        assert r.nonclassical_by_magnitude

    def test_extension_beyond_window(self):
        # small p1, p2 = 0: the Klyshko-predicted extremum sits beyond R = 0.999
        d = make_custom([0.8145, 0.0081, 0, 0.3121, 0.5134, 0.4035, 0, 0.6422, 0.3605, 0, 0.2985])
        assert find_extrema(d) == []
        r = classify(d)
        assert r.predicted_transformable and r.observed_extrema
        assert all(e.edge and e.r_star > 0.999 for e in r.observed_extrema)
        assert r.notes

    def test_extension_far_from_window(self):
        # p0 ~ 1e-137: the extremum sits near 1 - R ~ 6e-69, unreachable in R
        d = make_custom([3.6e-137, 0.0, 1.0])
        r = classify(d)
        assert r.initially_sub and r.predicted_transformable
        (e,) = r.observed_extrema
        assert e.kind == "max" and e.edge
        assert "6e-69" in r.notes[0]

    def test_json(self, intro):
        doc = json.loads(classify(intro).to_json())
        expected = {
            "q_in", "initially_sub", "lee", "mean_ratio", "klyshko", "limit_k", "limit_dkdr",
            "predicted_transformable", "observed_extrema", "nonclassical_by_slope",
            "nonclassical_by_magnitude",
        }
        assert expected <= set(doc)
        assert doc["limit_k"] == "+inf"

    def test_json_value(self):
        assert json_value(math.nan) == "indeterminate"
        assert json_value(-math.inf) == "-inf"
        assert json_value(0.5) == 0.5


weights = st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12).filter(
    lambda w: sum(i * x for i, x in enumerate(w)) > 1e-3
)


@settings(max_examples=80, deadline=None)
@given(weights)
def test_properties_on_random_states(w):
    d = make_custom(w)
    r = classify(d)
    if r.predicted_transformable:
        assert r.observed_extrema
    if r.initially_sub:
        assert r.nonclassical_by_slope
    if r.nonclassical_by_magnitude:
        b = check_classical_bounds(d)
        assert b.slope_violation and b.slope_witness_r < b.magnitude_witness_r
