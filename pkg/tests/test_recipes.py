import json
from pathlib import Path

import pytest

from zps.figures import compare_csv, list_recipes, load_recipe, run_recipe

GOLDEN = Path(__file__).parent / "golden"
EXPECTED = [f"fig2{c}" for c in "abcde"] + [f"fig3{c}" for c in "abcd"] + ["fig4a", "fig4b"] + \
    [f"fig5{c}" for c in "abcd"] + ["fig6"]


def test_all_figures_have_recipes():
    assert list_recipes() == sorted(EXPECTED)


@pytest.mark.parametrize("name", EXPECTED)
def test_recipe_matches_golden(name, tmp_path):
    out = run_recipe(name, tmp_path)
    golden = GOLDEN / load_recipe(name)["golden"]
    assert compare_csv(out, golden) == []
    side = Path(str(golden) + ".extrema.json")
    if side.exists():
        got = json.loads(Path(str(out) + ".extrema.json").read_text())["extrema"]
        want = json.loads(side.read_text())["extrema"]
        assert [e["kind"] for e in got] == [e["kind"] for e in want]
        for g, w in zip(got, want):
            assert g["R"] == pytest.approx(w["R"], abs=1e-9)
            assert g["K"] == pytest.approx(w["K"], rel=1e-9)


@pytest.mark.parametrize("name,kinds", [
    ("fig2d", ["min"]), ("fig2e", ["max", "min"]), ("fig3c", ["min"]), ("fig3a", []),
    ("fig5a", ["min"]), ("fig5b", ["max"]), ("fig5c", ["max", "min"]), ("fig5d", []),
])
def test_golden_extrema_structure(name, kinds):
    doc = json.loads((GOLDEN / f"{name}.csv.extrema.json").read_text())
    assert [e["kind"] for e in doc["extrema"]] == kinds


def test_compare_detects_drift(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("R,K\n0.1,1.0\n")
    b.write_text("R,K\n0.1,1.001\n")
    assert compare_csv(a, b)
    assert compare_csv(a, a) == []
