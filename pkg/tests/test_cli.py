import csv
import io
import json

import pytest

from zps import cli
from zps.distribution import NMAX_ENV
from zps.states import StateSpec

INTRO = '{"kind":"superposition","terms":[[1,1],[5,1]]}'


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_curve_minimum_row(capsys):
    code, out, _ = run(capsys, "curve", "--state", INTRO)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    best = min(rows, key=lambda r: float(r["K"]))
    assert float(best["R"]) == pytest.approx(0.43, abs=0.005)
    assert len(rows) == 200


def test_curve_json(capsys):
    code, out, _ = run(capsys, "curve", "--state", INTRO, "--points", "5", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and len(doc["K"]) == 5 and doc["extrema"][0]["kind"] == "min"


def test_curve_files(tmp_path, capsys):
    out = tmp_path / "c.csv"
    code, _, _ = run(capsys, "curve", "--state", INTRO, "--r-stop", "0.9", "--out", str(out))
    assert code == 0
    assert out.read_text().startswith("R,K,dKdR,Qout\n")
    side = json.loads((tmp_path / "c.csv.extrema.json").read_text())
    assert side["extrema"][0]["R"] == pytest.approx(0.42998, abs=1e-4)


def test_curve_bit_stable(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "curve", "--state", INTRO, "--out", str(a))
    run(capsys, "curve", "--state", INTRO, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_classify_ccs_max(capsys):
    code, out, _ = run(capsys, "classify", "--state", '{"kind":"ccs","lambda":0.75,"alpha":1}')
    doc = json.loads(out)
    assert code == 0 and [e["kind"] for e in doc["observed_extrema"]] == ["max"]


def test_limits_thermal(capsys):
    code, out, _ = run(capsys, "limits", "--state", '{"kind":"thermal","nbar":3}')
    doc = json.loads(out)
    assert code == 0
    assert doc["K_limit"] == pytest.approx(0.25, abs=1e-12)
    assert doc["dKdR_limit"] == pytest.approx(-0.1875, abs=1e-12)


def test_limits_flags(capsys):
    _, out, _ = run(capsys, "limits", "--state", '{"kind":"fock","n":3}')
    assert json.loads(out) == {"K_limit": "indeterminate", "dKdR_limit": "+inf"}


def test_state_from_files(tmp_path, capsys):
    j = tmp_path / "s.json"
    j.write_text('{"kind": "thermal", "nbar": 3}')
    c = tmp_path / "s.csv"
    c.write_text("p_n\n0.04\n0\n0.48\n0\n0\n0\n0.48\n")
    assert run(capsys, "limits", "--state", f"@{j}")[0] == 0
    code, out, _ = run(capsys, "limits", "--state", f"@{c}")
    assert code == 0 and json.loads(out)["dKdR_limit"] == pytest.approx(-6.25)


def test_detector_curve(capsys):
    code, out, _ = run(capsys, "detector-curve", "--state", INTRO, "--detector",
                       '{"eta1":0.9,"eta2":0.5,"dark2":0.001}', "--points", "4")
    lines = out.strip().split("\n")
    assert code == 0 and lines[0] == "R,K_exp,K_click,K_dark" and len(lines) == 5


def test_scan_and_metadata(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "scan", "--family", "ccs", "--grid1", "0.2,0.8,4", "--grid2", "1,4,4",
                     "--out", str(out))
    assert code == 0
    assert len(out.read_text().strip().split("\n")) == 17
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert meta["family"] == "ccs" and meta["shape"] == [4, 4]


def test_boundary(capsys):
    code, out, _ = run(capsys, "boundary", "--family", "ccs", "--criterion", "klyshko",
                       "--axis", "lambda", "--range", "0.01,0.95", "--fixed", "2")
    pts = json.loads(out)["points"]
    assert code == 0 and pts == pytest.approx([0.369398, 0.773459], abs=1e-6)


def test_mc_flags_and_config(tmp_path, capsys):
    argv = ["mc", "--state", '{"kind":"coherent","mean_n":1}', "-R", "0.5", "--shots", "20000",
            "--seed", "3", "--detector", '{"eta1":0.8,"eta2":0.5}']
    code, out, _ = run(capsys, *argv)
    doc = json.loads(out)
    assert code == 0 and doc["result"]["shots"] == 20000
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc["config"]))
    code, again, _ = run(capsys, "mc", "--config", f"@{cfg}")
    assert code == 0 and json.loads(again)["result"] == doc["result"]


def test_round_trip_of_emitted_state(capsys):
    state = '{"kind": "dsq", "z": 1.0, "r": 0.5}'
    _, out, _ = run(capsys, "mc", "--state", state, "-R", "0.3", "--shots", "100")
    emitted = json.loads(out)["config"]["state"]
    assert StateSpec.from_dict(emitted) == StateSpec.from_json(state)


@pytest.mark.parametrize("argv", [
    ["classify", "--state", '{"kind":"squeezed","r":1}'],
    ["classify", "--state", '{"kind":"thermal","nbar":-1}'],
    ["curve", "--state", '{"kind":"fock","n":0}'],
    ["curve", "--state", INTRO, "--r-stop", "1.5"],
    ["scan", "--family", "dsq", "--grid1", "1,0,3"],
    ["mc", "--state", INTRO],
    ["classify", "--state", "{not json"],
])
def test_domain_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert err.startswith("error: ") and err.count("\n") == 1


def test_io_errors(tmp_path, capsys):
    assert run(capsys, "classify", "--state", f"@{tmp_path / 'missing.json'}")[0] == 3
    code, _, err = run(capsys, "curve", "--state", INTRO, "--out", str(tmp_path / "no" / "x.csv"))
    assert code == 3 and err.startswith("error: ")


def test_nmax_env(monkeypatch, capsys):
    monkeypatch.setenv(NMAX_ENV, "8")
    code, _, err = run(capsys, "limits", "--state", '{"kind":"coherent","mean_n":20}')
    assert code == 2 and "cap 8" in err


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.run(["plot"])
    assert exc.value.code == 2
