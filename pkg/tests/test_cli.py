import json
from pathlib import Path

import jsonschema
import pytest

from orbitcount import census as cz
from orbitcount.cli import main, packaged_scenarios
from orbitcount.errors import NoConvergence
from orbitcount.report import CSV_COLUMNS

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "report.schema.json").read_text())


def run(tmp_path, *argv):
    code = main([*argv, "--no-meta", "--out", str(tmp_path)])
    return code, {p.name: p.read_text() for p in tmp_path.iterdir()}


def test_packaged_catalog():
    assert {"hopf_golden", "planar_minus_sweep", "cat_map", "period_doubling_sweep"} <= set(
        packaged_scenarios())


def test_census_report(tmp_path):
    code, files = run(tmp_path, "census", "planar_minus_t05")
    assert code == 0
    rep = json.loads(files["planar_minus_t05.census.json"])
    jsonschema.validate(rep, SCHEMA)
    assert rep["result"]["total_weight"] == -1
    assert rep["config"]["window"]["s_max"] == 7.0
    assert "meta" not in rep


def test_meta_block_and_stdout(capsys):
    assert main(["lefschetz", "identity_s2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    jsonschema.validate(rep, SCHEMA)
    assert set(rep["meta"]) == {"created", "version", "python", "numpy", "argv"}
    assert rep["result"]["weights"] == {"1": 2, "2": 0, "3": 0}


def test_incomplete_census_exits_2(tmp_path, monkeypatch):
    def fail(*args, **kwargs):
        raise NoConvergence("forced")

    monkeypatch.setattr(cz, "_embedded", fail)
    scenario = tmp_path / "s.yaml"
    scenario.write_text("schema: orbitcount/1\nkind: census\nfield: {builtin: planar_minus}\n"
                        "t: -0.25\nwindow: {s_max: 7}\ncensus: {per_dim: 3}\n")
    out = tmp_path / "out"
    assert main(["census", str(scenario), "--no-meta", "--out", str(out)]) == 2
    rep = json.loads((out / "scenario.census.json").read_text())
    assert rep["result"]["incomplete"] is True


def test_config_error_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema: orbitcount/1\nkind: census\nfield: {builtin: nope}\n")
    assert main(["census", str(bad)]) == 1
    assert "line 3" in capsys.readouterr().err
    assert main(["census", "no_such_scenario"]) == 1
    assert main(["sweep", "planar_minus_t05"]) == 1


def test_inconsistent_homology_exits_1(tmp_path, capsys):
    code, files = run(tmp_path, "lefschetz", "inconsistent_homology")
    assert code == 1 and files == {}
    assert "NonIntegerWeight" in capsys.readouterr().err


def test_lefschetz_degree_override(tmp_path):
    code, files = run(tmp_path, "lefschetz", "cat_map", "--degree-max", "4")
    rep = json.loads(files["cat_map.lefschetz.json"])
    assert code == 0 and rep["config"]["d_max"] == 4
    assert rep["result"]["oracle_agrees"] is True
    assert rep["result"]["weights"] == {"1": -1, "2": -2, "3": -5, "4": -10}


def test_failed_verdict_exits_3(tmp_path):
    scenario = tmp_path / "slow.yaml"
    scenario.write_text("""\
schema: orbitcount/1
name: slowdown
kind: sweep
field:
  builtin: hopf_ab
  params: {a: [1.0, -0.9], b: [1.618033988749895, -1.4562305898749055]}
t_range: [0, 1]
t_grid: 16
window: {s_max: 7}
""")
    out = tmp_path / "out"
    assert main(["sweep", str(scenario), "--no-meta", "--out", str(out)]) == 3
    rep = json.loads((out / "slowdown.sweep.json").read_text())
    jsonschema.validate(rep, SCHEMA)
    assert rep["result"]["verdict"]["explained_by_window"] is True
    header = (out / "slowdown.sweep.csv").read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)


def test_bad_flags():
    assert main(["census", "planar_minus_t05", "--jobs", "0"]) == 1
    assert main(["census", "planar_minus_t05", "--degree-max", "0"]) == 1
    with pytest.raises(SystemExit):
        main(["frobnicate"])
