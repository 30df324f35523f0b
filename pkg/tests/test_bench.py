"""Experiment driver: config validation, CSV/JSON outputs, determinism."""

import json

import pytest

from ballqp.bench import CSV_COLUMNS, ExperimentConfig, run_example, run_table
from ballqp.solve import SolverOptions


def test_config_validation():
    with pytest.raises(ValueError, match="family"):
        ExperimentConfig("bogus", [(2, 2)])
    with pytest.raises(ValueError, match="count"):
        ExperimentConfig("linear", [(2, 2)], count=0)
    with pytest.raises(ValueError, match="m = 2"):
        ExperimentConfig("martinez", [(2, 3)])
    with pytest.raises(ValueError, match="workers"):
        ExperimentConfig("linear", [(2, 2)], workers=0)
    ExperimentConfig("maxnorm", [(2, 5)])  # m free for maxnorm


def test_config_from_json(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({
        "family": "linear",
        "dims": [[2, 2]],
        "count": 3,
        "solver": {"backend": "clarabel", "rel_tol": 1e-8},
    }))
    cfg = ExperimentConfig.from_json(p)
    assert cfg.dims == [(2, 2)]
    assert isinstance(cfg.solver, SolverOptions)
    assert cfg.solver.rel_tol == 1e-8


def _strip_timing(csv_text):
    # the last two columns are wall-clock measurements
    return [",".join(line.split(",")[:-2]) for line in csv_text.splitlines()]


def _tiny(tmp_path, name, **kw):
    return ExperimentConfig("linear", [(2, 2)], count=3,
                            output_dir=str(tmp_path / name), **kw)


def test_run_table_outputs(tmp_path):
    res = run_table(_tiny(tmp_path, "a"))
    text = res.csv_path.read_text()
    lines = text.splitlines()
    assert lines[0] == CSV_COLUMNS
    # 3 instances x (shor + kron + beta)
    assert len(lines) == 1 + 3 * 3
    ids = [line.split(",")[0] for line in lines[1:]]
    assert ids == sorted(ids)
    summary = json.loads(res.json_path.read_text())
    cell = summary["cells"][0]
    assert cell["instances"] == 3
    assert set(cell["relaxations"]) == {"shor", "kron", "beta"}
    assert cell["relaxations"]["shor"]["solved"] == 0  # screened out by design
    ct = cell["cross_table"]
    buckets = [k for k in ct if k != "shor_exact_excluded"]
    assert sum(ct[b]["instances"] for b in buckets) + ct["shor_exact_excluded"] == 3


def test_run_table_ball_family_rows(tmp_path):
    # regression: ball-family instances must carry their family label into
    # the CSV rows, or the row/summary consistency check trips
    cfg = ExperimentConfig("maxnorm", [(2, 4)], count=2,
                           output_dir=str(tmp_path / "mx"))
    res = run_table(cfg)
    lines = res.csv_path.read_text().splitlines()
    assert all(line.split(",")[1] == "maxnorm" for line in lines[1:])
    assert json.loads(res.json_path.read_text())["cells"][0]["instances"] == 2


def test_run_table_deterministic_and_parallel(tmp_path):
    a = run_table(_tiny(tmp_path, "a"))
    b = run_table(_tiny(tmp_path, "b"))
    c = run_table(_tiny(tmp_path, "c", workers=3))
    sa = _strip_timing(a.csv_path.read_text())
    assert sa == _strip_timing(b.csv_path.read_text())
    assert sa == _strip_timing(c.csv_path.read_text())


def test_run_example_unknown():
    with pytest.raises(ValueError, match="example"):
        run_example("nope")


def test_run_example_linear(capsys):
    report = run_example("linear_ex")
    assert report.acceptance_passed
    assert "[PASS]" in capsys.readouterr().out
