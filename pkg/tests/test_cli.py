import csv
import json

import pytest

from smallholes.cli import CSV_COLUMNS, main
from smallholes.norms import radial_lp_gradient_norm
from smallholes.shell import solve_constant_source

EPS = [0.25, 0.125, 0.0625, 0.03125, 0.015625]


def _run(tmp_path, cmd, config, *extra):
    path = tmp_path / "config.json"
    path.write_text(config if isinstance(config, str) else json.dumps(config))
    out = tmp_path / "out"
    return main([cmd, "--config", str(path), "--out", str(out), *extra]), out


def test_solve_shell(tmp_path):
    code, out = _run(tmp_path, "solve", {"epsilon": 0.25, "p": [2], "solver": "shell", "samples": 4})
    assert code == 0
    rep = json.loads((out / "solve.json").read_text())
    oracle = radial_lp_gradient_norm(solve_constant_source(1.0, 0.25, 3), 2.0).value
    assert abs(rep["norms"][0]["grad_norm"] - oracle) <= 1e-10 * oracle
    assert rep["boundary_residual"] < 1e-12
    assert len((out / "samples.csv").read_text().splitlines()) == 5


def test_malformed_config(tmp_path, capsys):
    code, _ = _run(tmp_path, "solve", '{"epsilon": ')
    assert code == 2
    assert "malformed" in capsys.readouterr().err


@pytest.mark.parametrize("config", [
    {"epsilon": 0.25, "bogus": 1},
    {"epsilon": 0.5},
    {"epsilon": 0.25, "p": 0.5},
    {"epsilon": 0.25, "hole": {"type": "off_center", "center": [3.0, 0, 0]}},
    {"epsilon": 0.25, "source": {"type": "modal", "l": 1, "m": 3}},
])
def test_config_errors_exit_2(tmp_path, config):
    assert _run(tmp_path, "solve", config)[0] == 2


def test_missing_config_exit_2(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "nope.json")]) == 2


def test_under_resolved_mfs_exit_3(tmp_path, capsys):
    code, _ = _run(tmp_path, "solve", {"epsilon": 0.25, "solver": "mfs", "mfs": {"n_charges": 8}})
    assert code == 3
    err = capsys.readouterr().err
    report = json.loads(err.strip().splitlines()[-1])
    assert report["error"] == "IllConditioned" and report["condition_estimate"] > 0


def test_sweep_outputs(tmp_path):
    code, out = _run(tmp_path, "sweep", {"epsilon": EPS, "p": [2.0, 3.0, 4.0]})
    assert code == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    for r in rows:
        assert abs(float(r["ratio"]) - float(r["grad_lp"]) / float(r["source_lp"])) <= 1e-12
        if float(r["p"]) == 2.0:
            assert float(r["ratio"]) <= 1.0
    fits = json.loads((out / "sweep.json").read_text())["fits"]
    assert fits["2"]["agreement"] is True
    assert fits["3"]["prediction"] == "borderline" and fits["3"]["agreement"] is None
    assert fits["3"]["regime"] in ("uniformly_bounded", "blow_up", "inconclusive")
    assert fits["4"]["regime"] == "blow_up" and fits["4"]["agreement"] is True


def test_sweep_needs_four(tmp_path):
    assert _run(tmp_path, "sweep", {"epsilon": EPS[:3]})[0] == 2


def test_sweep_threads_identical(tmp_path):
    cfg = {"epsilon": EPS, "p": [2.5], "dimension": 4}
    _, a = _run(tmp_path, "sweep", cfg)
    first = (a / "sweep.csv").read_bytes()
    _, b = _run(tmp_path, "sweep", cfg, "--threads", "3")
    assert (b / "sweep.csv").read_bytes() == first


@pytest.mark.parametrize("source,dim,nonzero", [
    ({"type": "linear_x1"}, 3, True),
    ({"type": "constant_vector"}, 3, False),
    ({"type": "linear_x1"}, 4, True),
])
def test_check_counterexample(tmp_path, source, dim, nonzero):
    code, out = _run(tmp_path, "check-counterexample", {"epsilon": 0.25, "dimension": dim, "source": source})
    assert code == 0
    rep = json.loads((out / "counterexample.json").read_text())
    assert rep["nonzero"] is nonzero
    if dim == 3 and nonzero:
        assert abs(rep["integral"] - 2.0943951) < 1e-7 and abs(rep["u0"] - 0.1666667) < 1e-7


def test_dual_blowup(tmp_path):
    eps = [2.0 ** -k for k in range(3, 8)]
    code, out = _run(tmp_path, "dual-blowup", {"epsilon": eps, "p": 1.2})
    assert code == 0
    with open(out / "dual_blowup.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(abs(float(r["source_lp"]) - 1.0) <= 1e-8 for r in rows)
    lower = [float(r["lower_bound"]) for r in rows]
    assert all(b > a for a, b in zip(lower, lower[1:]))
    code, out = _run(tmp_path, "dual-blowup", {"epsilon": eps, "p": 1.4})
    assert json.loads((out / "dual_blowup.json").read_text())["regime"] == "blow_up"


def test_validate(tmp_path, capsys):
    assert _run(tmp_path, "validate", {"epsilon": [0.25, 0.1]})[0] == 0
    assert json.loads(capsys.readouterr().out)["solver"] == ["shell", "shell"]


def test_bad_subcommand():
    assert main(["explode"]) == 2
