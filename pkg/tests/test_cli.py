import csv
import io
import json
import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest

from warpcheck import cli
from warpcheck.report import DEFAULT_ABS_TOL, default_abs_tol

GOLDEN = Path(__file__).parent / "golden"
EXAMPLES = resources.files("warpcheck") / "examples"
EXAMPLE_NAMES = sorted(p.name[:-5] for p in EXAMPLES.iterdir() if p.name.endswith(".json"))
EXIT_CODES = json.loads((GOLDEN / "exit_codes.json").read_text())


def _run(config, tmp_path, *extra):
    tmp_path.mkdir(parents=True, exist_ok=True)
    if isinstance(config, dict):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        config = path
    out = tmp_path / "out"
    return cli.main(["run", str(config), "--out", str(out), *extra]), out


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def _close(a, b):
    if a == "nan" or b == "nan":
        return a == b
    a, b = float(a), float(b)
    return abs(a - b) <= 1e-9 + 1e-7 * abs(b)


def test_every_example_has_a_golden():
    assert sorted(EXIT_CODES) == EXAMPLE_NAMES
    assert set(EXIT_CODES.values()) == {0, 1, 2, 3}


@pytest.mark.parametrize("name", EXAMPLE_NAMES)
def test_example_matches_golden(name, tmp_path):
    code, out = _run(EXAMPLES / f"{name}.json", tmp_path)
    assert code == EXIT_CODES[name]
    got = _rows((out / "summary.csv").read_text())
    want = _rows((GOLDEN / name / "summary.csv").read_text())
    assert [(r["name"], r["verdict"]) for r in got] == [(r["name"], r["verdict"]) for r in want]
    for g, w in zip(got, want):
        assert _close(g["value"], w["value"]), (g, w)
        assert _close(g["error"], w["error"]), (g, w)
    doc = json.loads((out / "report.json").read_text())
    assert doc["exit_code"] == code
    assert doc["config"] == json.loads((EXAMPLES / f"{name}.json").read_text())


@pytest.mark.parametrize("name", ["flow_unit_normal_h2", "hk_sweep_perturbed_h3", "offcenter_geometry_h3"])
def test_runs_are_byte_identical(name, tmp_path):
    outputs = []
    for i, threads in enumerate(("1", "4")):
        sub = tmp_path / str(i)
        sub.mkdir()
        _, out = _run(EXAMPLES / f"{name}.json", sub, "--threads", threads)
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outputs[0] == outputs[1]


SPHERE = {"type": "sphere", "radius": 1.0, "grid": {"n_mu": 16, "n_phi": 32}}
H3 = {"kind": "space_form", "c": -1, "n": 2}


def test_identities_on_sphere_exit_zero(tmp_path):
    code, out = _run({"task": "identities", "manifold": H3, "surface": SPHERE}, tmp_path)
    assert code == 0
    rows = _rows((out / "summary.csv").read_text())
    assert rows and all(r["verdict"] == "identity_ok" for r in rows)


def test_hk_sweep_five_rows_nonnegative(tmp_path):
    cfg = json.loads((EXAMPLES / "hk_sweep_perturbed_h3.json").read_text())
    code, out = _run(cfg, tmp_path)
    rows = _rows((out / "summary.csv").read_text())
    assert code == 0 and len(rows) == 5
    assert all(float(r["value"]) >= 0 for r in rows)


def test_sphere_radius_two_eps_two_passes_the_literal_gate(tmp_path):
    cfg = {"task": "hk-sweep", "manifold": H3, "surface": dict(SPHERE, radius=2.0), "eps_list": [2]}
    code, out = _run(cfg, tmp_path)
    assert code == 0
    assert _rows((out / "summary.csv").read_text())[0]["verdict"] == "identity_ok"


def test_assumption_violation_is_an_error_row(tmp_path, capsys):
    code, out = _run(EXAMPLES / "hk_sweep_assumption_violated.json", tmp_path)
    assert code == 1
    doc = json.loads((out / "report.json").read_text())
    assert doc["errors"][0]["code"] == "ASSUMPTION_VIOLATED"
    assert doc["reports"][0]["value"] is None and doc["reports"][0]["details"]["nodes"]
    assert "ASSUMPTION_VIOLATED" in capsys.readouterr().err


@pytest.mark.parametrize("cfg,field", [
    ({"manifold": H3, "surface": SPHERE}, "task"),
    ({"task": "bogus", "manifold": H3, "surface": SPHERE}, "task"),
    ({"task": "hk-sweep", "manifold": H3, "surface": SPHERE}, "eps_list"),
    ({"task": "hk-sweep", "manifold": H3, "surface": SPHERE, "eps_list": []}, "eps_list"),
    ({"task": "identities", "manifold": H3}, "surface"),
    ({"task": "identities", "manifold": {"kind": "space_form", "c": 3, "n": 2}, "surface": SPHERE}, ""),
    ({"task": "flow", "manifold": H3, "surface": SPHERE, "flow": {}}, "t_end"),
    ({"task": "curvature-eq", "manifold": H3, "surface": SPHERE,
      "curvature": {"k": 2, "chi": {"family": "cubic"}}}, "chi"),
])
def test_config_errors_exit_one(cfg, field, tmp_path, capsys):
    code, out = _run(cfg, tmp_path)
    assert code == 1
    err = capsys.readouterr().err
    assert field in err
    assert not (out / "report.json").exists()


def test_unreadable_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", str(bad)]) == 1
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 1
    assert "CONFIG_INVALID" in capsys.readouterr().err


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 1


def test_tolerance_precedence(tmp_path, monkeypatch):
    def floor(cfg, sub):
        _, out = _run(cfg, tmp_path / sub)
        doc = json.loads((out / "report.json").read_text())
        return next(r for r in doc["reports"] if r["name"] == "lemma23_residuals")["details"]["floor"]

    cfg = {"task": "identities", "manifold": H3, "surface": SPHERE, "eps_list": [0.0]}
    assert floor(cfg, "default") == DEFAULT_ABS_TOL
    monkeypatch.setenv("WARPCHECK_TOL", "1e-3")
    assert default_abs_tol() == 1e-3
    assert floor(cfg, "env") == 1e-3
    assert floor(dict(cfg, tolerance={"abs": 1e-2}), "config") == 1e-2
    monkeypatch.delenv("WARPCHECK_TOL")
    assert default_abs_tol() == DEFAULT_ABS_TOL


def test_plot_series(tmp_path, capsys):
    _, out = _run(EXAMPLES / "flow_unit_normal_h2.json", tmp_path)
    assert cli.main(["plot", str(out / "report.json"), "--series", "q_vs_t"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0]["series"] == "Q" and float(rows[0]["x"]) == 0.0
    q = [float(r["y"]) for r in rows]
    assert all(b <= a + 1e-10 for a, b in zip(q, q[1:]))

    sweep = tmp_path / "sweep"
    sweep.mkdir()
    _, out = _run(EXAMPLES / "hk_sweep_perturbed_h3.json", sweep)
    target = tmp_path / "deficit.csv"
    assert cli.main(["plot", str(out / "report.json"), "--series", "deficit_vs_eps",
                     "--out", str(target)]) == 0
    rows = _rows(target.read_text())
    assert [float(r["x"]) for r in rows] == [-1.0, -0.5, 0.0, 0.5, 1.0]


def test_plot_substatic_is_flat_in_hyperbolic_space(tmp_path, capsys):
    _, out = _run(EXAMPLES / "substatic_h3.json", tmp_path)
    cli.main(["plot", str(out / "report.json"), "--series", "substatic"])
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 1000 and max(abs(float(r["y"])) for r in rows) <= 1e-10


def test_plot_missing_report(tmp_path):
    assert cli.main(["plot", str(tmp_path / "none.json"), "--series", "q_vs_t"]) == 1


def test_nan_is_written_as_null(tmp_path):
    _, out = _run(EXAMPLES / "hk_sweep_assumption_violated.json", tmp_path)
    text = (out / "report.json").read_text()
    assert "NaN" not in text
    json.loads(text)


def test_console_script(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"task": "substatic-scan", "manifold": H3}))
    proc = subprocess.run([sys.executable, "-m", "warpcheck.cli", "run", str(cfg), "--out",
                           str(tmp_path / "o"), "--verbose"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "substatic_scan" in proc.stderr
