import json

import numpy as np
import pytest

from lpsobolev import cli, io
from lpsobolev.geometry import lp_surface_measure
from lpsobolev.harness import CheckResult, random_polytope, random_pwa
from lpsobolev.pwa import cone_function


@pytest.fixture
def files(tmp_path, rng):
    P = random_polytope(2, rng)
    paths = {
        "poly": tmp_path / "poly.json",
        "poly2": tmp_path / "poly2.json",
        "measure": tmp_path / "measure.json",
        "fn": tmp_path / "fn.json",
        "fn3": tmp_path / "fn3.json",
        "cone": tmp_path / "cone.json",
    }
    io.save(P, paths["poly"])
    io.save(random_polytope(2, rng), paths["poly2"])
    io.save(lp_surface_measure(P, 1.5), paths["measure"])
    io.save(random_pwa(2, rng), paths["fn"])
    io.save(random_pwa(3, rng), paths["fn3"])
    io.save(cone_function(P), paths["cone"])
    return {k: str(v) for k, v in paths.items()}, P


def error_of(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_solve_minkowski(files, tmp_path, capsys):
    paths, P = files
    out = tmp_path / "out.json"
    trace = tmp_path / "trace.csv"
    code = cli.main(["solve-minkowski", "--measure", paths["measure"], "--p", "1.5",
                     "--out", str(out), "--trace", str(trace)])
    assert code == 0
    Q = io.load(out)
    assert np.allclose(Q.offsets, P.offsets, atol=1e-8)
    assert trace.read_text().startswith("iteration,objective,residual,step")


def test_normalized_square(tmp_path, capsys):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"dim": 2, "directions": [[1, 0], [0, 1], [-1, 0], [0, -1]],
                             "weights": [1, 1, 1, 1]}))
    assert cli.main(["solve-minkowski", "--measure", str(m), "--normalized"]) == 0
    Q = io.from_dict(json.loads(capsys.readouterr().out))
    assert np.allclose(Q.offsets, 1 / np.sqrt(2))


def test_sobolev_body_of_cone(files, capsys):
    paths, P = files
    assert cli.main(["sobolev-body", "--fn", paths["cone"], "--p", "3"]) == 0
    Q = io.from_dict(json.loads(capsys.readouterr().out))
    assert Q.volume == pytest.approx(P.volume, rel=1e-8)
    assert cli.main(["sobolev-body", "--fn", paths["cone"], "--normalized"]) == 0


def test_affine_energy_and_symmetrize(files, tmp_path, capsys):
    paths, _ = files
    assert cli.main(["affine-energy", "--fn", paths["fn"], "--p", "2.5", "--lambda", "0.2",
                     "--level", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["constant_mode"] == "calibrated" and rep["level"] == 2
    assert rep["convergence_delta"] < 1e-2 * rep["value"]
    radial = tmp_path / "radial.json"
    prof = tmp_path / "profile.csv"
    assert cli.main(["symmetrize", "--fn", paths["fn"], "--out", str(radial), "--profile", str(prof)]) == 0
    assert prof.read_text().startswith("s,f_star,slope")
    assert cli.main(["affine-energy", "--fn", str(radial), "--p", "2.5", "--level", "2"]) == 0
    star = json.loads(capsys.readouterr().out)
    assert star["value"] <= rep["value"]
    assert cli.main(["symmetrize", "--fn", paths["fn"], "--body", paths["poly"]]) == 0
    assert json.loads(capsys.readouterr().out)["shape"]["type"] == "polytope"


@pytest.mark.parametrize("args", [
    ["--name", "minkowski", "--poly", "{poly}", "--poly2", "{poly2}", "--p", "2.5"],
    ["--name", "minkowski-problem", "--poly", "{poly}", "--p", "1.5"],
    ["--name", "petty", "--poly", "{poly}", "--p", "1.5", "--level", "2"],
    ["--name", "normalized-petty", "--poly", "{poly}", "--level", "2"],
    ["--name", "sobolev-body", "--fn", "{fn3}", "--p", "2"],
    ["--name", "affine-sobolev", "--fn", "{fn3}", "--p", "2", "--level", "2"],
    ["--name", "polya-szego", "--fn", "{fn}", "--p", "3", "--level", "2"],
    ["--name", "valuation", "--fn", "{fn}", "--fn2", "{cone}", "--p", "3"],
    ["--name", "morrey", "--fn", "{fn}", "--p", "3", "--level", "2"],
    ["--name", "moser-trudinger", "--fn", "{fn}", "--level", "2"],
    ["--name", "symmetrization-structure", "--fn", "{fn}", "--poly", "{poly}", "--p", "3"],
])
def test_check_commands(files, capsys, args):
    paths, _ = files
    code = cli.main(["check"] + [a.format(**paths) for a in args])
    out = json.loads(capsys.readouterr().out)
    assert code == 0 and out["passed"]


def test_check_failure_exit_code(files, capsys, monkeypatch):
    paths, _ = files
    bad = CheckResult("minkowski", "0" * 16, 1.0, 2.0, 0.5, False, 1e-9)
    monkeypatch.setattr(cli, "check_minkowski_ineq", lambda *a: bad)
    code = cli.main(["check", "--name", "minkowski", "--poly", paths["poly"],
                     "--poly2", paths["poly2"], "--p", "2"])
    assert code == 1


def test_input_errors(files, tmp_path, capsys):
    paths, _ = files
    assert cli.main(["solve-minkowski", "--measure", str(tmp_path / "nope.json"), "--p", "2"]) == 2
    assert error_of(capsys)["error"] == "input"
    assert cli.main(["check", "--name", "petty", "--poly", paths["poly"]]) == 2
    half = tmp_path / "half.json"
    half.write_text(json.dumps({"dim": 2, "directions": [[1, 0], [0, 1]], "weights": [1, 1]}))
    assert cli.main(["solve-minkowski", "--measure", str(half), "--p", "1.5"]) == 2
    assert error_of(capsys)["error"] == "hemisphere"
    with pytest.raises(SystemExit) as info:
        cli.main(["affine-energy", "--fn", paths["fn"], "--p", "0.5"])
    assert info.value.code == 2


def test_not_converged(files, capsys, monkeypatch):
    paths, _ = files
    monkeypatch.setenv("LPSOBOLEV_MAX_ITERS", "1")
    monkeypatch.setenv("LPSOBOLEV_RESIDUAL_TOL", "1e-14")
    assert cli.main(["sobolev-body", "--fn", paths["fn"], "--p", "1.5"]) == 3
    assert error_of(capsys)["error"] == "not_converged"
    monkeypatch.setenv("LPSOBOLEV_MAX_ITERS", "many")
    assert cli.main(["sobolev-body", "--fn", paths["fn"], "--p", "1.5"]) == 2


def test_suite_and_export(tmp_path, capsys):
    spec = tmp_path / "suite.json"
    spec.write_text(json.dumps({"corpora": [
        {"name": "small", "dim": 2, "count": 2, "seed": 3, "generator": "cone-family",
         "checks": ["sobolev-body", "polya-szego"], "include_adversarial": True}]}))
    report, table = tmp_path / "r.json", tmp_path / "r.csv"
    assert cli.main(["suite", "--spec", str(spec), "--out", str(report), "--csv", str(table)]) == 0
    data = json.loads(report.read_text())
    assert data["summary"]["violations"] == 0
    assert all(r["extras"]["corpus"] == "small" for r in data["results"])
    assert "runtime_ms" not in data["results"][0]
    assert table.read_text().splitlines()[0] == "check,digest,lhs,rhs,ratio,pass"
    # reproducible byte for byte
    again = tmp_path / "again.json"
    assert cli.main(["suite", "--spec", str(spec), "--out", str(again)]) == 0
    assert again.read_text() == report.read_text()
    assert cli.main(["export-plot", "--kind", "ratios", "--input", str(report), "--bins", "4"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "check,bin_lo,bin_hi,count" and len(lines) == 1 + 2 * 4
    spec.write_text(json.dumps([{"dim": 2, "count": 1, "seed": 0, "generator": "nope"}]))
    assert cli.main(["suite", "--spec", str(spec)]) == 2


def test_export_trace_and_profile(files, tmp_path, capsys):
    paths, _ = files
    assert cli.main(["export-plot", "--kind", "trace", "--input", paths["measure"], "--p", "1.5"]) == 0
    assert capsys.readouterr().out.startswith("iteration,")
    radial = tmp_path / "g.json"
    assert cli.main(["symmetrize", "--fn", paths["fn"], "--grid", "64", "--out", str(radial)]) == 0
    assert cli.main(["export-plot", "--kind", "profile", "--input", str(radial)]) == 0
    assert capsys.readouterr().out.startswith("s,f_star,slope")


def test_default_suite_file_parses():
    specs = cli.load_suite_spec()
    assert {s.dim for s in specs} == {2, 3}
    assert any(s.include_adversarial for s in specs)


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "lpsobolev", "solve-minkowski", "--measure",
                           str(tmp_path / "missing.json"), "--p", "2"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stderr)["error"] == "input"
