import json
import subprocess
import sys

import pytest

from modone.cli import main


def read(path):
    return path.read_bytes()


def test_corr_example(tmp_path):
    out = tmp_path / "corr"
    assert main(["corr", "--alpha", "7.3", "--N", "100000", "--k", "2", "--window", "box:-0.5:0.5", "--out", str(out)]) == 0
    lines = (out / "corr.csv").read_text().splitlines()
    assert lines[0] == "param,value,reference"
    param, value, ref = lines[1].split(",")
    assert float(param) == 7.3 and float(ref) == 1.0
    assert abs(float(value) - 1.0) < 0.05
    man = json.loads((out / "manifest.json").read_text())
    params = man["parameters"]
    for key in ("alpha", "N", "k", "window", "beta", "precision", "resolved_precision"):
        assert key in params
    assert params["resolved_precision"]["target_abs_err"] == 2.0**-60


def test_variance_example_is_byte_identical(tmp_path):
    args = ["variance", "--A", "8", "--k", "2", "--N-grid", "512,1024,2048,4096", "--samples", "64", "--seed", "42", "--workers", "1"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    lines = (a / "variance.csv").read_text().splitlines()
    assert lines[0] == "N,variance,stderr" and len(lines) == 5
    assert main(["--from-manifest", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in ("variance.csv", "experiment.json", "manifest.json"):
        assert read(a / name) == read(b / name)
    assert not (a / "checkpoint.json").exists()


def test_variance_resumes_from_checkpoint(tmp_path):
    args = ["variance", "--A", "8", "--N-grid", "64,128,256", "--samples", "3", "--seed", "7", "--workers", "1"]
    full = tmp_path / "full"
    main(args + ["--out", str(full)])
    rows = json.loads((full / "experiment.json").read_text())["estimates"]
    part = tmp_path / "part"
    part.mkdir()
    plan = json.loads((full / "experiment.json").read_text())["plan"]
    # a checkpoint whose first row is deliberately marked; it must be reused, not recomputed
    marked = dict(rows[0], variance=123.0)
    (part / "checkpoint.json").write_text(json.dumps({"plan": plan, "rows": [marked]}))
    main(args + ["--out", str(part)])
    got = json.loads((part / "experiment.json").read_text())["estimates"]
    assert got[0]["variance"] == 123.0 and got[1:] == rows[1:]


def test_oscint_example(tmp_path):
    out = tmp_path / "o"
    assert main(["oscint", "--u", "3,-7", "--x", "10,100", "--A", "7", "--N", "100", "--eps", "0", "--out", str(out)]) == 0
    rep = json.loads((out / "oscint.json").read_text())
    assert rep["lambda"] == pytest.approx(6.3e14, rel=1e-12)
    assert rep["integral_abs"] <= 1


def test_oscint_curve_and_ensemble(tmp_path):
    out = tmp_path / "fig"
    assert main(["oscint", "--u", "5135,-5135,-10000,10000", "--x", "10000,1000,9500,7890", "--A", "7.5",
                 "--N", "10000", "--curve", "51", "--out", str(out)]) == 0
    assert (out / "curve.csv").read_text().startswith("alpha,d1,d2,d3,d4")
    ens = tmp_path / "ens"
    assert main(["oscint", "--ensemble", "5", "--A", "2", "--N", "1000", "--seed", "3", "--grid-size", "200", "--out", str(ens)]) == 0
    assert len(json.loads((ens / "oscint.json").read_text())) == 5


def test_gen_gaps_fourier_report(tmp_path):
    g = tmp_path / "gen"
    assert main(["gen", "--alpha", "2.7", "--N", "200", "--out", str(g)]) == 0
    gp = tmp_path / "gaps"
    assert main(["gaps", "--points", str(g / "points.bin"), "--x-grid", "0:2:0.5", "--K", "1", "--circular", "--out", str(gp)]) == 0
    rows = [r.split(",") for r in (gp / "gaps.csv").read_text().splitlines()[1:]]
    assert len(rows) == 5
    assert all(float(lo) <= float(gv) <= float(hi) for _, gv, lo, hi in rows)
    f = tmp_path / "four"
    assert main(["fourier", "--alpha", "7.3", "--N", "300", "--eps", "0.1", "--out", str(f)]) == 0
    cv = json.loads((f / "crossval.json").read_text())[0]
    assert cv["pass"] is True
    r = tmp_path / "rep"
    assert main(["report", str(g / "manifest.json"), str(f / "manifest.json"), "--out", str(r)]) == 0
    assert len((r / "summary.csv").read_text().splitlines()) == 3


def test_env_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv("MODONE_OUT", str(tmp_path / "env"))
    assert main(["gen", "--alpha", "1.5", "--N", "10"]) == 0
    assert (tmp_path / "env" / "points.bin").exists()


def test_exit_codes(tmp_path, capsys):
    # usage
    with pytest.raises(SystemExit) as e:
        main(["corr", "--bogus"])
    assert e.value.code == 2
    # domain errors map to usage as well
    assert main(["corr", "--alpha", "2", "--N", "10", "--window", "box:-20:20", "--out", str(tmp_path)]) == 2
    # precision infeasible
    assert main(["gen", "--alpha", "8", "--N", "1000", "--precision", "53", "--target-err", "1e-10", "--out", str(tmp_path)]) == 3
    # budget exceeded
    assert main(["oscint", "--u", "1,-1", "--x", "2,3", "--A", "0.5", "--N", "10", "--max-panels", "1", "--out", str(tmp_path)]) == 4
    # I/O: output path is an existing file
    f = tmp_path / "file"
    f.write_text("x")
    assert main(["gen", "--alpha", "1.5", "--N", "10", "--out", str(f)]) == 5
    assert "error" in capsys.readouterr().err.lower()


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "modone", "gen", "--alpha", "1.5", "--N", "5", "--out", str(tmp_path)],
                       capture_output=True)
    assert r.returncode == 0
