import json
import subprocess
import sys

import numpy as np
import pytest

from cechmorse.cli import main

from conftest import EQUILATERAL, OBTUSE, SCALENE, TWO_POINTS


def _csv(tmp_path, name, X):
    p = tmp_path / name
    p.write_text("".join(",".join(repr(float(v)) for v in r) + "\n" for r in X))
    return str(p)


def _config(tmp_path, d, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def test_filtration_two_points(tmp_path, capsys):
    assert main(["filtration", "--input", _csv(tmp_path, "a.csv", TWO_POINTS), "--max-dim", "1"]) == 0
    rows = capsys.readouterr().out.strip().split("\n")
    assert rows == ["0.0,0,0,singleton", "0.0,0,1,singleton", "1.0,1,0;1,singleton"]


def test_filtration_obtuse_to_dir(tmp_path):
    out = tmp_path / "out"
    assert main(["filtration", "--input", _csv(tmp_path, "o.csv", OBTUSE), "--max-dim", "2", "--out", str(out)]) == 0
    rows = (out / "filtration.csv").read_text().strip().split("\n")
    assert len(rows) == 7
    assert sum("interval[0;1|0;1;2]" in r for r in rows) == 2
    steps = json.loads((out / "steps.json").read_text())
    assert steps["groups"] == 6 and len(steps["intervals"]) == 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "filtration" and len(next(iter(manifest["inputs"].values()))) == 64


def test_malformed_row_is_usage_error(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0,0\n1,oops\n")
    assert main(["filtration", "--input", str(p), "--max-dim", "1"]) == 3


def test_missing_file_and_bad_flags(tmp_path):
    assert main(["verify", "--input", str(tmp_path / "nope.csv")]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["filtration", "--max-dim", "1"])
    assert exc.value.code == 3
    assert main(["filtration", "--input", _csv(tmp_path, "s.csv", SCALENE), "--max-dim", "5"]) == 3


def test_verify_scalene_passes(tmp_path, capsys):
    assert main(["verify", "--input", _csv(tmp_path, "s.csv", SCALENE)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is True


def test_verify_equilateral_is_tie(tmp_path, capsys):
    assert main(["verify", "--input", _csv(tmp_path, "e.csv", EQUILATERAL)]) == 2
    capsys.readouterr()
    # passes the general-position screen, fails on the tie itself
    assert main(["filtration", "--input", _csv(tmp_path, "e.csv", EQUILATERAL), "--max-dim", "2"]) == 2


def test_verify_collinear_is_degenerate(tmp_path, capsys):
    assert main(["verify", "--input", _csv(tmp_path, "c.csv", [(0, 0), (1, 0), (2, 0)])]) == 2
    assert "affinely_dependent" in capsys.readouterr().out


def test_verify_random_cloud(tmp_path):
    X = np.random.default_rng(20).random((20, 2))
    out = tmp_path / "v"
    assert main(["verify", "--input", _csv(tmp_path, "r.csv", X), "--out", str(out)]) == 0
    diagram = json.loads((out / "diagram.json").read_text())
    assert [d["q"] for d in diagram] == [0, 1]
    assert len(diagram[0]["points"]) == 20 and diagram[0]["points"][-1][1] == "inf"


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    import cechmorse.cli as cli
    from cechmorse.identities import Check, IdentityReport

    real = cli.verify_cloud

    def broken(cloud, q_max):
        report, diagram = real(cloud, q_max)
        return report.extend(IdentityReport([Check("injected", 0, 1, 0)])), diagram

    monkeypatch.setattr(cli, "verify_cloud", broken)
    assert main(["verify", "--input", _csv(tmp_path, "s.csv", SCALENE)]) == 1


def test_experiment_gamma(tmp_path, capsys):
    cfg = _config(tmp_path, {"kind": "gamma", "N": 2, "k": 1, "samples": 10000, "seed": 1})
    assert main(["experiment", "--config", cfg]) == 0
    est = json.loads(capsys.readouterr().out)
    assert est["N"] == 2 and est["k"] == 1 and est["estimate"] == pytest.approx(2.0)


def test_experiment_unknown_kind(tmp_path):
    assert main(["experiment", "--config", _config(tmp_path, {"kind": "nope"})]) == 3
    assert main(["experiment", "--config", _config(tmp_path, {"kind": "slln", "what": 1})]) == 3
    p = tmp_path / "broken.json"
    p.write_text("{")
    assert main(["experiment", "--config", str(p)]) == 3


@pytest.mark.parametrize("cfg", [
    {"kind": "slln", "n_values": [50], "trials": 2},
    {"kind": "pd_mass", "n_values": [20], "trials": 2},
    {"kind": "lifetime", "n_values": [20], "trials": 2},
    {"kind": "concentration", "n_values": [30, 60], "trials": 4},
    {"kind": "gamma", "N": 3, "k": 2, "samples": 2000},
])
def test_experiments_are_byte_identical(tmp_path, cfg):
    path = _config(tmp_path, cfg)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["experiment", "--config", path, "--seed", "3", "--out", str(a)]) == 0
    assert main(["experiment", "--config", path, "--seed", "3", "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        if name != "manifest.json":
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    for m in (ma, mb):
        m.pop("wall_seconds")
        assert m.pop("argv")[-2] == "--out"
    assert ma == mb and ma["seed"] == 3
    meta = json.loads((a / "experiment.json").read_text())
    assert meta["config"]["kind"] == cfg["kind"] and "PCG64" in meta["generator"]


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cechmorse.cli", "verify", "--input",
                           _csv(tmp_path, "o.csv", OBTUSE)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["passed"] is True
