import json
import subprocess
import sys
import time

import numpy as np
import pytest

from rggcross.cli import build_parser, main
from rggcross.geometry import ConvexBody
from rggcross.pointprocess import build_rgg, sample_poisson, write_graph


@pytest.mark.parametrize("cmd,flags", [
    ("constants", ["--d", "--body", "--plane", "--plane-seed", "--n-samples", "--seed", "--weight", "--out"]),
    ("predict", ["--constants", "--t", "--delta", "--schedule", "--out"]),
    ("experiment", ["--config", "--section", "--out-dir", "--workers", "--constants"]),
    ("search", ["--graph", "--K", "--seed", "--weight", "--out-dir"]),
])
def test_help_lists_every_flag(cmd, flags, capsys):
    with pytest.raises(SystemExit) as info:
        main([cmd, "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for f in flags:
        assert f in out


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main(["constants", "--d", "1", "--seed", "1", "--out", str(tmp_path / "c.json")]) == 2
    with pytest.raises(SystemExit) as info:
        main(["constants", "--d", "3"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["constants", "--d", "3", "--seed", "1", "--body", "sphere"])
    assert info.value.code == 2


def test_constants_deterministic_and_checked(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["constants", "--d", "3", "--body", "ball", "--n-samples", "2e4", "--seed", "42"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rec = json.loads(a.read_text())
    assert rec["checks"]["c_d_cap"] == "PASS"
    assert {"c_d", "c_prime_d", "I2", "I3", "S1", "S2", "N", "seed", "d", "W"} <= set(rec)
    man = json.loads((tmp_path / "a.json.manifest.json").read_text())
    assert man["command"] == "constants" and man["seed"] == 42 and man["outputs"] == [str(a)]
    assert "PASS c_d_cap" in capsys.readouterr().out


def test_constants_d2_i2_exact(tmp_path):
    out = tmp_path / "c.json"
    assert main(["constants", "--d", "2", "--n-samples", "1e4", "--seed", "1", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["I2"] == {"value": 1.0, "std_error": 0.0}


def test_predict(tmp_path, capsys):
    c = tmp_path / "c.json"
    main(["constants", "--d", "3", "--n-samples", "1e4", "--seed", "1", "--out", str(c)])
    capsys.readouterr()
    assert main(["predict", "--constants", str(c), "--t", "1e3", "--schedule", "thermodynamic 5"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["t"] == 1000.0 and rec["delta"] == pytest.approx((5 / 1000) ** (1 / 3))
    assert rec["var_cr_lb"] < rec["var_cr_ub"]
    assert main(["predict", "--constants", str(c), "--t", "1e3"]) == 2
    assert main(["predict", "--constants", str(tmp_path / "missing.json"), "--t", "1", "--delta", "1"]) == 2


def test_smoke_experiment(tmp_path, capsys):
    start = time.perf_counter()
    code = main(["experiment", "--config", "smoke", "--out-dir", str(tmp_path / "run"), "--workers", "1"])
    assert time.perf_counter() - start < 10
    assert code in (0, 1)
    for name in ("raw.csv", "summary.json", "checks.json", "manifest.json"):
        assert (tmp_path / "run" / name).exists()
    checks = json.loads((tmp_path / "run" / "checks.json").read_text())
    assert [c["name"] for c in checks] == ["lln", "variance_sandwich", "correlation", "cov_scaling"]
    raw = (tmp_path / "run" / "raw.csv").read_text().splitlines()
    assert raw[0] == "t,delta,rep,plane_id,n,m,cr,stress" and len(raw) == 5


def test_experiment_bad_config_names_key(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[x]\nbody = sphere\nd = 3\nschedule = fixed 0.1\nt_grid = 10\nreps = 2\nseed = 1\n")
    assert main(["experiment", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2
    assert "body" in capsys.readouterr().err
    assert main(["experiment", "--config", str(tmp_path / "nope.ini"), "--out-dir", str(tmp_path)]) == 2


def test_search_outputs(tmp_path, capsys):
    rng = np.random.default_rng(0)
    G = build_rgg(sample_poisson(ConvexBody.ball(3), 200, rng), 0.45)
    path = tmp_path / "g.txt"
    write_graph(G, path)
    assert main(["search", "--graph", str(path), "--K", "10", "--seed", "3", "--out-dir", str(tmp_path / "s")]) == 0
    rec = json.loads((tmp_path / "s" / "search.json").read_text())
    assert rec["K"] == 10 and rec["best_cr"] <= rec["median_cr"]
    if G.m >= 7 * G.n:
        assert rec["ratio_bound"] >= 1
    lines = (tmp_path / "s" / "best_drawing.txt").read_text().splitlines()
    assert int(lines[0]) == G.n and int(lines[G.n + 1]) == G.m


def test_search_d2_ignores_k(tmp_path):
    rng = np.random.default_rng(0)
    G = build_rgg(ConvexBody.cube(2).sample(rng, 50), 0.2)
    path = tmp_path / "g.txt"
    write_graph(G, path)
    assert main(["search", "--graph", str(path), "--K", "7", "--seed", "1", "--out-dir", str(tmp_path / "s")]) == 0
    assert json.loads((tmp_path / "s" / "search.json").read_text())["K"] == 1


def test_search_parse_error(tmp_path, capsys):
    path = tmp_path / "g.txt"
    path.write_text("3 2 0.1\n0 0 0\n0 zero 0\n")
    assert main(["search", "--graph", str(path), "--seed", "1", "--out-dir", str(tmp_path)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "rggcross", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "rggcross" in out.stdout


def test_parser_builds():
    assert build_parser().prog == "rggcross"
