import csv
import io
import json
import os
from pathlib import Path

import numpy as np
import pytest

from decmaxwell.cli import load_config, main, parse_config
from decmaxwell.complex import load_complex, make_torus_lattice
from decmaxwell.errors import ConfigError
from decmaxwell.maxwell import check_constraints, load_maxwell

ROOT = Path(__file__).resolve().parents[1]
DEFAULT = ROOT / "configs" / "default.json"


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def _cfg(tmp_path, **over):
    doc = json.loads(DEFAULT.read_text())
    doc.update(over)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return p


def test_shipped_configs_parse():
    for p in (ROOT / "configs").glob("*.json"):
        load_config(p)


def test_betti(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["betti", "--config", str(DEFAULT), "--out", str(out)]) == 0
    rows = _rows(out / "betti.csv")
    assert rows[0] == ["k", "b_k", "smallest_nonzero_eigenvalue"]
    assert [(r[0], r[1]) for r in rows[1:]] == [("0", "1"), ("1", "2"), ("2", "1")]
    assert "k,b_k" in capsys.readouterr().out


def test_mesh_gen(tmp_path):
    out = tmp_path / "o"
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"mesh": {"generator": "icosphere", "params": {"subdivisions": 0, "radius": 1.0}}}))
    assert main(["mesh-gen", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    m = load_complex(out / "mesh.json")
    assert m.counts == (12, 30, 20)
    rows = _rows(out / "validation.csv")
    assert rows[0] == ["name", "statistic", "threshold", "pass"]
    assert all(r[3] == "pass" for r in rows[1:])


def test_all_passes(tmp_path):
    out = tmp_path / "o"
    cfg = _cfg(tmp_path, trials=100)
    assert main(["all", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    rows = _rows(out / "report.csv")
    assert rows[0] == ["name", "statistic", "threshold", "pass"]
    assert len(rows) > 30
    assert all(r[3] == "pass" for r in rows[1:])
    stages = {r[0].split("/")[0] for r in rows[1:]}
    assert stages == {"mesh-gen", "betti", "decompose", "gauge-fix", "evolve", "build-state"}
    for rel in ("mesh.json", "betti.csv", "decompose.csv", "gauge_fix/fixed.maxwell",
                "evolve/energy.csv", "state/operators.json", "state/report.csv"):
        assert (out / rel).exists(), rel
    assert _rows(out / "evolve" / "energy.csv")[0] == ["t", "s", "E_s", "Etilde"]
    doc = json.loads((out / "state" / "operators.json").read_text())
    assert set(doc) == {"mu", "complex_hash", "order", "sizes", "matrices"}
    cp = doc["matrices"]["c_plus"]
    A = np.array(cp["re"]) + 1j * np.array(cp["im"])
    assert list(A.shape) == cp["shape"]
    assert np.linalg.norm(A @ A - A, 2) <= 1e-9


def test_determinism(tmp_path):
    cfg = _cfg(tmp_path, trials=20)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["all", "--config", str(cfg), "--out", str(out), "--quiet", "--seed", "7"]) == 0
        outs.append(out)
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(outs[1]) for p in outs[1].rglob("*") if p.is_file())
    for rel in files:
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel


def test_seed_changes_output(tmp_path):
    cfg = _cfg(tmp_path, trials=5)
    for seed in ("1", "2"):
        assert main(["gauge-fix", "--config", str(cfg), "--out", str(tmp_path / seed), "--quiet", "--seed", seed]) == 0
    a = (tmp_path / "1" / "gauge_fix" / "input.maxwell").read_bytes()
    b = (tmp_path / "2" / "gauge_fix" / "input.maxwell").read_bytes()
    assert a != b


@pytest.mark.parametrize("doc", [
    "{not json",
    json.dumps({"mu": -1}),
    json.dumps({"mesh": {"generator": "klein_bottle", "params": {}}}),
    json.dumps({"time_grid": {"t0": 1, "t1": 0, "samples": 5}}),
    json.dumps({"trials": 0}),
    json.dumps({"surprise": 1}),
    json.dumps({"tolerances": {"ccr": -1}}),
    json.dumps([1, 2]),
])
def test_malformed_config(tmp_path, capsys, doc):
    cfg = tmp_path / "bad.json"
    cfg.write_text(doc)
    out = tmp_path / "o"
    assert main(["all", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("ERROR,config,")


def test_bad_flags(tmp_path, capsys):
    assert main(["betti", "--nonsense"]) == 2
    assert main(["levitate"]) == 2
    assert main(["evolve", "--out", str(tmp_path / "o"), "--sobolev-grid", "a,b"]) == 2
    assert main(["betti", "--config", str(tmp_path / "missing.json")]) == 2
    assert all(line.startswith("ERROR,config,") for line in capsys.readouterr().err.strip().splitlines())


def test_module_error_line(tmp_path, capsys):
    # unconstrained input to gauge-fix is a module error: exit 1
    src = tmp_path / "o1"
    assert main(["gauge-fix", "--config", str(DEFAULT), "--out", str(src), "--quiet"]) == 0
    text = (src / "gauge_fix" / "input.maxwell").read_text()
    lines = text.splitlines()
    # perturb one a0 value: breaks the Lorenz constraint
    i = lines.index("[a0]") + 3
    idx, re_, im = lines[i].split(",")
    lines[i] = f"{idx},{float(re_) + 1.0!r},{im}"
    bad = tmp_path / "bad.maxwell"
    bad.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["gauge-fix", "--config", str(DEFAULT), "--out", str(tmp_path / "o2"), "--input", str(bad)]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("ERROR,constraint_violation,")
    assert "\n" not in err


def test_gauge_fix_roundtrip(tmp_path):
    src = tmp_path / "o1"
    assert main(["gauge-fix", "--config", str(DEFAULT), "--out", str(src), "--quiet"]) == 0
    fixed_path = src / "gauge_fix" / "fixed.maxwell"
    out = tmp_path / "o2"
    assert main(["gauge-fix", "--config", str(DEFAULT), "--out", str(out), "--quiet", "--input", str(fixed_path)]) == 0
    rows = _rows(out / "gauge_fix" / "constraints.csv")
    assert all(r[3] == "pass" for r in rows[1:])
    mesh = make_torus_lattice(4, 4, 1.0, 1.0)
    assert check_constraints(load_maxwell(fixed_path, mesh)).radiation_ok


def test_evolve_flags(tmp_path):
    out = tmp_path / "o"
    assert main(["evolve", "--config", str(DEFAULT), "--out", str(out), "--quiet",
                 "--t0", "0", "--t1", "2", "--samples", "5", "--sobolev-grid", "0,1"]) == 0
    assert len(list((out / "evolve").glob("sample_*.maxwell"))) == 5
    rows = _rows(out / "evolve" / "energy.csv")
    assert len(rows) == 1 + 5 * 2
    assert {float(r[1]) for r in rows[1:]} == {0.0, 1.0}


def test_verify_state_tolerances(tmp_path, capsys):
    out = tmp_path / "o"
    # an impossible positivity threshold forces a failing row and exit 1
    code = main(["verify-state", "--config", str(DEFAULT), "--out", str(out), "--trials", "10",
                 "--tolerances", "positivity=1e6"])
    assert code == 1
    rows = {r[0]: r for r in _rows(out / "report.csv")[1:]}
    assert rows["positivity_plus"][3] == "fail"
    assert "ERROR,check_failed," in capsys.readouterr().err


def test_build_state_mesh_flag(tmp_path):
    m = tmp_path / "m"
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"mesh": {"generator": "icosphere", "params": {"subdivisions": 0, "radius": 1.0}}}))
    assert main(["mesh-gen", "--config", str(cfg), "--out", str(m), "--quiet"]) == 0
    out = tmp_path / "o"
    assert main(["build-state", "--mesh", str(m / "mesh.json"), "--out", str(out), "--trials", "10",
                 "--mu", "0.1", "--quiet"]) == 0
    doc = json.loads((out / "state" / "operators.json").read_text())
    assert doc["mu"] == 0.1
    assert doc["sizes"] == {"n0": 12, "n1": 30}


def test_parse_config_defaults():
    cfg = parse_config({})
    assert cfg.mesh["generator"] == "torus_lattice"
    assert cfg.trials == 500 and cfg.seed == 0
    with pytest.raises(ConfigError):
        parse_config({"seed": 2**64})
    with pytest.raises(ConfigError):
        parse_config({"sobolev_grid": []})


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    out = tmp_path / "o"
    r = subprocess.run([sys.executable, "-m", "decmaxwell", "betti", "--out", str(out)],
                       capture_output=True, text=True, cwd=tmp_path, env={**os.environ})
    assert r.returncode == 0
    assert list(csv.reader(io.StringIO(r.stdout)))[0] == ["k", "b_k", "smallest_nonzero_eigenvalue"]
