import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from warpball.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_poles_unperturbed(tmp_path, capsys):
    code, out, _ = _run(capsys, "poles", "--config", str(CONFIGS / "unperturbed.json"),
                        "--output-dir", str(tmp_path))
    assert code == 0
    assert json.loads(out)["summary"]["counts"]["alpha"] == 10
    rows = _rows(tmp_path / "poles.csv")
    assert len(rows) == 10 and {r["family"] for r in rows} == {"alpha"}
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert {"command", "config_hash", "versions", "artifacts", "wall_time_s"} <= set(manifest)
    assert set(manifest["artifacts"]) == {"poles.csv", "poles.json"}


def test_verify_asymptotics_columns(tmp_path, capsys):
    code, _, _ = _run(capsys, "verify-asymptotics", "--config", str(CONFIGS / "cf3.json"),
                      "--region=-8:1:-16:16", "--output-dir", str(tmp_path))
    assert code == 0
    with open(tmp_path / "beta.csv") as fh:
        header = fh.readline().strip().split(",")
    assert header == ["j", "beta_re", "beta_im", "pred_re", "pred_im", "re_deviation",
                      "spacing_over_pi_a", "conjugate_found"]
    with open(tmp_path / "alpha.csv") as fh:
        assert fh.readline().strip() == "k,alpha_re,alpha_im,deviation"
    report = json.loads((tmp_path / "asymptotics.json").read_text())
    assert report["beta_pairs"] >= 3


def test_missing_key_reports_field(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"warp": {"n": 3, "lambda": 1.0, "a": 1.0, "template": {"jump": 1.0}}}))
    code, out, err = _run(capsys, "kernel", "--config", str(cfg), "--output-dir", str(tmp_path / "o"))
    assert code == 2
    assert out == ""
    info = json.loads(err)
    assert info["error"] == "config_error" and info["field"] == "warp.p"


def test_bad_numerics_flag(tmp_path, capsys):
    code, _, err = _run(capsys, "kernel", "--config", str(CONFIGS / "cf3.json"),
                        "--set", "numerics.N=-4", "--output-dir", str(tmp_path))
    assert code == 2 and json.loads(err)["field"] == "numerics.N"


def test_artifacts_are_deterministic(tmp_path, capsys):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert _run(capsys, "jost", "--config", str(CONFIGS / "cf3.json"), "--grid=-3:3:-3:3:7",
                    "--output-dir", str(d))[0] == 0
    names = sorted(p.name for p in dirs[0].iterdir())
    assert names == ["jost.csv", "jost.json", "jost_m.csv", "manifest.json"]
    for name in names:
        if name != "manifest.json":
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
    m0, m1 = (json.loads((d / "manifest.json").read_text()) for d in dirs)
    assert m0["config_hash"] == m1["config_hash"] and m0["artifacts"] == m1["artifacts"]


def test_jost_csv_layout(tmp_path, capsys):
    _run(capsys, "jost", "--config", str(CONFIGS / "unperturbed.json"), "--grid", "0:1:0:1:3",
         "--output-dir", str(tmp_path))
    rows = _rows(tmp_path / "jost.csv")
    assert list(rows[0]) == ["re", "im", "psi_re", "psi_im", "abs_psi"]
    assert len(rows) == 9
    # J_0(1)
    assert float(rows[0]["psi_re"]) == pytest.approx(0.7651976865579666, rel=1e-13)


def test_output_dir_precedence(tmp_path, capsys, monkeypatch):
    env_dir, flag_dir, cfg_dir = tmp_path / "env", tmp_path / "flag", tmp_path / "cfg"
    cfg = json.loads((CONFIGS / "unperturbed.json").read_text())
    cfg["outputs"] = {"directory": str(cfg_dir)}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert _run(capsys, "potential", "--config", str(path))[0] == 0
    assert (cfg_dir / "manifest.json").exists()
    monkeypatch.setenv("WARPBALL_OUTPUT_DIR", str(env_dir))
    assert _run(capsys, "potential", "--config", str(path))[0] == 0
    assert (env_dir / "manifest.json").exists()
    assert _run(capsys, "potential", "--config", str(path), "--output-dir", str(flag_dir))[0] == 0
    assert (flag_dir / "manifest.json").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "warpball", "kernel", "--config",
                           str(CONFIGS / "unperturbed.json"), "--N", "128", "--output-dir", str(tmp_path)],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["status"] == "ok"


def test_numerical_failure_writes_error_json(tmp_path, capsys):
    code, _, err = _run(capsys, "marchenko-roundtrip", "--config", str(CONFIGS / "small_roundtrip.json"),
                        "--K-max", "5", "--set", "numerics.tail_tol=1e-6", "--output-dir", str(tmp_path))
    assert code == 5
    info = json.loads(err)
    assert info["exit_code"] == 5
    assert json.loads((tmp_path / "error.json").read_text()) == info
    assert not (tmp_path / "manifest.json").exists()
