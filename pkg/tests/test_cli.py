import json
import math
import re

import numpy as np
import pytest

import ksgeo.ks
from ksgeo.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def summary_field(out, name):
    return re.search(rf"{name}=(\S+)", out).group(1)


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    monkeypatch.delenv("KSGEO_CONFIG", raising=False)


# --- geodesic ---------------------------------------------------------------

def test_geodesic_infall(capsys, tmp_path):
    out_file = tmp_path / "infall.csv"
    code, out, _ = run(capsys, "geodesic", "--mass", "1", "--spin", "0", "--energy", "0", "--angmom", "0",
                       "--r0", "2", "--direction", "infall", "--out", str(out_file))
    assert code == 0
    assert float(summary_field(out, "tau_span")) == pytest.approx(math.pi, abs=1e-6)
    assert out_file.read_text().startswith("tau,t,r,theta,phi,tdot,rdot,thetadot,phidot,residual\n")


def test_geodesic_defaults_are_canonical_infall(capsys):
    code, out, _ = run(capsys, "geodesic")
    assert code == 0
    assert float(summary_field(out, "tau_span")) == pytest.approx(math.pi, abs=1e-6)
    assert "termination=terminal_radius" in out


def test_geodesic_bad_spin(capsys):
    code, _, err = run(capsys, "geodesic", "--mass", "1", "--spin", "1.5")
    assert code == 2
    assert "spin exceeds mass" in err


def test_geodesic_kerr_turning_points(capsys):
    code, out, _ = run(capsys, "geodesic", "--mass", "1", "--spin", "0.6", "--energy", "0", "--angmom", "0",
                       "--r0", "1.8")
    assert code == 0
    tps = [float(v) for v in re.search(r"turning_points=\[([^\]]*)\]", out).group(1).split(",")]
    assert tps == pytest.approx([0.2, 1.8], abs=1e-10)


def test_geodesic_forbidden_start_is_bad_input(capsys):
    code, _, err = run(capsys, "geodesic", "--r0", "3")
    assert code == 2 and "r0" in err


def test_geodesic_numerical_failure_exit_3(capsys):
    # an L != 0 plunge cannot reach r = 1e-6: the centrifugal term stalls the step size
    code, _, err = run(capsys, "geodesic", "--energy", "0.95", "--angmom", "3.9")
    assert code == 3
    assert "integration failed" in err


def test_geodesic_json_format_from_suffix(capsys, tmp_path):
    path = tmp_path / "t.json"
    assert run(capsys, "geodesic", "--out", str(path))[0] == 0
    doc = json.loads(path.read_text())
    assert doc["schema_version"] == 1 and doc["samples"][0]["r"] == 2.0


# --- config precedence ------------------------------------------------------

def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("mass = 2.0\n[geodesic]\nr0 = 4.0\n")
    code, out, _ = run(capsys, "--config", str(cfg), "geodesic")
    assert code == 0
    assert float(summary_field(out, "tau_span")) == pytest.approx(2 * math.pi, abs=1e-6)
    code, out, _ = run(capsys, "--config", str(cfg), "geodesic", "--mass", "1", "--r0", "2")
    assert float(summary_field(out, "tau_span")) == pytest.approx(math.pi, abs=1e-6)


def test_config_from_environment(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "env.toml"
    cfg.write_text("[geodesic]\nmass = 0.5\nr0 = 1.0\n")
    monkeypatch.setenv("KSGEO_CONFIG", str(cfg))
    code, out, _ = run(capsys, "geodesic")
    assert code == 0
    assert float(summary_field(out, "tau_span")) == pytest.approx(math.pi / 2, abs=1e-6)


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[geodesic]\nspeed = 3\n")
    code, _, err = run(capsys, "--config", str(cfg), "geodesic")
    assert code == 2 and "speed" in err


def test_config_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "--config", str(tmp_path / "nope.toml"), "geodesic")
    assert code == 2


# --- ks-check ---------------------------------------------------------------

def test_ks_check_passes(capsys):
    code, out, _ = run(capsys, "ks-check", "--samples", "10000", "--seed", "42")
    assert code == 0
    report = json.loads(out)
    assert report["passed"] and report["schema_version"] == 1
    for name in ("orthogonality", "position_norm", "velocity_norm", "fourth_row"):
        assert report["identities"][name]["max_residual"] < 1e-12
    assert report["identities"]["shell_transport"]["max_residual"] <= 1e-10


def test_ks_check_zero_samples(capsys):
    assert run(capsys, "ks-check", "--samples", "0")[0] == 2


def test_ks_check_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "ks-check", "--samples", "2000", "--seed", "7", "--out", str(a))[0] == 0
    assert run(capsys, "ks-check", "--samples", "2000", "--seed", "7", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def corrupted_matrix(original):
    def flipped(s):
        A = np.array(original(s))
        A[..., 0, 0] *= -1
        return A
    return flipped


def test_ks_check_detects_corrupted_matrix(capsys, monkeypatch):
    monkeypatch.setattr(ksgeo.ks, "ks_matrix", corrupted_matrix(ksgeo.ks.ks_matrix))
    code, out, err = run(capsys, "ks-check", "--samples", "500", "--seed", "1")
    assert code == 4
    assert "orthogonality" in err
    assert not json.loads(out)["identities"]["orthogonality"]["passed"]


def test_verify_detects_corrupted_matrix(capsys, monkeypatch):
    monkeypatch.setattr(ksgeo.ks, "ks_matrix", corrupted_matrix(ksgeo.ks.ks_matrix))
    code, out, err = run(capsys, "verify", "--quick")
    assert code == 5
    assert "failed criterion 6" in err and "orthogonality" in err
    report = json.loads(out)
    assert not next(c for c in report["criteria"] if c["id"] == 6)["passed"]


# --- spectrum ---------------------------------------------------------------

def test_spectrum_levels(capsys, tmp_path):
    path = tmp_path / "spec.json"
    code, out, _ = run(capsys, "spectrum", "--n-max", "3", "--grid-points", "2001", "--grid-halfwidth", "8",
                       "--out", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    assert [lv["degeneracy"] for lv in doc["levels"]] == [1, 4, 10, 20]
    assert [lv["numeric_energy"] for lv in doc["levels"]] == pytest.approx([4, 6, 8, 10], abs=1e-3)
    assert doc["claim_comparison"] == pytest.approx(3.0, abs=1e-3)
    assert "claim_comparison=" in out


def test_spectrum_stdout_when_no_out(capsys):
    code, out, _ = run(capsys, "spectrum", "--n-max", "1")
    assert code == 0 and json.loads(out)["schema_version"] == 1


def test_spectrum_grid_too_small(capsys):
    code, _, err = run(capsys, "spectrum", "--n-max", "3", "--grid-halfwidth", "1")
    assert code == 3 and "grid too small" in err


def test_spectrum_even_points_is_bad_input(capsys):
    assert run(capsys, "spectrum", "--grid-points", "2000")[0] == 2
