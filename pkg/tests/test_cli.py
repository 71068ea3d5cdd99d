import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from lambdamem.cli import DEFAULT_CONFIG, main
from lambdamem.io import read_grid


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    rows = list(csv.reader(open(path)))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


def manifest(out):
    data = json.loads((out / "manifest.json").read_text())
    for name in data["outputs"]:
        assert (out / name).stat().st_size > 0
    return data


N1_CONFIG = {
    "solitons": [{"xi": 0.0, "tau": 1.0, "c1": [1.0, 0.0], "c2": [0.05, 0.0]}],
    "medium": {"z_length": 3.0},
    "grid": {"t_window": [-12.0, 20.0]},
    "boundary": {"kind": "solitons"},
    "output": {"slices_z": [0.0, 3.0]},
}


# coeffs

def test_coeffs_zero_detuning_table(tmp_path):
    code, out = run(tmp_path, "coeffs", "--widths", "0,1,2,4,16", "--means", "0")
    assert code == 0
    header, data = read_csv(out / "coeffs.csv")
    assert header == ["width", "mean", "kappa1_over_kappa0", "delta1_over_kappa0"]
    assert np.all(np.diff(data[:, 2]) < 0)
    assert np.max(np.abs(data[:, 3])) < 1e-10
    m = manifest(out)
    assert m["subcommand"] == "coeffs" and "coeffs.csv" in m["outputs"]
    assert set(m) >= {"config_hash", "parameters", "wall_time", "solver_settings"}


def test_coeffs_without_broadening(tmp_path):
    code, out = run(tmp_path, "coeffs", "--no-broadening")
    _, data = read_csv(out / "coeffs.csv")
    assert code == 0 and data.tolist() == [[0.0, 0.0, 1.0, 0.0]]


def test_coeffs_refraction_antisymmetric_in_mean(tmp_path):
    code, out = run(tmp_path, "coeffs", "--widths", "0.5,2", "--means=-1.3,-0.6,0,0.6,1.3")
    _, data = read_csv(out / "coeffs.csv")
    for w in (0.5, 2.0):
        rows = data[data[:, 0] == w]
        assert np.allclose(rows[:, 3], -rows[::-1, 3], atol=1e-12)
        assert np.allclose(rows[:, 2], rows[::-1, 2], rtol=1e-12)


def test_output_is_bit_identical_across_runs(tmp_path):
    a = run(tmp_path, "coeffs", "--widths", "0,1,3", "--means", "0,1.3", name="a")[1]
    b = run(tmp_path, "coeffs", "--widths", "0,1,3", "--means", "0,1.3", name="b")[1]
    assert (a / "coeffs.csv").read_bytes() == (b / "coeffs.csv").read_bytes()
    path = write_config(tmp_path, N1_CONFIG)
    a = run(tmp_path, "simulate", "--config", path, "--grid-dz", "0.05", name="sa")[1]
    b = run(tmp_path, "simulate", "--config", path, "--grid-dz", "0.05", name="sb")[1]
    for name in ("numeric.lmg", "numeric_density.csv", "numeric_fields_z3.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LAMBDAMEM_OUT", str(tmp_path / "env"))
    assert main(["coeffs", "--no-broadening"]) == 0
    assert (tmp_path / "env" / "coeffs.csv").exists()


# analytic

def test_analytic_default_second_order(tmp_path):
    code, out = run(tmp_path, "analytic")
    assert code == 0
    m = manifest(out)
    dump = read_grid(out / "analytic.lmg")
    x1 = math.log(math.sqrt(1 - 0.025 ** 2) / 0.025)
    assert m["parameters"]["imprint_location"] == pytest.approx(x1 + math.log(3), abs=0.02)
    # the signal is carried in at T ~ 0, reappears with the retrieval pulse, then is stored again
    f = dump.fields
    sig = np.abs(f.omega_s)
    early, late = f.t_axis < 5, f.t_axis > 5
    stored = sig[:, early].max(axis=1)
    retrieved = sig[:, late].max(axis=1)
    assert stored[0] > 1 and stored[-1] < 1e-2
    k = int(np.argmax(retrieved))
    assert x1 - 1 < f.z_axis[k] < x1 + math.log(3) + 1
    assert retrieved[0] < 0.2 and retrieved[-1] < 0.1 * retrieved[k]


def test_analytic_control_only_beam(tmp_path):
    cfg = {"solitons": [{"xi": 0.0, "tau": 1.0, "c1": [0.0, 0.0], "c2": [1.0, 0.0]}], "medium": {"z_length": 5.0}}
    code, out = run(tmp_path, "analytic", "--config", write_config(tmp_path, cfg))
    f = read_grid(out / "analytic.lmg").fields
    assert code == 0
    assert np.max(np.abs(f.omega_s)) == 0
    assert np.allclose(np.abs(f.omega_c), np.abs(f.omega_c[0])[None, :], atol=1e-14)
    assert manifest(out)["parameters"]["imprint_location"] is None


def test_analytic_detuned_slice_is_lorentzian(tmp_path):
    code, out = run(tmp_path, "analytic", "--deltas", "0,0.75")
    assert code == 0
    _, on = read_csv(out / "analytic_density_delta0.csv")
    _, off = read_csv(out / "analytic_density_delta0.75.csv")
    assert off[:, 2].max() / on[:, 2].max() == pytest.approx(1 / (0.75 ** 2 + 1), rel=1e-9)


# simulate / compare

def test_simulate_compare_analytic_passes(tmp_path):
    code, out = run(tmp_path, "simulate", "--config", write_config(tmp_path, N1_CONFIG), "--compare-analytic")
    assert code == 0
    m = manifest(out)
    assert m["parameters"]["compare"]["passed"] is True
    assert {"numeric.lmg", "numeric_fields_z0.csv", "numeric_fields_z3.csv", "numeric_density.csv"} <= set(m["outputs"])


def test_compare_subcommand_reports_deltas(tmp_path):
    code, out = run(tmp_path, "compare", "--config", write_config(tmp_path, N1_CONFIG))
    assert code == 0
    report = json.loads((out / "compare.json").read_text())
    assert report["fields"]["omega_s"]["linf_rel"] < 1e-3
    assert report["density"]["linf"] < 1e-3


def test_failed_comparison_removes_outputs(tmp_path):
    path = write_config(tmp_path, N1_CONFIG)
    code, out = run(tmp_path, "simulate", "--config", path, "--compare-analytic",
                    "--grid-dt", "0.25", "--grid-dz", "0.25")
    assert code == 2
    assert not out.exists() or list(out.iterdir()) == []


def test_compare_needs_lossless_soliton_run(tmp_path):
    cfg = {**N1_CONFIG, "medium": {"z_length": 3.0, "gamma": 0.05}}
    code, _ = run(tmp_path, "simulate", "--config", write_config(tmp_path, cfg), "--compare-analytic")
    assert code == 3


def test_simulate_needs_config_and_boundary(tmp_path):
    assert run(tmp_path, "simulate")[0] == 1
    cfg = {k: v for k, v in N1_CONFIG.items() if k != "boundary"}
    assert run(tmp_path, "simulate", "--config", write_config(tmp_path, cfg))[0] == 1
    assert run(tmp_path, "simulate", "--config", str(tmp_path / "missing.json"))[0] == 1


def test_simulate_numerical_failure_exit_code(tmp_path):
    cfg = {**N1_CONFIG, "grid": {"t_window": [-12.0, 20.0], "dt": 4.0}}
    assert run(tmp_path, "simulate", "--config", write_config(tmp_path, cfg))[0] == 2


# scan

def test_storage_scan_writes_csv_per_variant(tmp_path):
    cfg = {"medium": {"z_length": 8.0}, "grid": {"t_window": [-15.0, 20.0], "dz": 0.04},
           "scan": {"kind": "storage", "theta_c_pi": [0.1, 0.3], "variants": [{"gamma": 0.0}, {"gamma": 0.1}]}}
    code, out = run(tmp_path, "scan", "--config", write_config(tmp_path, cfg))
    assert code == 0
    m = manifest(out)
    assert {"scan_storage_0.csv", "scan_storage_1.csv"} <= set(m["outputs"])
    header = next(csv.reader(open(out / "scan_storage_1.csv")))
    assert header[:4] == ["theta_c", "location", "analytic", "error"] and "gamma" in header


def test_empty_scan_range_is_usage_error(tmp_path):
    cfg = {"scan": {"kind": "storage", "theta_c_pi": []}}
    assert run(tmp_path, "scan", "--config", write_config(tmp_path, cfg))[0] == 1
    cfg = {"scan": {"kind": "storage", "theta_c_pi": [0.1]}}
    assert run(tmp_path, "scan", "--config", write_config(tmp_path, cfg), "--jobs", "0")[0] == 1


# usage and validation

def test_usage_errors(tmp_path):
    assert main(["frobnicate"]) == 1
    assert main([]) == 1
    assert run(tmp_path, "coeffs", "--widths", "a,b")[0] == 1
    assert run(tmp_path, "coeffs", "--widths=-1")[0] == 1


def test_invalid_configs_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(tmp_path, "analytic", "--config", str(bad))[0] == 3
    cfg = {"medium": {"gamma": -1}, "solitons": [{"tau": -1, "c1": [1, 0]}]}
    assert run(tmp_path, "analytic", "--config", write_config(tmp_path, cfg))[0] == 3
    err = capsys.readouterr().err
    assert "NegativeGamma" in err and "NonPositiveTau" in err


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lambdamem", "coeffs", "--no-broadening", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == str(tmp_path / "manifest.json")


def test_default_config_is_valid():
    from lambdamem.config import validate_config
    cfg = validate_config(json.loads(json.dumps(DEFAULT_CONFIG)))
    assert len(cfg.solitons) == 2
