"""End-to-end tests of the specdelay command line on small grids."""

from __future__ import annotations

import json
import math

import pytest

from specdelay.builtins import BUILTINS
from specdelay.core import GridSpec
from specdelay.forward import SpectralSequence
from specdelay.persistence import write_potential, write_spectrum
from specdelay.settings import load_run_config
from specdelay_cli import main


def _exit_code(argv: list[str]) -> int:
    try:
        main(argv)
    except SystemExit as exc:
        return int(exc.code)
    return 0


def _forward(out_dir, *extra: str) -> int:
    return _exit_code(["forward", "--grid", "64", "--n-eigen", "16", "--out-dir", str(out_dir), *extra])


def test_forward_builtin_writes_spectra(tmp_path, capsys):
    assert _forward(tmp_path, "--builtin", "step-qplus", "--probe", "1.0") == 0
    out = capsys.readouterr().out
    assert "Delta_0((1+0j)) = " in out and "j=1" in out
    for j in (0, 1):
        data = json.loads((tmp_path / f"spectrum_j{j}.json").read_text())
        assert data["j"] == j and len(data["lambdas"]) == 16
        assert data["delay"] == pytest.approx(0.5 * math.pi)
    assert (tmp_path / "run_config.yaml").exists()


def test_forward_is_deterministic(tmp_path):
    for name in ("one", "two"):
        assert _forward(tmp_path / name, "--builtin", "smooth") == 0
    for filename in ("spectrum_j0.json", "spectrum_j1.json"):
        assert (tmp_path / "one" / filename).read_bytes() == (tmp_path / "two" / filename).read_bytes()


def test_forward_then_inverse_from_files(tmp_path):
    csv_path = write_potential(tmp_path / "q.csv", BUILTINS["step-qminus"].build(GridSpec(64)))
    assert _exit_code(["forward", str(csv_path), "--n-eigen", "16", "--out-dir", str(tmp_path / "fwd")]) == 0
    argv = [
        "inverse", str(tmp_path / "fwd" / "spectrum_j0.json"), str(tmp_path / "fwd" / "spectrum_j1.json"),
        "--grid", "64", "--n-eigen", "16", "--out-dir", str(tmp_path / "inv"),
    ]
    assert _exit_code(argv) == 0
    assert (tmp_path / "inv" / "potential.csv").exists()
    assert json.loads((tmp_path / "inv" / "potential.json").read_text())["grid"] == 64
    diagnostics = json.loads((tmp_path / "inv" / "diagnostics.json").read_text())
    assert set(diagnostics) == {"omega", "omega_alt", "qminus_consistency", "volterra_residual"}


def test_roundtrip_reports_error(tmp_path, capsys):
    argv = ["roundtrip", "--builtin", "step-qplus", "--grid", "256", "--n-eigen", "64",
            "--threshold", "0.2", "--out-dir", str(tmp_path)]
    assert _exit_code(argv) == 0
    diagnostics = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diagnostics["relative_l2_error"] <= 0.2
    assert (tmp_path / "original.csv").exists() and (tmp_path / "reconstructed.csv").exists()
    assert "relative L2 error" in capsys.readouterr().out


def test_roundtrip_is_deterministic(tmp_path):
    for name in ("one", "two"):
        argv = ["roundtrip", "--seed", "3", "--grid", "128", "--n-eigen", "32",
                "--threshold", "10", "--out-dir", str(tmp_path / name)]
        assert _exit_code(argv) == 0
    for filename in ("original.csv", "reconstructed.csv", "diagnostics.json"):
        assert (tmp_path / "one" / filename).read_bytes() == (tmp_path / "two" / filename).read_bytes()


def test_roundtrip_above_threshold_exits_one(tmp_path, capsys):
    argv = ["roundtrip", "--builtin", "step-qplus", "--grid", "256", "--n-eigen", "64",
            "--threshold", "1e-9", "--out-dir", str(tmp_path)]
    assert _exit_code(argv) == 1
    assert "above threshold" in capsys.readouterr().err


def test_roundtrip_needs_a_potential(tmp_path, capsys):
    assert _exit_code(["roundtrip", "--out-dir", str(tmp_path)]) == 1
    assert capsys.readouterr().err.startswith("error: ")


def test_inverse_without_fourier_tail(tmp_path):
    s0 = write_spectrum(tmp_path / "s0.json", SpectralSequence.unperturbed(0, 16, 0.5 * math.pi))
    s1 = write_spectrum(tmp_path / "s1.json", SpectralSequence.unperturbed(1, 16, 0.5 * math.pi))
    argv = ["inverse", str(s0), str(s1), "--grid", "64", "--n-eigen", "16", "--no-fourier-tail", "--out-dir", str(tmp_path)]
    assert _exit_code(argv) == 0
    assert load_run_config(tmp_path / "run_config.yaml").fourier_tail is False


def test_characterize_writes_report(tmp_path, capsys):
    fwd = tmp_path / "fwd"
    argv = ["forward", "--builtin", "step-qplus", "--grid", "256", "--n-eigen", "48", "--out-dir", str(fwd)]
    assert _exit_code(argv) == 0
    capsys.readouterr()
    argv = ["characterize", str(fwd / "spectrum_j1.json"), str(fwd / "spectrum_j0.json"), "--out-dir", str(tmp_path)]
    assert _exit_code(argv) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert set(report["flags"]) == {"asymptotics", "A4", "char", "exponential_type"}
    assert "A4 residual" in capsys.readouterr().out


def test_characterize_reports_A4_failure_for_constant_qminus(tmp_path, capsys):
    fwd = tmp_path / "fwd"
    argv = ["forward", "--builtin", "step-qminus", "--grid", "256", "--n-eigen", "48", "--out-dir", str(fwd)]
    assert _exit_code(argv) == 0
    capsys.readouterr()
    argv = ["characterize", str(fwd / "spectrum_j1.json"), str(fwd / "spectrum_j0.json"), "--out-dir", str(tmp_path)]
    assert _exit_code(argv) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    # Δ₁(0) = π/2 while ω = 0
    assert math.hypot(*report["a4_residual"]) == pytest.approx(0.5, abs=0.05)
    assert report["flags"]["A4"] == "fail"
    assert "A4 residual" in capsys.readouterr().out


def test_characterize_needs_the_j1_spectrum(tmp_path):
    path = write_spectrum(tmp_path / "s0.json", SpectralSequence.unperturbed(0, 40, 0.5 * math.pi))
    assert _exit_code(["characterize", str(path), "--out-dir", str(tmp_path)]) == 1


def test_malformed_input_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    good = write_spectrum(tmp_path / "s1.json", SpectralSequence.unperturbed(1, 16, 0.5 * math.pi))
    argv = ["inverse", str(bad), str(good), "--grid", "64", "--n-eigen", "16", "--out-dir", str(tmp_path)]
    assert _exit_code(argv) == 2
    assert f"{bad}:1:" in capsys.readouterr().err


def test_delay_mismatch_exits_three(tmp_path):
    s0 = write_spectrum(tmp_path / "s0.json", SpectralSequence.unperturbed(0, 16, 0.5 * math.pi))
    s1 = write_spectrum(tmp_path / "s1.json", SpectralSequence.unperturbed(1, 16, 0.75 * math.pi))
    argv = ["inverse", str(s0), str(s1), "--grid", "64", "--n-eigen", "16", "--out-dir", str(tmp_path)]
    assert _exit_code(argv) == 3


def test_delay_out_of_range_exits_four(tmp_path):
    assert _forward(tmp_path, "--a", "1.0") == 4


@pytest.mark.slow
def test_selftest_passes(capsys):
    assert _exit_code(["selftest"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4 and all(line.startswith("PASS") for line in lines)
