"""Tests for file formats and run configuration."""

from __future__ import annotations

import json
import logging
import math

import numpy as np
import pytest
import yaml

from specdelay.builtins import BUILTINS
from specdelay.core import GridSpec
from specdelay.errors import ConfigError, DelayOutOfRange, MalformedInput
from specdelay.forward import SpectralSequence
from specdelay.persistence import (
    read_potential,
    read_sidecar,
    read_spectrum,
    sidecar_path,
    write_potential,
    write_spectrum,
)
from specdelay.settings import RunConfig, load_run_config, log_level_from_env, save_run_config


def _grid_rows(m: int) -> list[str]:
    nodes = GridSpec(m).nodes
    return ["x,q_re,q_im"] + [f"{x:.17g},0,0" for x in nodes]


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------

def test_spectrum_file_reads_back_exactly(tmp_path):
    lams = np.array([0.2503 + 1e-9j, 2.2617, 6.0 - 0.125j, 12.345678901234567])
    original = SpectralSequence(0, lams, 0.6 * math.pi)
    path = write_spectrum(tmp_path / "out" / "s.json", original)
    loaded = read_spectrum(path)
    assert loaded.j == 0 and loaded.delay == original.delay
    np.testing.assert_array_equal(loaded.lambdas, original.lambdas)
    assert json.loads(path.read_text())["lambdas"][2] == [6.0, -0.125]


def test_spectrum_file_writes_seventeen_significant_digits(tmp_path):
    original = SpectralSequence(1, np.array([0.2503 + 1e-9j, 1.0 / 3.0]), 0.6 * math.pi)
    text = write_spectrum(tmp_path / "s.json", original).read_text()
    assert f"[{0.2503:.17g}, {1e-9:.17g}]" in text
    assert f"[{1.0 / 3.0:.17g}, 0]" in text
    assert f"\"delay\": {0.6 * math.pi:.17g}," in text
    assert json.loads(text)["j"] == 1


def test_spectrum_syntax_error_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "j": 0,\n  oops\n}\n')
    with pytest.raises(MalformedInput) as info:
        read_spectrum(path)
    assert info.value.line == 3
    assert info.value.exit_code == 2


@pytest.mark.parametrize(
    "payload",
    [
        {"j": 0},
        {"j": 0, "lambdas": [1.0, 2.0]},
        {"j": 2, "lambdas": [[1.0, 0.0]]},
        [1, 2, 3],
    ],
)
def test_spectrum_structure_errors(tmp_path, payload):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(MalformedInput):
        read_spectrum(path)


def test_missing_spectrum_file(tmp_path):
    with pytest.raises(MalformedInput):
        read_spectrum(tmp_path / "nope.json")


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

def test_potential_file_round_trip(tmp_path, grid64):
    pot = BUILTINS["step-qminus"].build(grid64)
    path = write_potential(tmp_path / "q.csv", pot)
    assert read_sidecar(path) == {"delay": pot.a.a, "grid": 64, "quadrature": "trapezoid"}
    loaded = read_potential(path)
    assert loaded.junction == pot.junction
    np.testing.assert_array_equal(loaded.combined(), pot.combined())
    assert path.read_text().splitlines()[0] == "x,q_re,q_im"


def test_explicit_delay_overrides_sidecar(tmp_path, grid64):
    path = write_potential(tmp_path / "q.csv", BUILTINS["zero"].build(grid64))
    assert read_potential(path, a=0.75 * math.pi).junction == 48


def test_potential_without_delay(tmp_path):
    path = tmp_path / "q.csv"
    path.write_text("\n".join(_grid_rows(16)) + "\n")
    assert read_sidecar(path) == {}
    with pytest.raises(MalformedInput):
        read_potential(path)
    assert read_potential(path, a=0.5 * math.pi).grid.m == 16


def test_potential_bad_header(tmp_path):
    path = tmp_path / "q.csv"
    path.write_text("x,re,im\n0,0,0\n")
    with pytest.raises(MalformedInput) as info:
        read_potential(path, a=0.5 * math.pi)
    assert info.value.line == 1


def test_potential_bad_row_reports_line(tmp_path):
    rows = _grid_rows(16)
    rows[3] = "0.39,abc,0"
    path = tmp_path / "q.csv"
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(MalformedInput) as info:
        read_potential(path, a=0.5 * math.pi)
    assert info.value.line == 4
    assert f"{path}:4:" in str(info.value)


def test_potential_off_grid_x_reports_line(tmp_path):
    rows = _grid_rows(16)
    rows[5] = "0.8,0,0"
    path = tmp_path / "q.csv"
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(MalformedInput) as info:
        read_potential(path, a=0.5 * math.pi)
    assert info.value.line == 6


def test_sidecar_grid_must_match(tmp_path, grid64):
    path = write_potential(tmp_path / "q.csv", BUILTINS["zero"].build(grid64))
    sidecar_path(path).write_text(json.dumps({"delay": 0.5 * math.pi, "grid": 32}))
    with pytest.raises(MalformedInput):
        read_potential(path)


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

def test_default_config_is_valid():
    config = RunConfig().validate()
    assert config.grid_m == 512 and config.n_eigen == 128


@pytest.mark.parametrize(
    "changes",
    [
        {"grid_m": 8, "n_eigen": 8},
        {"n_eigen": 4},
        {"grid_m": 256, "n_eigen": 128},
        {"omega_method": "median"},
        {"quadrature": "gauss"},
        {"tol_root": 0.0},
        {"threads": 0},
    ],
)
def test_config_validation_errors(changes):
    with pytest.raises(ConfigError):
        RunConfig(**changes).validate()


def test_config_delay_out_of_range():
    with pytest.raises(DelayOutOfRange):
        RunConfig(a=1.0).validate()


def test_merge_skips_none_and_unknown_keys():
    config = RunConfig().merged({"grid_m": 1024, "seed": None, "colour": "blue"})
    assert config.grid_m == 1024 and config.seed == 0


def test_yaml_run_file_layers_over_base(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("n_eigen: 64\nfejer: true\nunused: 3\n")
    config = load_run_config(path, RunConfig(grid_m=1024))
    assert (config.grid_m, config.n_eigen, config.fejer) == (1024, 64, True)


@pytest.mark.parametrize("text", ["- 1\n- 2\n", "a: [1,\n"])
def test_yaml_run_file_errors(tmp_path, text):
    path = tmp_path / "run.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_saved_config_reloads(tmp_path):
    original = RunConfig(a=0.6 * math.pi, builtin="smooth", threads=2)
    path = save_run_config(tmp_path / "out", original)
    assert yaml.safe_load(path.read_text())["builtin"] == "smooth"
    assert load_run_config(path) == original


@pytest.mark.parametrize(
    "value, level",
    [("debug", logging.DEBUG), (" INFO ", logging.INFO), ("loud", logging.WARNING), (None, logging.WARNING)],
)
def test_log_level_from_env(value, level):
    environ = {} if value is None else {"SPECDELAY_LOG": value}
    assert log_level_from_env(environ) == level
