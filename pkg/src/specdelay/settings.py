"""Run configuration: defaults, YAML run files and the log level.

Sources are layered defaults < run.yaml < potential sidecar < CLI flags.
The effective configuration is saved as ``run_config.yaml`` next to the
outputs so a run can be repeated with ``--config``.
"""

from __future__ import annotations

import dataclasses
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import yaml

from specdelay.constants import (
    DEFAULT_GRID_M,
    DEFAULT_N_EIGEN,
    DEFAULT_ROUNDTRIP_THRESHOLD,
    DEFAULT_TOL_ROOT,
    MIN_GRID_M,
    MIN_N_EIGEN,
    MODES_PER_GRID,
    OMEGA_METHODS,
    QUADRATURE_KINDS,
)
from specdelay.core import DelayParameter
from specdelay.errors import ConfigError

logger = logging.getLogger(__name__)

LOG_ENV = "SPECDELAY_LOG"
LOG_LEVELS = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING, "error": logging.ERROR}
RUN_CONFIG_NAME = "run_config.yaml"


@dataclass(frozen=True)
class RunConfig:
    a: float | None = None
    grid_m: int = DEFAULT_GRID_M
    n_eigen: int = DEFAULT_N_EIGEN
    tol_root: float = DEFAULT_TOL_ROOT
    omega_method: str = "sample"
    fejer: bool = False
    fourier_tail: bool = True
    seed: int = 0
    quadrature: str = "trapezoid"
    threads: int | None = None
    roundtrip_threshold: float = DEFAULT_ROUNDTRIP_THRESHOLD
    builtin: str | None = None
    out_dir: str = "specdelay-out"

    def validate(self) -> "RunConfig":
        """Raise ConfigError (DelayOutOfRange for the delay) on invalid values."""
        if self.a is not None:
            DelayParameter(self.a)
        if self.grid_m < MIN_GRID_M:
            raise ConfigError(f"grid_m must be >= {MIN_GRID_M}, got {self.grid_m}")
        if self.n_eigen < MIN_N_EIGEN:
            raise ConfigError(f"n_eigen must be >= {MIN_N_EIGEN}, got {self.n_eigen}")
        if self.grid_m < MODES_PER_GRID * self.n_eigen:
            raise ConfigError(
                f"grid_m={self.grid_m} is below {MODES_PER_GRID}*n_eigen={MODES_PER_GRID * self.n_eigen}"
            )
        if self.omega_method not in OMEGA_METHODS:
            raise ConfigError(f"omega_method must be one of {OMEGA_METHODS}, got {self.omega_method!r}")
        if self.quadrature not in QUADRATURE_KINDS:
            raise ConfigError(f"quadrature must be one of {QUADRATURE_KINDS}, got {self.quadrature!r}")
        if not self.tol_root > 0:
            raise ConfigError(f"tol_root must be positive, got {self.tol_root}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        return self

    def merged(self, values: Mapping[str, Any]) -> "RunConfig":
        """Copy with the known, non-None keys of ``values`` applied."""
        names = {f.name for f in dataclasses.fields(self)}
        changes = {k: v for k, v in values.items() if k in names and v is not None}
        try:
            return dataclasses.replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def load_run_config(path: Path, base: RunConfig | None = None) -> RunConfig:
    """Apply a YAML run file on top of ``base``; unknown keys are ignored."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    base = base or RunConfig()
    unknown = sorted(set(data) - set(base.to_dict()))
    if unknown:
        logger.info("ignoring unknown config keys: %s", ", ".join(map(str, unknown)))
    return base.merged(data)


def save_run_config(out_dir: Path, config: RunConfig) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RUN_CONFIG_NAME
    path.write_text(yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=False), encoding="utf-8")
    return path


def log_level_from_env(environ: Mapping[str, str] | None = None) -> int:
    """Level named by SPECDELAY_LOG; unknown or missing values mean warning."""
    environ = os.environ if environ is None else environ
    return LOG_LEVELS.get(environ.get(LOG_ENV, "").strip().lower(), logging.WARNING)
