"""Reading and writing potentials, spectra and run artifacts.

Formats:
    potential CSV   header ``x,q_re,q_im``, one row per grid node, 17 significant digits
    sidecar JSON    ``{"delay": a, "grid": m, "quadrature": kind}`` next to the CSV
    spectrum JSON   ``{"delay": a, "j": 0|1, "lambdas": [[re, im], ...]}``

Spectrum numbers are written with 17 significant digits, like the CSV.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from specdelay.core import GridSpec, PotentialPair, split_potential
from specdelay.errors import DomainError, MalformedInput
from specdelay.forward import SpectralSequence

logger = logging.getLogger(__name__)

CSV_HEADER = ("x", "q_re", "q_im")


def write_json(path: Path, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    return path


def _read_json(path: Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedInput(f"cannot read file: {exc.strerror}", str(path)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(exc.msg, str(path), exc.lineno) from exc


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------

def _g17(value: float | None) -> str:
    return "null" if value is None else f"{float(value):.17g}"


def write_spectrum(path: Path, spectrum: SpectralSequence) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pairs = ",\n".join(f"    [{_g17(v.real)}, {_g17(v.imag)}]" for v in spectrum.lambdas)
    text = f'{{\n  "delay": {_g17(spectrum.delay)},\n  "j": {spectrum.j},\n  "lambdas": [\n{pairs}\n  ]\n}}\n'
    path.write_text(text, encoding="utf-8")
    return path


def read_spectrum(path: Path) -> SpectralSequence:
    data = _read_json(path)
    if not isinstance(data, dict) or not {"j", "lambdas"} <= data.keys():
        raise MalformedInput("expected an object with keys 'delay', 'j' and 'lambdas'", str(path))
    try:
        pairs = np.asarray(data["lambdas"], dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("lambdas must be a list of [re, im] pairs")
        delay = data.get("delay")
        return SpectralSequence(int(data["j"]), pairs[:, 0] + 1j * pairs[:, 1], None if delay is None else float(delay))
    except (TypeError, ValueError) as exc:
        raise MalformedInput(str(exc), str(path)) from exc


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

def sidecar_path(csv_path: Path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_potential(path: Path, pot: PotentialPair) -> Path:
    """Write q = q⁻ + q⁺ as CSV plus the sidecar carrying delay and grid."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    q = pot.combined()
    rows = [",".join(CSV_HEADER)]
    rows += [f"{x:.17g},{v.real:.17g},{v.imag:.17g}" for x, v in zip(pot.grid.nodes, q)]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    write_json(sidecar_path(path), {"delay": pot.a.a, "grid": pot.grid.m, "quadrature": pot.grid.quadrature})
    return path


def read_sidecar(csv_path: Path) -> dict[str, Any]:
    side = sidecar_path(csv_path)
    if not side.exists():
        return {}
    data = _read_json(side)
    if not isinstance(data, dict):
        raise MalformedInput("sidecar must be a JSON object", str(side))
    return data


def read_potential(path: Path, a: float | None = None, quadrature: str | None = None) -> PotentialPair:
    """Read a potential CSV; the sidecar supplies delay and quadrature unless given.

    Raises:
        MalformedInput: bad header, a row that is not three numbers, or x
            values that are not the nodes of a uniform grid of [0, π].
    """
    path = Path(path)
    side = read_sidecar(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise MalformedInput(f"cannot read file: {exc.strerror}", str(path)) from exc
    values: list[tuple[float, complex]] = []
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise MalformedInput(f"expected header {','.join(CSV_HEADER)}", str(path), 1)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 3:
                raise MalformedInput(f"expected 3 columns, got {len(row)}", str(path), line)
            try:
                x, re, im = (float(v) for v in row)
            except ValueError as exc:
                raise MalformedInput(str(exc), str(path), line) from exc
            if not all(map(math.isfinite, (x, re, im))):
                raise MalformedInput("non-finite value", str(path), line)
            values.append((x, complex(re, im)))

    m = len(values) - 1
    x = np.array([v[0] for v in values])
    try:
        grid = GridSpec(m, quadrature or side.get("quadrature", "trapezoid"))
    except DomainError as exc:
        raise MalformedInput(str(exc), str(path)) from exc
    off = np.flatnonzero(np.abs(x - grid.nodes) > 1e-9)
    if off.size:
        raise MalformedInput(f"x={x[off[0]]!r} is not the node k*pi/{m}", str(path), int(off[0]) + 2)
    if "grid" in side and int(side["grid"]) != m:
        raise MalformedInput(f"sidecar says grid {side['grid']}, file has {m + 1} rows", str(path))
    delay = a if a is not None else side.get("delay")
    if delay is None:
        raise MalformedInput("delay unknown: no sidecar and no --a given", str(path))
    logger.debug("read %s: m=%d, delay=%s", path, m, delay)
    return split_potential(np.array([v[1] for v in values]), float(delay), grid)
