"""specdelay command line.

Usage (after pip install):
    specdelay forward potential.csv --n-eigen 128 --out-dir run1
    specdelay forward --builtin step-qplus --probe 1.0
    specdelay inverse run1/spectrum_j0.json run1/spectrum_j1.json --grid 512
    specdelay roundtrip --builtin smooth --n-eigen 128
    specdelay characterize run1/spectrum_j1.json [run1/spectrum_j0.json]
    specdelay selftest

Verbosity follows the SPECDELAY_LOG environment variable
(debug, info, warning, error).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from specdelay.builtins import BUILTIN_NAMES, BUILTINS, builtin_potential
from specdelay.characterization import build_report
from specdelay.core import DelayParameter, GridSpec, PotentialPair, build_w_functions, relative_l2_error
from specdelay.errors import ConfigError, DelayMismatch, SpecDelayError
from specdelay.forward import (
    CharFnEvaluator,
    SpectralSequence,
    compute_spectrum,
    oracle_tolerance,
    solve_ivp_method_of_steps,
)
from specdelay.inverse import InverseResult, run_algorithm1
from specdelay.numerics import dense_volterra_solve, solve_triangular_volterra
from specdelay.persistence import read_potential, read_sidecar, read_spectrum, write_json, write_potential, write_spectrum
from specdelay.settings import RunConfig, load_run_config, log_level_from_env, save_run_config

logger = logging.getLogger("specdelay.cli")

SPECTRUM_FILES = ("spectrum_j0.json", "spectrum_j1.json")


# ---------------------------------------------------------------------------
# Arguments and configuration
# ---------------------------------------------------------------------------

def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a", type=float, default=None, help="Delay a in [pi/2, pi)")
    common.add_argument("--grid", dest="grid_m", type=int, default=None, help="Grid intervals m (default 512)")
    common.add_argument("--n-eigen", dest="n_eigen", type=int, default=None, help="Eigenvalues per spectrum (default 128)")
    common.add_argument("--tol", dest="tol_root", type=float, default=None, help="Root tolerance (default 1e-10)")
    common.add_argument("--omega-method", choices=["sample", "ratio"], default=None)
    common.add_argument("--fejer", action="store_true", default=None, help="Fejer-smooth the Fourier synthesis")
    common.add_argument("--no-fourier-tail", dest="fourier_tail", action="store_false", default=None,
                        help="Stop the Fourier synthesis at the measured modes")
    common.add_argument("--threads", type=int, default=None, help="Root-finding threads (default: all cores)")
    common.add_argument("--out-dir", default=None, help="Output directory (default specdelay-out)")
    common.add_argument("--config", type=Path, default=None, help="YAML run file")
    common.add_argument("--builtin", choices=BUILTIN_NAMES, default=None, help="Built-in test potential")
    common.add_argument("--seed", type=int, default=None, help="Seed for the random built-in")
    common.add_argument("--quadrature", choices=["trapezoid", "simpson"], default=None)
    common.add_argument("--threshold", dest="roundtrip_threshold", type=float, default=None,
                        help="Roundtrip pass threshold on the relative L2 error (default 0.05)")
    return common


def _parse_args(argv: list[str] | None) -> argparse.Namespace:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="specdelay", description="Spectral problems for operators with constant delay")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", parents=[common], help="Spectra of a potential")
    p.add_argument("potential", type=Path, nargs="?", help="Potential CSV (x,q_re,q_im)")
    p.add_argument("--probe", type=complex, default=None, metavar="LAMBDA", help="Also print Delta_0 and Delta_1 at LAMBDA")

    p = sub.add_parser("inverse", parents=[common], help="Potential from two spectra")
    p.add_argument("spectrum0", type=Path)
    p.add_argument("spectrum1", type=Path)

    sub.add_parser("roundtrip", parents=[common], help="Forward then inverse on a built-in potential")

    p = sub.add_parser("characterize", parents=[common], help="Diagnostics for candidate spectra")
    p.add_argument("spectra", type=Path, nargs="+", help="One or two spectrum files (j = 1 required)")

    sub.add_parser("selftest", parents=[common], help="Built-in oracle checks")
    return parser.parse_args(argv)


_CONFIG_KEYS = (
    "a", "grid_m", "n_eigen", "tol_root", "omega_method", "fejer", "fourier_tail", "threads",
    "out_dir", "builtin", "seed", "quadrature", "roundtrip_threshold",
)


def _build_config(args: argparse.Namespace, sidecar: dict | None = None) -> RunConfig:
    config = RunConfig()
    if args.config is not None:
        config = load_run_config(args.config, config)
    if sidecar:
        config = config.merged({"a": sidecar.get("delay"), "grid_m": sidecar.get("grid"),
                                "quadrature": sidecar.get("quadrature")})
    config = config.merged({k: getattr(args, k, None) for k in _CONFIG_KEYS})
    return config.validate()


def _grid(config: RunConfig) -> GridSpec:
    return GridSpec(config.grid_m, config.quadrature)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _print_spectrum_table(spectrum: SpectralSequence, evaluator: CharFnEvaluator) -> None:
    residuals = np.abs(evaluator(spectrum.j, spectrum.lambdas))
    print(f"j={spectrum.j}")
    print(f"{'n':>5}  {'Re lambda':>24}  {'Im lambda':>24}  {'|Delta_j|':>10}")
    for n, (lam, res) in enumerate(zip(spectrum.lambdas, residuals)):
        print(f"{n:>5}  {lam.real:>24.17g}  {lam.imag:>24.17g}  {res:>10.2e}")


def cmd_forward(args: argparse.Namespace) -> int:
    if args.potential is not None:
        config = _build_config(args, read_sidecar(args.potential))
        pot = read_potential(args.potential, config.a, config.quadrature)
    else:
        config = _build_config(args)
        name = config.builtin or "zero"
        pot = builtin_potential(name, _grid(config), seed=config.seed, a=config.a)
    out_dir = Path(config.out_dir)
    model = build_w_functions(pot)
    evaluator = CharFnEvaluator(model)
    for j, filename in enumerate(SPECTRUM_FILES):
        spectrum = compute_spectrum(j, model, config.n_eigen, tol=config.tol_root, threads=config.threads)
        write_spectrum(out_dir / filename, spectrum)
        _print_spectrum_table(spectrum, evaluator)
    if args.probe is not None:
        lam = complex(args.probe)
        print(f"Delta_0({lam}) = {evaluator(0, lam)}")
        print(f"Delta_1({lam}) = {evaluator(1, lam)}")
    save_run_config(out_dir, config.merged({"a": pot.a.a, "grid_m": pot.grid.m}))
    return 0


def _spectra_delay(spectra: list[SpectralSequence]) -> float | None:
    delays = [s.delay for s in spectra if s.delay is not None]
    if any(abs(d - delays[0]) > 1e-12 for d in delays[1:]):
        raise DelayMismatch(f"spectrum files disagree on the delay: {delays}")
    return delays[0] if delays else None


def _resolve_delay(config: RunConfig, spectra: list[SpectralSequence]) -> DelayParameter:
    delay = _spectra_delay(spectra)
    a = config.a if config.a is not None else delay
    if a is None:
        raise ConfigError("delay unknown: the spectra carry none and --a was not given")
    return DelayParameter(a)


def cmd_inverse(args: argparse.Namespace) -> int:
    config = _build_config(args)
    spectrum0 = read_spectrum(args.spectrum0)
    spectrum1 = read_spectrum(args.spectrum1)
    a = _resolve_delay(config, [spectrum0, spectrum1])
    result = run_algorithm1(spectrum0, spectrum1, a, _grid(config), omega_method=config.omega_method,
                            fejer=config.fejer, fourier_tail=config.fourier_tail)
    out_dir = Path(config.out_dir)
    write_potential(out_dir / "potential.csv", result.potential)
    write_json(out_dir / "diagnostics.json", result.diagnostics.to_dict())
    save_run_config(out_dir, config.merged({"a": a.a, "n_eigen": len(spectrum1)}))
    d = result.diagnostics
    print(f"omega              {d.omega.real:.12g} {d.omega.imag:+.12g}i")
    print(f"qminus consistency {d.qminus_consistency:.3e}")
    print(f"volterra residual  {d.volterra_residual:.3e}")
    return 0


def _reconstruct(pot: PotentialPair, config: RunConfig, n_eigen: int) -> tuple[float, InverseResult]:
    model = build_w_functions(pot)
    spectra = [compute_spectrum(j, model, n_eigen, tol=config.tol_root, threads=config.threads) for j in (0, 1)]
    result = run_algorithm1(*spectra, pot.a, pot.grid, omega_method=config.omega_method,
                            fejer=config.fejer, fourier_tail=config.fourier_tail)
    return relative_l2_error(result.potential, pot), result


def cmd_roundtrip(args: argparse.Namespace) -> int:
    config = _build_config(args)
    name = config.builtin or ("random" if args.seed is not None else None)
    if name is None:
        raise ConfigError("roundtrip needs --builtin NAME or --seed N")
    pot = builtin_potential(name, _grid(config), seed=config.seed, a=config.a)
    error, result = _reconstruct(pot, config, config.n_eigen)
    out_dir = Path(config.out_dir)
    write_potential(out_dir / "original.csv", pot)
    write_potential(out_dir / "reconstructed.csv", result.potential)
    write_json(out_dir / "diagnostics.json", {**result.diagnostics.to_dict(), "relative_l2_error": error})
    save_run_config(out_dir, config.merged({"a": pot.a.a, "builtin": name}))
    d = result.diagnostics
    print(f"potential          {name} (a={pot.a.a:.12g}, m={pot.grid.m}, N={config.n_eigen})")
    print(f"omega              {d.omega.real:.12g} {d.omega.imag:+.12g}i")
    print(f"qminus consistency {d.qminus_consistency:.3e}")
    print(f"volterra residual  {d.volterra_residual:.3e}")
    print(f"relative L2 error  {error:.3e}")
    if error > config.roundtrip_threshold:
        print(f"error {error:.3e} above threshold {config.roundtrip_threshold:g}", file=sys.stderr)
        return 1
    return 0


def cmd_characterize(args: argparse.Namespace) -> int:
    config = _build_config(args)
    if len(args.spectra) > 2:
        raise ConfigError("characterize takes at most two spectrum files")
    spectra = {s.j: s for s in map(read_spectrum, args.spectra)}
    if 1 not in spectra:
        raise ConfigError("characterize needs the j = 1 spectrum")
    if len(spectra) != len(args.spectra):
        raise ConfigError("both spectrum files have the same j")
    a = _resolve_delay(config, list(spectra.values()))
    report = build_report(spectra[1], a, spectrum0=spectra.get(0))
    out_dir = Path(config.out_dir)
    write_json(out_dir / "report.json", report.to_dict())
    save_run_config(out_dir, config.merged({"a": a.a}))
    for line in report.summary_lines():
        print(line)
    print(f"A4 residual        {abs(report.a4_residual):.3e}")
    return 0


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def _check_zero_spectra() -> tuple[bool, str]:
    grid = GridSpec(512)
    model = build_w_functions(PotentialPair.zero(math.pi / 2, grid))
    worst = 0.0
    for j in (0, 1):
        found = compute_spectrum(j, model, 31).lambdas
        worst = max(worst, float(np.max(np.abs(found - SpectralSequence.unperturbed(j, 31).lambdas))))
    return worst <= 1e-8, f"max error {worst:.2e}"


def _check_closed_forms() -> tuple[bool, str]:
    grid = GridSpec(2048)
    expected = {
        "step-qminus": (0.0, -1.0),
        "step-qplus": (math.pi / 4 - 1.0, 0.5),
    }
    worst = 0.0
    for name, values in expected.items():
        evaluator = CharFnEvaluator(build_w_functions(BUILTINS[name].build(grid)))
        for j, value in enumerate(values):
            worst = max(worst, abs(evaluator(j, 1.0) - value))
    return worst <= 1e-6, f"max error {worst:.2e}"


def _check_volterra() -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    x = np.linspace(0.0, 1.0, 64)
    kernel = np.triu(rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64)))
    rhs = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    gap = float(np.max(np.abs(solve_triangular_volterra(kernel, rhs, x) - dense_volterra_solve(kernel, rhs, x))))
    return gap <= 1e-10, f"max gap {gap:.2e}"


def _check_ivp() -> tuple[bool, str]:
    grid = GridSpec(1024, "simpson")
    pot = BUILTINS["smooth"].build(grid)
    evaluator = CharFnEvaluator(build_w_functions(pot))
    lams = np.array([-20.0, 0.5, 3.0 + 2.0j, 12.0, 40.0])
    ivp = solve_ivp_method_of_steps(pot, lams)
    tol = oracle_tolerance(lams)
    worst = 0.0
    for j, oracle in enumerate((ivp.y_end, ivp.dy_end)):
        worst = max(worst, float(np.max(np.abs(evaluator(j, lams) - oracle) / tol)))
    return worst <= 1.0, f"max gap {worst:.2f} of tolerance"


SELFTEST_CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "zero-spectra": _check_zero_spectra,
    "closed-forms": _check_closed_forms,
    "volterra-oracle": _check_volterra,
    "ivp-oracle": _check_ivp,
}


def cmd_selftest(args: argparse.Namespace) -> int:
    _build_config(args)
    failed = 0
    for name, check in SELFTEST_CHECKS.items():
        ok, detail = check()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:<16} {detail}")
    return 1 if failed else 0


COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "forward": cmd_forward,
    "inverse": cmd_inverse,
    "roundtrip": cmd_roundtrip,
    "characterize": cmd_characterize,
    "selftest": cmd_selftest,
}


def main(argv: list[str] | None = None) -> None:
    args = _parse_args(argv)
    logging.basicConfig(level=log_level_from_env(), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        code = COMMANDS[args.command](args)
    except SpecDelayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(exc.exit_code)
    if code:
        sys.exit(code)


if __name__ == "__main__":
    main()
