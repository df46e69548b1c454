"""Diagnostics for candidate spectra.

Checks the eigenvalue asymptotics, the relation Δ₁(0) = 2ω, the decay of
iθ₀ - θ₁ along the negative imaginary axis and the exponential types of
θ₀, θ₁. Everything is reported as numbers plus pass/fail/skipped flags;
none of it certifies an asymptotic statement.

Usage:
    report = build_report(spectrum1, a, spectrum0=spectrum0)
    Path("report.json").write_text(report.to_json())
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from specdelay.constants import (
    A4_TOL,
    DEFAULT_DECAY_SAMPLES,
    DEFAULT_TYPE_SAMPLES,
    EXP_TYPE_SLACK,
    FIT_COS_THRESHOLD,
    THETA_HORIZON_FRACTIONS,
    THETA_MIN_RESOLVED,
    THETA_NOISE_FACTOR,
    THETA_VANISH_TOL,
)
from specdelay.core import CharFnModel, DelayParameter
from specdelay.errors import DegenerateTheta, DomainError, IllConditionedFit
from specdelay.forward import SpectralSequence
from specdelay.inverse import ProductCharFn, direct_product_char_fn, estimate_omega_sample
from specdelay.numerics import cos_scaled, l2_tail_diagnostic, sin_scaled

logger = logging.getLogger(__name__)

DeltaFn = Callable[[complex], complex]

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


# ---------------------------------------------------------------------------
# theta functions
# ---------------------------------------------------------------------------

def _theta(j: int, rho: complex, delta: complex, omega: complex, tail: float, shift: float) -> complex:
    """θ_j from the value Δ_j(ρ²); every term carries the factor exp(-shift)."""
    if j == 0:
        return complex(rho * (delta - cos_scaled(rho * math.pi, shift)) - omega * sin_scaled(rho * tail, shift))
    return complex(delta + rho * sin_scaled(rho * math.pi, shift) - omega * cos_scaled(rho * tail, shift))


def theta_functions(
    rho: complex,
    delta0: DeltaFn,
    delta1: DeltaFn,
    omega: complex,
    a: DelayParameter | float,
    *,
    shift: float = 0.0,
) -> tuple[complex, complex]:
    """θ₀(ρ) = ρ(Δ₀ - cos ρπ) - ω sin ρ(π-a) and θ₁(ρ) = Δ₁ + ρ sin ρπ - ω cos ρ(π-a).

    ``delta0`` and ``delta1`` map λ to Δ_j(λ)·exp(-shift); the returned
    values carry the same factor.
    """
    tail = math.pi - DelayParameter.coerce(a).a
    rho = complex(rho)
    lam = rho * rho
    return (
        _theta(0, rho, complex(delta0(lam)), omega, tail, shift),
        _theta(1, rho, complex(delta1(lam)), omega, tail, shift),
    )


def theta_from_model(model: CharFnModel, j: int, rho: complex, *, shift: float = 0.0) -> complex:
    """∫₀^π w₀ sin ρx dx (j = 0) or ∫₀^π w₁ cos ρx dx (j = 1), times exp(-shift)."""
    grid = model.grid
    J = model.split
    rho = complex(rho)
    trig = sin_scaled if j == 0 else cos_scaled
    total = 0j
    for x, w in zip((grid.nodes[: J + 1], grid.nodes[J:]), model.pieces(j)):
        total += grid.rule.apply(trig(rho * x, shift) * w)
    return complex(total)


# ---------------------------------------------------------------------------
# Asymptotics and (A4)
# ---------------------------------------------------------------------------

def check_asymptotics(spectrum: SpectralSequence, a: DelayParameter | float) -> tuple[complex, np.ndarray]:
    """Least-squares ω over the upper half of indices and the residuals κ_n.

    Model: ρ_n ≈ ν_n + ω cos(ν_n a)/(πn), ν_n = n + (1-j)/2, so
    κ_n = n(ρ_n - ν_n - ω cos(ν_n a)/(πn)). κ₀ is reported as 0.
    """
    a = DelayParameter.coerce(a).a
    N = len(spectrum)
    if N < 32:
        raise DomainError(f"check_asymptotics needs at least 32 eigenvalues, got {N}")
    n = np.arange(1, N)
    nu = n + 0.5 * (1 - spectrum.j)
    cos = np.cos(nu * a)
    resid = spectrum.rho[1:] - nu
    window = n >= N // 2
    if np.all(np.abs(cos[window]) < FIT_COS_THRESHOLD):
        raise IllConditionedFit(f"all |cos(nu a)| < {FIT_COS_THRESHOLD} for n in [{N // 2}, {N})")
    design = (cos[window] / (math.pi * n[window]))[:, None].astype(complex)
    solution, *_ = np.linalg.lstsq(design, resid[window], rcond=None)
    omega_fit = complex(solution[0])
    kappa = np.zeros(N, dtype=complex)
    kappa[1:] = n * (resid - omega_fit * cos / (math.pi * n))
    logger.debug("asymptotics fit j=%d: omega=%s", spectrum.j, omega_fit)
    return omega_fit, kappa


def _require_j1(spectrum1: SpectralSequence) -> None:
    if spectrum1.j != 1:
        raise DomainError("check_A4 needs the j = 1 spectrum")


def check_A4(spectrum1: SpectralSequence, omega: complex) -> complex:
    """λ₀ ∏_{n≥1} λ_n/n² - 2ω/π through the regularized product at λ = 0."""
    _require_j1(spectrum1)
    return complex(ProductCharFn(1, spectrum1)(0.0) / math.pi - 2.0 * omega / math.pi)


def check_A4_direct(spectrum1: SpectralSequence, omega: complex) -> complex:
    """Same residual from the plain truncated product."""
    _require_j1(spectrum1)
    return complex(direct_product_char_fn(1, spectrum1, 0.0) / math.pi - 2.0 * omega / math.pi)


# ---------------------------------------------------------------------------
# Growth along the imaginary axis
# ---------------------------------------------------------------------------

def _scaled_thetas(
    spectrum0: SpectralSequence | None,
    spectrum1: SpectralSequence | None,
    omega: complex,
    a: float,
    r: float,
    horizon: int | None = None,
) -> tuple[complex | None, complex | None]:
    rho = complex(0.0, -r)
    shift = math.pi * r
    tail = math.pi - a
    out: list[complex | None] = []
    for j, spectrum in ((0, spectrum0), (1, spectrum1)):
        if spectrum is None:
            out.append(None)
            continue
        product = ProductCharFn(j, spectrum, horizon).with_tail(omega, a)
        out.append(_theta(j, rho, product(-r * r, scaled=True), omega, tail, shift))
    return out[0], out[1]


def check_overdetermination(
    spectrum0: SpectralSequence,
    spectrum1: SpectralSequence,
    a: DelayParameter | float,
    r_samples: Sequence[float] = DEFAULT_DECAY_SAMPLES,
    *,
    omega: complex | None = None,
) -> np.ndarray:
    """|iθ₀(-ir) - θ₁(-ir)|·exp(-(π-a)r) at each sample r.

    ω defaults to the sample estimate from ``spectrum1``.
    """
    a = DelayParameter.coerce(a)
    if spectrum0.j != 0 or spectrum1.j != 1:
        raise DomainError("check_overdetermination takes the j = 0 spectrum first")
    if omega is None:
        omega = estimate_omega_sample(spectrum1, a)
    decay = np.empty(len(r_samples))
    for i, r in enumerate(r_samples):
        t0, t1 = _scaled_thetas(spectrum0, spectrum1, omega, a.a, float(r))
        mag = abs(1j * t0 - t1)
        # scaled by exp(-πr); restore exp(πr - (π-a)r) = exp(ar)
        decay[i] = math.exp(math.log(mag) + a.a * r) if mag > 0 else 0.0
    return decay


def _log_slope(r: np.ndarray, log_mag: np.ndarray) -> float:
    upper = r >= 0.5 * r[-1]
    if np.count_nonzero(upper) < 2:
        upper = np.ones_like(r, dtype=bool)
    return float(np.polyfit(r[upper], log_mag[upper], 1)[0])


def _type_from_scaled(label: str, r: np.ndarray, scaled: np.ndarray) -> float:
    mag = np.abs(scaled)
    if np.all(mag <= THETA_VANISH_TOL):
        msg = f"{label} vanishes at every sample r in [{r[0]}, {r[-1]}]; type reported as 0"
        logger.warning(msg)
        warnings.warn(msg, DegenerateTheta, stacklevel=3)
        return 0.0
    with np.errstate(divide="ignore"):
        log_mag = np.log(mag) + math.pi * r
    finite = np.isfinite(log_mag)
    return _log_slope(r[finite], log_mag[finite])


def estimate_exponential_type(
    spectrum: SpectralSequence,
    j: int,
    omega: complex,
    a: DelayParameter | float,
    r_samples: Sequence[float] = DEFAULT_TYPE_SAMPLES,
) -> float:
    """Slope of log|θ_j(-ir)| against r; compare the result with π - a.

    θ_j comes from the product over ``spectrum`` continued by its
    asymptotic zeros. A finite product leaves a residue in θ_j that is not
    small once the true θ_j has decayed, so the same θ_j is recomputed with
    shorter horizons and only samples standing THETA_NOISE_FACTOR above
    that spread enter the fit. With fewer than THETA_MIN_RESOLVED such
    samples θ_j is taken to vanish and the type is 0.
    """
    a = DelayParameter.coerce(a).a
    if spectrum.j != j:
        raise DomainError(f"spectrum has j={spectrum.j}, asked for theta_{j}")
    r = np.asarray(r_samples, dtype=float)
    pair = (spectrum, None) if j == 0 else (None, spectrum)

    def thetas(horizon: int | None) -> np.ndarray:
        return np.array([_scaled_thetas(*pair, omega, a, float(v), horizon)[j] for v in r], dtype=complex)

    scaled = thetas(None)
    noise = np.zeros(len(r))
    for fraction in THETA_HORIZON_FRACTIONS:
        horizon = max(2, int(fraction * len(spectrum)))
        if horizon < len(spectrum):
            noise = np.maximum(noise, np.abs(scaled - thetas(horizon)))
    mag = np.abs(scaled)
    resolved = (mag > THETA_VANISH_TOL) & (mag > THETA_NOISE_FACTOR * noise)
    label = f"theta_{j}"
    if np.count_nonzero(resolved) < THETA_MIN_RESOLVED:
        msg = (
            f"{label} stands above the truncation spread at {np.count_nonzero(resolved)} of {len(r)} samples"
            f" in r = [{r[0]}, {r[-1]}]; type reported as 0"
        )
        logger.warning(msg)
        warnings.warn(msg, DegenerateTheta, stacklevel=2)
        return 0.0
    logger.debug("%s resolved at %d of %d samples", label, np.count_nonzero(resolved), len(r))
    return _type_from_scaled(label, r[resolved], scaled[resolved])


def model_exponential_type(
    model: CharFnModel,
    j: int,
    r_samples: Sequence[float] = DEFAULT_TYPE_SAMPLES,
) -> float:
    """Exponential type of θ_j computed from the w-functions directly."""
    r = np.asarray(r_samples, dtype=float)
    scaled = np.array([theta_from_model(model, j, complex(0.0, -v), shift=math.pi * v) for v in r])
    return _type_from_scaled(f"theta_{j}", r, scaled)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

def _pair(z: complex) -> list[float]:
    return [z.real, z.imag]


@dataclass(frozen=True, eq=False)
class CharacterizationReport:
    delay: float
    omega_fit: complex
    omega: complex
    kappa_residuals: np.ndarray
    kappa_stabilized: bool
    a4_residual: complex
    a4_residual_direct: complex
    exp_type_estimates: tuple[float, float]
    r_samples: tuple[float, ...] = ()
    char_decay: np.ndarray | None = None
    flags: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "delay": self.delay,
            "omega_fit": _pair(self.omega_fit),
            "omega": _pair(self.omega),
            "kappa_residuals": [_pair(complex(k)) for k in self.kappa_residuals],
            "kappa_stabilized": self.kappa_stabilized,
            "a4_residual": _pair(self.a4_residual),
            "a4_residual_direct": _pair(self.a4_residual_direct),
            "exp_type_estimates": [None if math.isnan(v) else v for v in self.exp_type_estimates],
            "r_samples": list(self.r_samples),
            "char_decay": None if self.char_decay is None else [float(v) for v in self.char_decay],
            "flags": dict(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary_lines(self) -> list[str]:
        return [f"{name:<18} {state}" for name, state in self.flags.items()]


def _non_increasing_tail(values: np.ndarray) -> bool:
    tail = values[len(values) // 2:]
    scale = float(np.max(np.abs(values), initial=0.0))
    return bool(np.all(np.diff(tail) <= 1e-10 * max(scale, 1.0)))


def build_report(
    spectrum1: SpectralSequence,
    a: DelayParameter | float,
    *,
    spectrum0: SpectralSequence | None = None,
    omega: complex | None = None,
    decay_samples: Sequence[float] = DEFAULT_DECAY_SAMPLES,
    type_samples: Sequence[float] = DEFAULT_TYPE_SAMPLES,
) -> CharacterizationReport:
    """Run every check the given spectra allow.

    Without ``spectrum0`` the decay profile and θ₀'s type are skipped.
    ω defaults to the sample estimate; the asymptotics fit is reported
    beside it.
    """
    a = DelayParameter.coerce(a)
    omega_fit, kappa = check_asymptotics(spectrum1, a)
    if omega is None:
        omega = estimate_omega_sample(spectrum1, a)
    _, stabilized = l2_tail_diagnostic(kappa[1:])
    a4 = check_A4(spectrum1, omega)
    a4_direct = check_A4_direct(spectrum1, omega)
    flags = {
        "asymptotics": PASS if stabilized else FAIL,
        "A4": PASS if abs(a4) <= A4_TOL else FAIL,
    }

    decay = None
    if spectrum0 is None:
        flags["char"] = SKIPPED
        type0 = math.nan
    else:
        decay = check_overdetermination(spectrum0, spectrum1, a, decay_samples, omega=omega)
        flags["char"] = PASS if _non_increasing_tail(decay) else FAIL
        type0 = estimate_exponential_type(spectrum0, 0, omega, a, type_samples)
    type1 = estimate_exponential_type(spectrum1, 1, omega, a, type_samples)
    bound = math.pi - a.a + EXP_TYPE_SLACK
    known = [t for t in (type0, type1) if not math.isnan(t)]
    flags["exponential_type"] = PASS if all(t <= bound for t in known) else FAIL
    logger.info("characterization flags: %s", flags)

    return CharacterizationReport(
        delay=a.a,
        omega_fit=omega_fit,
        omega=complex(omega),
        kappa_residuals=kappa,
        kappa_stabilized=stabilized,
        a4_residual=a4,
        a4_residual_direct=a4_direct,
        exp_type_estimates=(type0, type1),
        r_samples=tuple(float(r) for r in decay_samples),
        char_decay=decay,
        flags=flags,
    )
