"""Inverse problem: recover the potential from the two spectra.

The pipeline rebuilds Δ₀, Δ₁ as regularized products over the given
eigenvalues, extracts ω, recovers w₀ and w₁ from their Fourier
coefficients, reads q⁻ off the overlap region and finally solves a
Volterra equation of the second kind for q⁺.

Usage:
    result = run_algorithm1(spectrum0, spectrum1, DelayParameter(math.pi / 2), GridSpec(512))
    result.potential.combined()
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import fft

from specdelay.constants import (
    CONSISTENCY_FACTOR,
    JUMP_FIT_FLOOR,
    JUMP_FIT_MAX_RESIDUAL,
    JUMP_FIT_MIN_MODES,
    MODES_PER_GRID,
    OMEGA_METHODS,
    POLE_SHIFT,
    POLE_TOL,
    PRODUCT_TAIL_TERMS,
    RATIO_COS_THRESHOLD,
    RATIO_MIN_INDICES,
    SAMPLE_TERMS,
)
from specdelay.core import CharFnModel, DelayParameter, GridSpec, PotentialPair
from specdelay.errors import (
    ConsistencyWarning,
    DelayMismatch,
    DomainError,
    InsufficientIndices,
    PoleCollision,
)
from specdelay.forward import SpectralSequence
from specdelay.numerics import (
    GridInterpolant,
    cos_scaled,
    integrate,
    sin_over,
    sin_scaled,
    solve_triangular_volterra,
    volterra_residual,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProductCharFn:
    """Δ_j rebuilt from its zeros, factored against the q = 0 closed form.

    j = 0: cos ρπ · ∏_{n<N} (λ_n - λ)/((n+½)² - λ)
    j = 1: (λ₀ - λ) · sin(ρπ)/ρ · ∏_{1≤n<N} (λ_n - λ)/(n² - λ)

    Only the first ``horizon`` eigenvalues enter. Past it the closed form
    supplies the factors exactly, or, with ``tail = (ω, a)``, the next
    PRODUCT_TAIL_TERMS factors use the asymptotic zeros
    ρ_n = ν_n + ω cos(ν_n a)/(πn).
    """

    j: int
    spectrum: SpectralSequence
    horizon: int | None = None
    tail: tuple[complex, float] | None = None
    _n: np.ndarray = field(init=False, repr=False)
    _zeros: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.spectrum.j != self.j:
            raise DomainError(f"spectrum has j={self.spectrum.j}, product needs j={self.j}")
        horizon = len(self.spectrum) if self.horizon is None else int(self.horizon)
        if not 1 <= horizon <= len(self.spectrum):
            raise DomainError(f"horizon {horizon} outside 1..{len(self.spectrum)}")
        object.__setattr__(self, "horizon", horizon)
        n = np.arange(horizon) if self.j == 0 else np.arange(1, horizon)
        zeros = self.spectrum.lambdas[n]
        if self.tail is not None:
            omega, a = complex(self.tail[0]), DelayParameter.coerce(self.tail[1]).a
            object.__setattr__(self, "tail", (omega, a))
            extra = np.arange(horizon, horizon + PRODUCT_TAIL_TERMS)
            zeros = np.concatenate((zeros, asymptotic_zeros(self.j, extra, omega, a)))
            n = np.concatenate((n, extra))
        object.__setattr__(self, "_n", n)
        object.__setattr__(self, "_zeros", zeros)

    def with_tail(self, omega: complex, a: DelayParameter | float) -> ProductCharFn:
        return ProductCharFn(self.j, self.spectrum, self.horizon, (omega, DelayParameter.coerce(a).a))

    def _unperturbed(self, n: np.ndarray) -> np.ndarray:
        nu = n + 0.5 * (1 - self.j)
        return nu * nu

    def _limit(self, k: int) -> float:
        """Trigonometric factor over (μ_k - λ) as λ → μ_k."""
        if self.j == 0:
            return math.pi * (-1) ** k / (2 * k + 1)
        return -math.pi * (-1) ** k / (2.0 * k * k)

    def _avoid_far_poles(self, lam: complex) -> complex:
        # with a tail every unperturbed eigenvalue it covers is a removable point
        if self.tail is not None or abs(lam.imag) > POLE_TOL * max(1.0, abs(lam)) or lam.real <= 0:
            return lam
        k = int(round(math.sqrt(lam.real) - 0.5 * (1 - self.j)))
        if not self.horizon <= k < len(self.spectrum):
            return lam
        if abs(lam - self._unperturbed(np.array(k))) <= POLE_TOL * max(1.0, abs(lam)):
            msg = f"lambda={lam} hits the unperturbed eigenvalue of index {k} past the horizon {self.horizon}"
            logger.warning("%s; shifting by %g", msg, POLE_SHIFT)
            warnings.warn(msg, PoleCollision, stacklevel=4)
            return lam + POLE_SHIFT
        return lam

    def _trig(self, rho: complex, scaled: bool) -> complex:
        shift = math.pi * abs(rho.imag) if scaled else 0.0
        if self.j == 0:
            return complex(cos_scaled(rho * math.pi, shift))
        if abs(rho) * math.pi < 1e-4:
            return complex(sin_over(rho, math.pi)) * math.exp(-shift)
        return complex(sin_scaled(rho * math.pi, shift)) / rho

    def _one(self, lam: complex, scaled: bool) -> complex:
        lam = self._avoid_far_poles(complex(lam))
        n = self._n
        diff = self._zeros - lam
        den = self._unperturbed(n) - lam
        prefactor = 1.0 if self.j == 0 else self.spectrum.lambdas[0] - lam
        hit = np.flatnonzero(np.abs(den) <= POLE_TOL * max(1.0, abs(lam)))
        if hit.size:
            i = int(hit[0])
            keep = np.arange(len(n)) != i
            rest = np.prod(diff[keep] / den[keep])
            return complex(prefactor * self._limit(int(n[i])) * diff[i] * rest)
        rho = complex(np.sqrt(lam))
        return complex(prefactor * self._trig(rho, scaled) * np.prod(diff / den))

    def __call__(self, lam, *, scaled: bool = False):
        """Δ_j(λ); with ``scaled`` the value times exp(-π|Im ρ|)."""
        if np.ndim(lam) == 0:
            return self._one(lam, scaled)
        flat = np.asarray(lam, dtype=complex).reshape(-1)
        return np.array([self._one(v, scaled) for v in flat]).reshape(np.shape(lam))


def asymptotic_zeros(j: int, n: np.ndarray, omega: complex, a: float) -> np.ndarray:
    """λ_n = ρ_n² with ρ_n = ν_n + ω cos(ν_n a)/(πn), ν_n = n + (1-j)/2, for n ≥ 1."""
    n = np.asarray(n, dtype=float)
    nu = n + 0.5 * (1 - j)
    rho = nu + omega * np.cos(nu * a) / (math.pi * n)
    return rho * rho


def product_char_fn(j: int, spectrum: SpectralSequence, lam, *, scaled: bool = False):
    return ProductCharFn(j, spectrum)(lam, scaled=scaled)


def direct_product_char_fn(j: int, spectrum: SpectralSequence, lam) -> complex:
    """Unregularized truncated products ∏(λ_n - λ)/(n+½)² and π(λ₀ - λ)∏(λ_n - λ)/n²."""
    lam = complex(lam)
    lams = spectrum.lambdas
    if j == 0:
        n = np.arange(len(lams)) + 0.5
        return complex(np.prod((lams - lam) / (n * n)))
    n = np.arange(1, len(lams))
    return complex(math.pi * (lams[0] - lam) * np.prod((lams[1:] - lam) / (n * n)))


# ---------------------------------------------------------------------------
# omega
# ---------------------------------------------------------------------------

def _require_j1(spectrum: SpectralSequence) -> None:
    if spectrum.j != 1:
        raise DomainError("omega estimators need the j = 1 spectrum")


def estimate_omega_ratio(spectrum1: SpectralSequence, a: DelayParameter | float) -> complex:
    """Tail average of πn(ρ_n - n)/cos(na) over indices with |cos(na)| ≥ 0.3."""
    _require_j1(spectrum1)
    a = DelayParameter.coerce(a).a
    n = np.arange(1, len(spectrum1))
    c = np.cos(n * a)
    sel = np.abs(c) >= RATIO_COS_THRESHOLD
    if np.count_nonzero(sel) < RATIO_MIN_INDICES:
        raise InsufficientIndices(
            f"only {np.count_nonzero(sel)} indices pass |cos(na)| >= {RATIO_COS_THRESHOLD}"
        )
    vals = math.pi * n[sel] * (spectrum1.rho[1:][sel] - n[sel]) / c[sel]
    tail = vals[-max(1, len(vals) // 4):]
    return complex(np.mean(tail))


def estimate_omega_sample(
    spectrum1: SpectralSequence,
    a: DelayParameter | float,
    n_terms: int = SAMPLE_TERMS,
) -> complex:
    """Limit of Δ₁(ξ²) + ξ sin ξπ along ξ_n = 2πn/(π - a), extrapolated in 1/n.

    The last half of the n = 1..n_terms values is fitted by a line in 1/n
    and the intercept returned.
    """
    _require_j1(spectrum1)
    a = DelayParameter.coerce(a).a
    prod = ProductCharFn(1, spectrum1)
    n = np.arange(1, n_terms + 1)
    xi = 2.0 * math.pi * n / (math.pi - a)
    vals = np.array([prod(x * x) + x * math.sin(x * math.pi) for x in xi])
    window = slice(n_terms // 2, None)
    inv = 1.0 / n[window]
    re = np.polyfit(inv, vals[window].real, 1)[1]
    im = np.polyfit(inv, vals[window].imag, 1)[1]
    logger.debug("omega samples: %s", vals)
    return complex(re, im)


def estimate_omega(spectrum1: SpectralSequence, a: DelayParameter | float, method: str = "sample") -> complex:
    if method not in OMEGA_METHODS:
        raise DomainError(f"unknown omega method {method!r}; expected one of {OMEGA_METHODS}")
    return estimate_omega_sample(spectrum1, a) if method == "sample" else estimate_omega_ratio(spectrum1, a)


# ---------------------------------------------------------------------------
# Fourier step
# ---------------------------------------------------------------------------

def fourier_coefficients(
    prod0: ProductCharFn,
    prod1: ProductCharFn,
    omega: complex,
    a: DelayParameter | float,
    n_max: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Sine coefficients of w₀ and cosine coefficients of w₁.

    Both arrays are indexed by n = 0..n_max; the sine sequence has a
    placeholder 0 at n = 0.
    """
    a = DelayParameter.coerce(a).a
    n = np.arange(n_max + 1)
    sign = (-1.0) ** n
    lam = (n * n).astype(complex)
    d0 = prod0(lam[1:])
    d1 = prod1(lam)
    aseq = np.zeros(n_max + 1, dtype=complex)
    aseq[1:] = n[1:] * (d0 - sign[1:]) + omega * sign[1:] * np.sin(n[1:] * a)
    bseq = d1 - omega * sign * np.cos(n * a)
    return aseq, bseq


@dataclass(frozen=True)
class SeriesTail:
    """Jump model fitted to the upper half of the measured coefficients.

    Near n → ∞ the coefficients of a piecewise smooth w on [0, π] with a
    single interior break at s* = π - a are combinations of 1, (-1)ⁿ,
    cos ns*, sin ns* over n and n². The cos ns*/n weight of the sine
    series is the jump of w₀ at s*; minus the sin ns*/n weight of the
    cosine series is the jump of w₁.
    """

    sine: np.ndarray
    cosine: np.ndarray
    split: float
    misfit: float

    def coefficients(self, n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        basis = jump_basis(n, self.split)
        return basis @ self.sine, basis @ self.cosine

    @property
    def jumps(self) -> tuple[complex, complex]:
        """w_j(s*+) - w_j(s*-) for j = 0, 1."""
        return complex(self.sine[2]), complex(-self.cosine[3])


def jump_basis(n: np.ndarray, split: float) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    osc = np.stack([np.ones_like(n), (-1.0) ** n, np.cos(n * split), np.sin(n * split)], axis=1)
    return np.concatenate([osc / n[:, None], osc / (n * n)[:, None]], axis=1).astype(complex)


def _fit_jump_weights(basis: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, float]:
    scale = float(np.linalg.norm(values))
    if scale <= JUMP_FIT_FLOOR:
        return np.zeros(basis.shape[1], dtype=complex), 0.0
    weights, *_ = np.linalg.lstsq(basis, values, rcond=None)
    return weights, float(np.linalg.norm(basis @ weights - values)) / scale


def fit_series_tail(
    aseq: np.ndarray,
    bseq: np.ndarray,
    a: DelayParameter | float,
    grid: GridSpec,
) -> SeriesTail | None:
    """Least-squares jump model over n = n_max/2..n_max; None when it does not describe the data."""
    n_max = len(bseq) - 1
    n = np.arange(max(n_max // 2, 1), n_max + 1)
    if len(n) < JUMP_FIT_MIN_MODES:
        logger.debug("series tail skipped: %d modes to fit", len(n))
        return None
    split = (grid.m - grid.junction_index(DelayParameter.coerce(a).a)) * grid.h
    basis = jump_basis(n, split)
    sine, misfit_a = _fit_jump_weights(basis, np.asarray(aseq, dtype=complex)[n])
    cosine, misfit_b = _fit_jump_weights(basis, np.asarray(bseq, dtype=complex)[n])
    misfit = max(misfit_a, misfit_b)
    if misfit > JUMP_FIT_MAX_RESIDUAL:
        logger.warning("series tail rejected: relative misfit %.3f over n=%d..%d", misfit, n[0], n[-1])
        return None
    return SeriesTail(sine, cosine, split, misfit)


def synthesize_w(
    aseq: np.ndarray,
    bseq: np.ndarray,
    grid: GridSpec,
    *,
    fejer: bool = False,
    tail: SeriesTail | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """w₀ = (2/π)Σ a_n sin nx and w₁ = b₀/π + (2/π)Σ b_n cos nx at the grid nodes.

    With ``tail`` the sums run to n = m - 1, the modes past the given ones
    taken from the jump model.
    """
    aseq = np.asarray(aseq, dtype=complex)
    bseq = np.asarray(bseq, dtype=complex)
    n_max = len(bseq) - 1
    m = grid.m
    if n_max >= m:
        raise DomainError(f"{n_max} modes cannot be resolved on an m={m} grid")
    if tail is not None and n_max < m - 1:
        extra_a, extra_b = tail.coefficients(np.arange(n_max + 1, m))
        aseq = np.concatenate((aseq, extra_a))
        bseq = np.concatenate((bseq, extra_b))
        n_max = m - 1
    if fejer:
        taper = 1.0 - np.arange(n_max + 1) / (n_max + 1.0)
        aseq = aseq * taper
        bseq = bseq * taper
    sine = np.zeros(m - 1, dtype=complex)
    sine[: n_max] = aseq[1:]
    cosine = np.zeros(m + 1, dtype=complex)
    cosine[: n_max + 1] = bseq
    w0 = np.zeros(m + 1, dtype=complex)
    w0[1:-1] = fft.dst(sine, type=1) / math.pi
    w1 = fft.dct(cosine, type=1) / math.pi
    return w0, w1


# ---------------------------------------------------------------------------
# q⁻ and the Volterra equation
# ---------------------------------------------------------------------------

def extract_qminus(
    w0: np.ndarray,
    w1: np.ndarray,
    a: DelayParameter | float,
    grid: GridSpec,
    *,
    expected: float | None = None,
    edge: tuple[complex, complex] | None = None,
) -> tuple[np.ndarray, float]:
    """q⁻(x) = (w₀ + w₁)(π - x)/2 on [0, a] and the L2 norm of w₀ - w₁ over (π - a, π).

    ``edge`` holds the values of (w₀, w₁) just above s = π - a when the
    arrays carry the limit from below there. A ConsistencyWarning is issued
    when ``expected`` is given and the norm exceeds it tenfold.
    """
    a = DelayParameter.coerce(a)
    k = grid.junction_index(a.a)
    m = grid.m
    w0 = np.asarray(w0, dtype=complex)
    w1 = np.asarray(w1, dtype=complex)
    qminus = np.zeros(m + 1, dtype=complex)
    s = m - np.arange(k + 1)
    qminus[: k + 1] = 0.5 * (w0[s] + w1[s])
    J = m - k
    gap = np.abs(w0[J:] - w1[J:]) ** 2
    if edge is not None:
        qminus[k] = 0.5 * (edge[0] + edge[1])
        gap[0] = abs(edge[0] - edge[1]) ** 2
    consistency = math.sqrt(max(integrate(gap, J * grid.h, math.pi, grid.rule, x0=J * grid.h).real, 0.0))
    if expected is not None and consistency > max(CONSISTENCY_FACTOR * expected, 1e-12):
        msg = f"w0 and w1 disagree on (pi - a, pi): {consistency:.3e} against {expected:.3e} expected"
        logger.warning(msg)
        warnings.warn(msg, ConsistencyWarning, stacklevel=2)
    return qminus, consistency


@dataclass(frozen=True, eq=False)
class VolterraSystem:
    """Right-hand side W on the nodes of [a, π] and the kernel Q built from ∫₀ q⁻."""

    x: np.ndarray
    W: np.ndarray
    qminus_integral: GridInterpolant
    delay: float

    def kernel(self, X, T):
        """Q(x,t) on x ≤ t; zero below the diagonal."""
        X = np.asarray(X, dtype=float)
        T = np.asarray(T, dtype=float)
        arg = np.where(T > 2.0 * X - self.delay, 2.0 * (X - self.delay), 2.0 * (T - X))
        Q = 2.0 * self.qminus_integral.integral(np.maximum(arg, 0.0))
        return np.where(T >= X, Q, 0.0)

    def kernel_matrix(self) -> np.ndarray:
        X, T = np.meshgrid(self.x, self.x, indexing="ij")
        return self.kernel(X, T)


def assemble_volterra(
    w0: np.ndarray,
    w1: np.ndarray,
    qminus: np.ndarray,
    a: DelayParameter | float,
    grid: GridSpec,
) -> VolterraSystem:
    """W from w₀, w₁ reflected about the midpoint of (a, π); Q from q⁻."""
    a = DelayParameter.coerce(a)
    m = grid.m
    k = grid.junction_index(a.a)
    delay = k * grid.h
    w0 = np.asarray(w0, dtype=complex)
    w1 = np.asarray(w1, dtype=complex)
    idx = np.arange(k, m + 1)
    W = np.empty(len(idx), dtype=complex)
    lower = 2 * idx < m + k
    s_lo = m + k - 2 * idx[lower]
    s_hi = 2 * idx[~lower] - m - k
    W[lower] = 2.0 * (w1[s_lo] + w0[s_lo])
    W[~lower] = 2.0 * (w1[s_hi] - w0[s_hi])
    anti = GridInterpolant(np.asarray(qminus, dtype=complex)[: k + 1], 0.0, grid.h, grid.interp_degree)
    return VolterraSystem(grid.nodes[k:], W, anti, delay)


def solve_volterra(system: VolterraSystem) -> np.ndarray:
    """q⁺ on the nodes of [a, π] from q⁺(x) + ∫_x^π Q(x,t)q⁺(t)dt = W(x)."""
    return solve_triangular_volterra(system.kernel_matrix(), system.W, system.x)


# ---------------------------------------------------------------------------
# End to end
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InverseDiagnostics:
    omega: complex
    omega_alt: complex | None
    qminus_consistency: float
    volterra_residual: float
    n_modes: int
    snap_distance: float

    def to_dict(self) -> dict[str, Any]:
        def pair(z: complex | None):
            return None if z is None else [z.real, z.imag]

        return {
            "omega": pair(self.omega),
            "omega_alt": pair(self.omega_alt),
            "qminus_consistency": self.qminus_consistency,
            "volterra_residual": self.volterra_residual,
        }


@dataclass(frozen=True, eq=False)
class InverseResult:
    potential: PotentialPair
    model: CharFnModel
    system: VolterraSystem
    diagnostics: InverseDiagnostics
    coefficients: tuple[np.ndarray, np.ndarray] = field(repr=False, default=(np.zeros(0), np.zeros(0)))

    @property
    def q(self) -> np.ndarray:
        return self.potential.combined()


def _check_delay(spectrum: SpectralSequence, a: DelayParameter, grid: GridSpec) -> None:
    if spectrum.delay is None:
        return
    if abs(spectrum.delay - a.snapped(grid)) > 0.5 * grid.h + 1e-12 and abs(spectrum.delay - a.a) > 1e-12:
        raise DelayMismatch(f"spectrum j={spectrum.j} has delay {spectrum.delay!r}, run uses {a.a!r}")


def run_algorithm1(
    spectrum0: SpectralSequence,
    spectrum1: SpectralSequence,
    a: DelayParameter | float,
    grid: GridSpec,
    *,
    omega_method: str = "sample",
    fejer: bool = False,
    fourier_tail: bool = True,
) -> InverseResult:
    """Reconstruct q from the spectra of both boundary problems.

    Steps: products, ω (the other estimator as cross-check), Fourier
    coefficients and synthesis of w₀, w₁, q⁻ extraction, Volterra solve
    for q⁺, assembly of q.

    The products used for the coefficients continue past N with the
    asymptotic zeros for the estimated ω. With ``fourier_tail`` the
    synthesis is extended to the grid's last mode by the fitted jump model,
    whose jumps also give the one-sided values of w₀, w₁ at s = π - a.
    """
    a = DelayParameter.coerce(a)
    if spectrum0.j != 0 or spectrum1.j != 1:
        raise DomainError("run_algorithm1 takes the j = 0 spectrum first and the j = 1 spectrum second")
    if len(spectrum0) != len(spectrum1):
        raise DomainError(f"spectra lengths differ: {len(spectrum0)} vs {len(spectrum1)}")
    _check_delay(spectrum0, a, grid)
    _check_delay(spectrum1, a, grid)
    n_max = len(spectrum1) - 1
    if grid.m < MODES_PER_GRID * n_max:
        raise DomainError(f"grid m={grid.m} is too coarse for {n_max} modes (need m >= {MODES_PER_GRID * n_max})")

    prod0 = ProductCharFn(0, spectrum0)
    prod1 = ProductCharFn(1, spectrum1)
    logger.info("step i: products over N=%d eigenvalues", len(spectrum1))

    delay = a.snapped(grid)
    omega = estimate_omega(spectrum1, delay, omega_method)
    other = "ratio" if omega_method == "sample" else "sample"
    try:
        omega_alt: complex | None = estimate_omega(spectrum1, delay, other)
    except InsufficientIndices as exc:
        logger.warning("cross-check estimator %s unavailable: %s", other, exc)
        omega_alt = None
    logger.info("step ii: omega=%s (%s), alt=%s", omega, omega_method, omega_alt)

    aseq, bseq = fourier_coefficients(prod0.with_tail(omega, delay), prod1.with_tail(omega, delay), omega, delay, n_max)
    tail = fit_series_tail(aseq, bseq, a, grid) if fourier_tail else None
    w0, w1 = synthesize_w(aseq, bseq, grid, fejer=fejer, tail=tail)
    k = grid.junction_index(a.a)
    J = grid.m - k
    edge = (w0[J], w1[J])
    if tail is not None and not fejer:
        # partial sums give the midpoint at the break; split it by the fitted jumps
        jump0, jump1 = tail.jumps
        edge = (w0[J] + 0.5 * jump0, w1[J] + 0.5 * jump1)
        w0[J] -= 0.5 * jump0
        w1[J] -= 0.5 * jump1
    logger.info(
        "step iii: %d Fourier modes synthesized on m=%d (series tail %s)",
        n_max, grid.m, "off" if tail is None else f"misfit {tail.misfit:.2e}",
    )

    upper = slice(n_max // 2 + 1, None)
    expected = math.sqrt(2.0 / math.pi * float(np.sum(np.abs(aseq[upper]) ** 2 + np.abs(bseq[upper]) ** 2)))
    qminus, consistency = extract_qminus(w0, w1, a, grid, expected=expected, edge=edge)
    logger.info("step iv: q- extracted, consistency=%.3e", consistency)

    system = assemble_volterra(w0, w1, qminus, a, grid)
    qplus_part = solve_volterra(system)
    residual = volterra_residual(system.kernel_matrix(), qplus_part, system.W, system.x)
    logger.info("step v: Volterra solved, residual=%.3e", residual)

    qplus = np.zeros(grid.m + 1, dtype=complex)
    qplus[k:] = qplus_part
    potential = PotentialPair(a, grid, qminus, qplus)
    model = CharFnModel(omega, w0, w1, a, grid, edge=edge)
    diagnostics = InverseDiagnostics(
        omega=omega,
        omega_alt=omega_alt,
        qminus_consistency=consistency,
        volterra_residual=residual,
        n_modes=n_max,
        snap_distance=a.snap_distance(grid),
    )
    logger.info("step vi: q assembled")
    return InverseResult(potential, model, system, diagnostics, (aseq, bseq))
