"""Shared numerical kernels.

Quadrature on uniform grids, spline readings of node data with their running
integrals, entire trigonometric helpers, complex root finding (Newton with a
contour fallback), the triangular Volterra sweep and the l2 tail diagnostic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Callable, Iterable, Sequence

import numpy as np
from scipy import linalg
from scipy.interpolate import make_interp_spline

from specdelay.constants import (
    CONTOUR_POINTS,
    DERIVATIVE_SERIES_CUTOFF,
    FALLBACK_RADIUS,
    NEWTON_MAX_ITER,
    QUADRATURE_KINDS,
    SERIES_CUTOFF,
    TAIL_FRACTION,
)
from specdelay.errors import DomainError, NonConvergence

if TYPE_CHECKING:
    from specdelay.core import GridSpec

logger = logging.getLogger(__name__)

ComplexFn = Callable[[complex], complex]

_SNAP = 1e-9  # fraction of a cell treated as "on the node"


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _unit_weights(kind: str, n_points: int) -> np.ndarray:
    if n_points < 2:
        return np.zeros(max(n_points, 0))
    if kind == "trapezoid" or n_points == 2:
        w = np.ones(n_points)
        w[0] = w[-1] = 0.5
    elif n_points % 2 == 1:
        w = np.full(n_points, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w /= 3.0
    else:
        # odd number of intervals: Simpson on all but the last, which gets
        # the three-point end correction
        w = np.zeros(n_points)
        w[:-1] = _unit_weights("simpson", n_points - 1)
        w[-3:] += (-1.0 / 12.0, 2.0 / 3.0, 5.0 / 12.0)
    w.setflags(write=False)
    return w


@dataclass(frozen=True)
class QuadratureRule:
    """Composite rule on the uniform grid of a GridSpec."""

    kind: str
    grid: "GridSpec"

    def __post_init__(self) -> None:
        if self.kind not in QUADRATURE_KINDS:
            raise DomainError(f"unknown quadrature kind {self.kind!r}; expected one of {QUADRATURE_KINDS}")

    @property
    def step(self) -> float:
        return self.grid.h

    def weights(self, n_points: int) -> np.ndarray:
        """Node weights for ``n_points`` consecutive nodes; they sum to the interval length."""
        return self.step * _unit_weights(self.kind, n_points)

    def apply(self, values: np.ndarray) -> complex | np.ndarray:
        """Integrate samples along the last axis."""
        values = np.asarray(values)
        return values @ self.weights(values.shape[-1])


def interp_nodes(y, x0: float, step: float, values: np.ndarray):
    """Linear interpolation of node values on ``x0 + k*step``; clamps outside."""
    xs = x0 + step * np.arange(len(values))
    return np.interp(y, xs, values)


def integrate(f: np.ndarray, lo: float, hi: float, rule: QuadratureRule, x0: float = 0.0) -> complex:
    """Integrate node samples ``f`` (nodes ``x0 + k*h``) over [lo, hi].

    Whole cells use the composite rule; partial cells at non-node endpoints
    integrate the linear interpolant exactly.
    """
    f = np.asarray(f)
    h = rule.step
    x_end = x0 + h * (len(f) - 1)
    if lo > hi:
        raise DomainError(f"integrate: lo={lo} exceeds hi={hi}")
    if lo < x0 - _SNAP * h or hi > x_end + _SNAP * h:
        raise DomainError(f"integrate: [{lo}, {hi}] leaves the grid [{x0}, {x_end}]")
    if hi - lo <= _SNAP * h:
        return 0j

    u_lo, u_hi = (lo - x0) / h, (hi - x0) / h
    k_lo = math.ceil(u_lo - _SNAP)
    k_hi = math.floor(u_hi + _SNAP)
    f_lo = interp_nodes(lo, x0, h, f)
    f_hi = interp_nodes(hi, x0, h, f)
    if k_lo > k_hi:
        return complex(0.5 * (hi - lo) * (f_lo + f_hi))

    total = complex(rule.apply(f[k_lo:k_hi + 1])) if k_hi > k_lo else 0j
    left = x0 + k_lo * h - lo
    if left > _SNAP * h:
        total += 0.5 * left * (f_lo + f[k_lo])
    right = hi - (x0 + k_hi * h)
    if right > _SNAP * h:
        total += 0.5 * right * (f[k_hi] + f_hi)
    return total


class GridInterpolant:
    """Spline through node data on ``x0 + k*step`` plus its running integral.

    Degree 1 is the piecewise-linear reading of the data (pairs with the
    trapezoid rule); degree 3 is a not-a-knot cubic (pairs with Simpson).
    Arguments are clamped to the data range, so ``integral`` is 0 before the
    first node and the total after the last.
    """

    def __init__(self, values: np.ndarray, x0: float, step: float, degree: int = 1) -> None:
        self.values = np.asarray(values, dtype=complex)
        if len(self.values) < 2:
            raise DomainError("GridInterpolant needs at least two nodes")
        self.x0 = float(x0)
        self.step = float(step)
        self.x_end = self.x0 + self.step * (len(self.values) - 1)
        k = degree if len(self.values) > degree else 1
        xs = self.x0 + self.step * np.arange(len(self.values))
        self._re = make_interp_spline(xs, self.values.real, k=k)
        self._im = make_interp_spline(xs, self.values.imag, k=k)
        self._re_int = self._re.antiderivative()
        self._im_int = self._im.antiderivative()
        self._base = complex(self._re_int(self.x0), self._im_int(self.x0))

    def _clip(self, y) -> np.ndarray:
        return np.clip(np.asarray(y, dtype=float), self.x0, self.x_end)

    def __call__(self, y):
        y = self._clip(y)
        return self._re(y) + 1j * self._im(y)

    def integral(self, y):
        """Integral of the interpolant from ``x0`` to ``y``."""
        y = self._clip(y)
        return self._re_int(y) + 1j * self._im_int(y) - self._base

    @property
    def total(self) -> complex:
        return complex(self.integral(self.x_end))


# ---------------------------------------------------------------------------
# Entire trigonometric helpers
# ---------------------------------------------------------------------------

def sin_over(rho, x):
    """sin(rho*x)/rho, with its Taylor series near the removable singularity."""
    rho = np.asarray(rho, dtype=complex)
    x = np.asarray(x, dtype=float)
    z = rho * x
    z2 = z * z
    series = x * (1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.sin(z) / rho
    return np.where(np.abs(z) < SERIES_CUTOFF, series, direct)


def sin_over_dlam(rho, x):
    """d/d(lambda) of sin(rho*x)/rho where lambda = rho**2."""
    rho = np.asarray(rho, dtype=complex)
    x = np.asarray(x, dtype=float)
    z = rho * x
    z2 = z * z
    x3 = x ** 3
    series = x3 * (-1.0 / 6.0 + z2 / 60.0 - z2 * z2 / 1680.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = x3 * (z * np.cos(z) - np.sin(z)) / (2.0 * z * z2)
    return np.where(np.abs(z) < DERIVATIVE_SERIES_CUTOFF, series, direct)


def cos_scaled(z, shift):
    """cos(z) * exp(-shift), overflow-free when shift >= |Im z|."""
    z = np.asarray(z, dtype=complex)
    return 0.5 * (np.exp(1j * z - shift) + np.exp(-1j * z - shift))


def sin_scaled(z, shift):
    """sin(z) * exp(-shift), overflow-free when shift >= |Im z|."""
    z = np.asarray(z, dtype=complex)
    return (np.exp(1j * z - shift) - np.exp(-1j * z - shift)) / 2j


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

def _log_derivative(f: ComplexFn, fprime: ComplexFn, z: complex, known: Sequence[complex]) -> tuple[complex, complex]:
    fz = f(z)
    if fz == 0:
        return fz, complex("inf")
    ld = fprime(z) / fz
    for r in known:
        ld -= 1.0 / (z - r)
    return fz, ld


def _newton(
    f: ComplexFn,
    fprime: ComplexFn,
    seed: complex,
    tol: float,
    max_iter: int,
    known: Sequence[complex],
    scale: Callable[[complex], float],
    leash: float | None,
) -> complex | None:
    z = complex(seed)
    best: tuple[complex, float] | None = None
    polish = 0
    for it in range(max_iter):
        fz, ld = _log_derivative(f, fprime, z, known)
        afz = abs(fz)
        if not np.isfinite(afz):
            break
        if afz <= tol * scale(z):
            if best is None or afz < best[1]:
                best = (z, afz)
            if afz == 0 or polish >= 2:
                break
            polish += 1
        if not np.isfinite(ld) or ld == 0:
            break
        step = 1.0 / ld
        z = z - step
        logger.debug("newton it=%d z=%s |f|=%.3e", it, z, afz)
        if leash is not None and abs(z - seed) > leash:
            break
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            fz = f(z)
            if abs(fz) <= tol * scale(z) and (best is None or abs(fz) < best[1]):
                best = (z, abs(fz))
            break
    return None if best is None else best[0]


def _elementary_from_power_sums(s: np.ndarray) -> np.ndarray:
    k = len(s)
    e = np.zeros(k + 1, dtype=complex)
    e[0] = 1.0
    for i in range(1, k + 1):
        acc = 0j
        for p in range(1, i + 1):
            acc += (-1) ** (p - 1) * e[i - p] * s[p - 1]
        e[i] = acc / i
    return e


def contour_roots(
    f: ComplexFn,
    fprime: ComplexFn,
    center: complex,
    radius: float,
    known: Sequence[complex] = (),
    n_points: int = CONTOUR_POINTS,
) -> list[complex]:
    """Zeros of f inside a disk by the argument principle.

    The count and the power sums of the zeros come from trapezoid sums of
    f'/f on the circle (known zeros deflated); the zeros are the roots of the
    polynomial those power sums define.
    """
    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    offsets = radius * np.exp(1j * theta)
    ld = np.empty(n_points, dtype=complex)
    for i, w in enumerate(offsets):
        _, ld[i] = _log_derivative(f, fprime, center + w, known)
    if not np.all(np.isfinite(ld)):
        raise NonConvergence(f"zero on the contour |z - {center}| = {radius}")
    count = int(round((ld * offsets).mean().real))
    logger.debug("contour at %s r=%.3g encloses %d zero(s)", center, radius, count)
    if count <= 0:
        return []
    if count > 8:
        raise NonConvergence(f"{count} zeros inside |z - {center}| < {radius}; refusing to separate them")
    sums = np.array([(ld * offsets ** (p + 1)).mean() for p in range(1, count + 1)])
    e = _elementary_from_power_sums(sums)
    coeffs = [(-1) ** i * e[i] for i in range(count + 1)]
    return [center + w for w in np.roots(coeffs)]


def newton_root(
    f: ComplexFn,
    fprime: ComplexFn,
    seed: complex,
    tol: float = 1e-10,
    max_iter: int = NEWTON_MAX_ITER,
    *,
    radius: float = FALLBACK_RADIUS,
    known: Iterable[complex] = (),
    scale: Callable[[complex], float] | None = None,
) -> complex:
    """Find a zero of an analytic function near ``seed``.

    Args:
        f: the function.
        fprime: its analytic derivative.
        seed: starting point.
        tol: acceptance threshold, |f(z)| <= tol * scale(z).
        max_iter: Newton iteration cap.
        radius: disk radius of the argument-principle fallback; Newton
            iterates leaving four radii around the seed count as divergence.
        known: zeros to deflate (each divides f once).
        scale: optional magnitude scale for the acceptance test.

    Returns:
        The accepted zero.

    Raises:
        NonConvergence: Newton diverged and the contour search found no
            certifiable zero.
    """
    known = list(known)
    sc = scale or (lambda z: 1.0)
    root = _newton(f, fprime, seed, tol, max_iter, known, sc, 4.0 * radius)
    if root is not None and abs(root - seed) <= radius:
        return root
    logger.debug("newton from %s left the disk or stalled; contour fallback", seed)

    candidates = contour_roots(f, fprime, complex(seed), radius, known)
    polished: list[complex] = []
    for guess in candidates:
        z = _newton(f, fprime, guess, tol, max_iter, known, sc, radius)
        if z is not None:
            polished.append(z)
    if root is not None and root not in polished:
        polished.append(root)
    if not polished:
        raise NonConvergence(f"no zero certified near {seed} (tol={tol:g})")
    return min(polished, key=lambda z: abs(z - seed))


# ---------------------------------------------------------------------------
# Volterra equation of the second kind
# ---------------------------------------------------------------------------

def _kernel_matrix(kernel, x: np.ndarray) -> np.ndarray:
    if callable(kernel):
        X, T = np.meshgrid(x, x, indexing="ij")
        return np.asarray(kernel(X, T), dtype=complex) * np.ones_like(X, dtype=complex)
    mat = np.asarray(kernel, dtype=complex)
    if mat.shape != (len(x), len(x)):
        raise DomainError(f"kernel matrix shape {mat.shape} does not match {len(x)} nodes")
    return mat


def volterra_matrix(kernel, x: np.ndarray) -> np.ndarray:
    """System matrix of u(x) + int_x^end K(x,t) u(t) dt under trapezoid-Nystrom."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    h = x[1] - x[0]
    K = _kernel_matrix(kernel, x)
    A = np.eye(n, dtype=complex)
    for k in range(n - 1):
        w = np.full(n - k, h)
        w[0] = w[-1] = 0.5 * h
        A[k, k:] += w * K[k, k:]
    return A


def solve_triangular_volterra(kernel, rhs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Solve u(x) + int_x^{x_end} K(x,t) u(t) dt = rhs(x) on uniform nodes.

    Trapezoid-Nystrom discretization; the unknown at node k follows from
    nodes k+1.. by backward substitution, the diagonal factor
    1 + h*K(x_k,x_k)/2 inverted exactly.

    Args:
        kernel: callable K(X, T) on meshgrids, or the sampled n x n matrix.
        rhs: right-hand side at the nodes.
        x: uniform nodes, increasing.

    Returns:
        The solution at the nodes.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(rhs, dtype=complex)
    n = len(x)
    if f.shape != (n,):
        raise DomainError(f"rhs has shape {f.shape}, expected ({n},)")
    if n == 1:
        return f.copy()
    h = x[1] - x[0]
    K = _kernel_matrix(kernel, x)
    u = np.zeros(n, dtype=complex)
    u[-1] = f[-1]
    for k in range(n - 2, -1, -1):
        w = np.full(n - k - 1, h)
        w[-1] = 0.5 * h
        diag = 1.0 + 0.5 * h * K[k, k]
        if abs(diag) < 1e-12:
            raise DomainError(f"Volterra diagonal vanishes at node {k}; refine the grid")
        u[k] = (f[k] - np.dot(w * K[k, k + 1:], u[k + 1:])) / diag
    return u


def dense_volterra_solve(kernel, rhs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Same discretized system as solve_triangular_volterra, by LU."""
    return linalg.solve(volterra_matrix(kernel, x), np.asarray(rhs, dtype=complex))


def volterra_residual(kernel, solution: np.ndarray, rhs: np.ndarray, x: np.ndarray) -> float:
    """Max-norm residual of the discretized equation."""
    A = volterra_matrix(kernel, x)
    return float(np.max(np.abs(A @ solution - rhs), initial=0.0))


# ---------------------------------------------------------------------------
# Sequence diagnostics
# ---------------------------------------------------------------------------

def l2_tail_diagnostic(seq) -> tuple[np.ndarray, bool]:
    """Cumulative sums of |seq|^2 and whether the last quarter is negligible.

    The flag is set when the last quarter contributes less than 5% of the
    total (or the total is zero).
    """
    seq = np.asarray(seq, dtype=complex)
    if len(seq) < 16:
        raise DomainError(f"l2_tail_diagnostic needs at least 16 terms, got {len(seq)}")
    partial = np.cumsum(np.abs(seq) ** 2)
    total = partial[-1]
    if total == 0:
        return partial, True
    head = partial[len(seq) - len(seq) // 4 - 1]
    return partial, bool((total - head) < TAIL_FRACTION * total)
