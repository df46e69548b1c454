"""Domain types and transformation-operator formulas.

The potential q is split at the delay a into q⁻ (supported on (0, a)) and q⁺
(supported on (a, π)); both live as node values on a uniform grid of [0, π].
From q⁺ come the transformation-operator kernels P, K, K_j and the running
half-integral ω(x); from the pair come the densities w₀, w₁ that
parameterize both characteristic functions.

Usage:
    grid = GridSpec(512)
    pot = PotentialPair.from_functions(lambda x: 0 * x, lambda x: 1 + 0 * x, math.pi / 2, grid)
    model = build_w_functions(pot)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from specdelay.constants import DEFAULT_GRID_M, HALF_PI, MIN_GRID_M, QUADRATURE_KINDS
from specdelay.errors import DelayOutOfRange, DomainError
from specdelay.numerics import GridInterpolant, QuadratureRule, sin_over

logger = logging.getLogger(__name__)

_EDGE_SLACK = 1e-12

GridFunction = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Grid and delay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform grid x_k = kπ/m, k = 0..m, with the quadrature rule used on it."""

    m: int = DEFAULT_GRID_M
    quadrature: str = "trapezoid"

    def __post_init__(self) -> None:
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < MIN_GRID_M:
            raise DomainError(f"grid size m must be an integer >= {MIN_GRID_M}, got {self.m!r}")
        if self.quadrature not in QUADRATURE_KINDS:
            raise DomainError(f"unknown quadrature {self.quadrature!r}; expected one of {QUADRATURE_KINDS}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def h(self) -> float:
        return math.pi / self.m

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.m + 1)

    @property
    def rule(self) -> QuadratureRule:
        return QuadratureRule(self.quadrature, self)

    @property
    def interp_degree(self) -> int:
        """Spline degree for point reads, matched to the quadrature order."""
        return 1 if self.quadrature == "trapezoid" else 3

    def junction_index(self, a: float) -> int:
        """Node that carries the delay: nearest to a, never below π/2, never at π."""
        k = int(round(a / self.h))
        k = max(k, math.ceil(self.m / 2 - 1e-9))
        return min(k, self.m - 1)

    def node_index(self, x: float) -> int:
        """Index of the node at x; raises when x is not a node."""
        k = int(round(x / self.h))
        if not 0 <= k <= self.m or abs(k * self.h - x) > 1e-9 * max(1.0, abs(x)):
            raise DomainError(f"x={x!r} is not a node of the m={self.m} grid")
        return k


@dataclass(frozen=True)
class DelayParameter:
    """The constant delay a, restricted to [π/2, π)."""

    a: float

    def __post_init__(self) -> None:
        a = float(self.a)
        if not math.isfinite(a) or a < HALF_PI - _EDGE_SLACK or a >= math.pi:
            raise DelayOutOfRange(f"delay a={self.a!r} must lie in [pi/2, pi)")
        object.__setattr__(self, "a", max(a, HALF_PI))

    @classmethod
    def coerce(cls, value: "DelayParameter | float") -> "DelayParameter":
        return value if isinstance(value, cls) else cls(float(value))

    def __float__(self) -> float:
        return self.a

    def snapped(self, grid: GridSpec) -> float:
        return grid.junction_index(self.a) * grid.h

    def snap_distance(self, grid: GridSpec) -> float:
        return abs(self.snapped(grid) - self.a)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

def _frozen_array(values, n: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=complex).reshape(-1)
    if arr.shape != (n,):
        raise DomainError(f"{name} has {arr.size} values, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """Split potential on the grid.

    Both components are full-length node arrays. At the junction node each
    holds its one-sided limit; elsewhere q⁻ vanishes right of the junction
    and q⁺ vanishes left of it.
    """

    a: DelayParameter
    grid: GridSpec
    qminus: np.ndarray
    qplus: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", DelayParameter.coerce(self.a))
        n = self.grid.m + 1
        qminus = _frozen_array(self.qminus, n, "qminus")
        qplus = _frozen_array(self.qplus, n, "qplus")
        k = self.junction
        if np.any(qminus[k + 1:] != 0) or np.any(qplus[:k] != 0):
            raise DomainError("support violated: qminus must vanish right of a and qplus left of a")
        object.__setattr__(self, "qminus", qminus)
        object.__setattr__(self, "qplus", qplus)

    @property
    def junction(self) -> int:
        return self.grid.junction_index(self.a.a)

    @property
    def delay(self) -> float:
        """The delay as resolved on the grid."""
        return self.junction * self.grid.h

    @cached_property
    def qplus_interp(self) -> GridInterpolant:
        return GridInterpolant(self.qplus[self.junction:], self.delay, self.grid.h, self.grid.interp_degree)

    @cached_property
    def qminus_interp(self) -> GridInterpolant:
        return GridInterpolant(self.qminus[: self.junction + 1], 0.0, self.grid.h, self.grid.interp_degree)

    @classmethod
    def from_functions(
        cls,
        qminus_fn: GridFunction,
        qplus_fn: GridFunction,
        a: DelayParameter | float,
        grid: GridSpec,
    ) -> "PotentialPair":
        """Sample q⁻ on [0, a] and q⁺ on [a, π]; the junction takes both one-sided values."""
        a = DelayParameter.coerce(a)
        k = grid.junction_index(a.a)
        x = grid.nodes
        qminus = np.zeros(grid.m + 1, dtype=complex)
        qplus = np.zeros(grid.m + 1, dtype=complex)
        qminus[: k + 1] = np.broadcast_to(qminus_fn(x[: k + 1]), (k + 1,))
        qplus[k:] = np.broadcast_to(qplus_fn(x[k:]), (grid.m + 1 - k,))
        return cls(a, grid, qminus, qplus)

    @classmethod
    def zero(cls, a: DelayParameter | float, grid: GridSpec) -> "PotentialPair":
        n = grid.m + 1
        return cls(DelayParameter.coerce(a), grid, np.zeros(n), np.zeros(n))

    def combined(self) -> np.ndarray:
        """q = q⁻ + q⁺ as one node array; the junction holds the mean of the one-sided limits."""
        q = self.qminus + self.qplus
        k = self.junction
        q[k] = 0.5 * (self.qminus[k] + self.qplus[k])
        return q


def split_potential(q, a: DelayParameter | float, grid: GridSpec) -> PotentialPair:
    """Split single-valued node data at the delay.

    The junction node value goes to both sides, so q = q⁻ + q⁺ holds at
    every other node.
    """
    a = DelayParameter.coerce(a)
    q = np.asarray(q, dtype=complex)
    if q.shape != (grid.m + 1,):
        raise DomainError(f"q has shape {q.shape}, expected ({grid.m + 1},)")
    k = grid.junction_index(a.a)
    qminus = np.zeros_like(q)
    qplus = np.zeros_like(q)
    qminus[: k + 1] = q[: k + 1]
    qplus[k:] = q[k:]
    return PotentialPair(a, grid, qminus, qplus)


def _piece_norms(pot: PotentialPair, mask: np.ndarray | None) -> float:
    rule = pot.grid.rule
    k = pot.junction
    left = np.abs(pot.qminus[: k + 1]) ** 2
    right = np.abs(pot.qplus[k:]) ** 2
    if mask is not None:
        left = np.where(mask[: k + 1], left, 0.0)
        right = np.where(mask[k:], right, 0.0)
    return float(rule.apply(left).real + rule.apply(right).real)


def relative_l2_error(candidate: PotentialPair, reference: PotentialPair, mask: np.ndarray | None = None) -> float:
    """Piecewise L2 distance of two potentials relative to the reference norm.

    ``mask`` (boolean, one entry per node) restricts both norms to the
    selected nodes. A zero reference yields the absolute distance.
    """
    if candidate.grid != reference.grid or candidate.junction != reference.junction:
        raise DomainError("potentials live on different grids or delays")
    diff = PotentialPair(
        reference.a,
        reference.grid,
        candidate.qminus - reference.qminus,
        candidate.qplus - reference.qplus,
    )
    num = _piece_norms(diff, mask)
    den = _piece_norms(reference, mask)
    return math.sqrt(num / den) if den > 0 else math.sqrt(num)


# ---------------------------------------------------------------------------
# Transformation-operator kernels
# ---------------------------------------------------------------------------

def _scalar(value):
    return complex(value) if np.ndim(value) == 0 else value


def _check_triangle(x, t, pot: PotentialPair) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    a = pot.delay
    bad = (t < a - _EDGE_SLACK) | (t > x + _EDGE_SLACK) | (x > math.pi + _EDGE_SLACK)
    if np.any(bad):
        raise DomainError(f"kernel arguments must satisfy a <= t <= x <= pi (a={a:.6g})")
    return x, t


def kernel_P(x, t, pot: PotentialPair):
    """P(x,t): half the integral of q⁺ over [(a+t)/2, x+(a-t)/2]."""
    x, t = _check_triangle(x, t, pot)
    a = pot.delay
    ip = pot.qplus_interp.integral
    return _scalar(0.5 * (ip(x + 0.5 * (a - t)) - ip(0.5 * (a + t))))


def kernel_K(x, t, pot: PotentialPair):
    """K(x,t) = ½∫_a^{(a+t)/2} q⁺ + ½∫_a^{x+(a-t)/2} q⁺."""
    x, t = _check_triangle(x, t, pot)
    a = pot.delay
    ip = pot.qplus_interp.integral
    return _scalar(0.5 * ip(0.5 * (a + t)) + 0.5 * ip(x + 0.5 * (a - t)))


def kernel_Kj(j: int, x, t, pot: PotentialPair):
    """K_j(x,t) = ¼(q⁺((a+t)/2) - (-1)^j q⁺(x+(a-t)/2))."""
    if j not in (0, 1):
        raise DomainError(f"boundary index j must be 0 or 1, got {j!r}")
    x, t = _check_triangle(x, t, pot)
    a = pot.delay
    qp = pot.qplus_interp
    sign = 1.0 if j == 0 else -1.0
    return _scalar(0.25 * (qp(0.5 * (a + t)) - sign * qp(x + 0.5 * (a - t))))


def omega_of_x(x, pot: PotentialPair):
    """ω(x) = ½∫_a^x q⁺; omega_of_x(π) is the spectral shift constant ω."""
    x = np.asarray(x, dtype=float)
    if np.any(x < pot.delay - _EDGE_SLACK) or np.any(x > math.pi + _EDGE_SLACK):
        raise DomainError(f"omega_of_x needs a <= x <= pi (a={pot.delay:.6g})")
    return _scalar(0.5 * pot.qplus_interp.integral(x))


def transform_S(x: float, lam: complex, pot: PotentialPair) -> complex:
    """S(x,λ) through its transformation operator, at a grid node x."""
    k = pot.grid.node_index(x)
    x = k * pot.grid.h
    rho = np.sqrt(complex(lam))
    free = complex(sin_over(rho, x))
    if k <= pot.junction:
        return free
    t = pot.grid.nodes[pot.junction: k + 1]
    integrand = kernel_P(x, t, pot) * sin_over(rho, x - t)
    return free + complex(pot.grid.rule.apply(integrand))


def transform_C(x: float, lam: complex, pot: PotentialPair) -> complex:
    """C(x,λ) through its transformation operator, at a grid node x."""
    k = pot.grid.node_index(x)
    x = k * pot.grid.h
    rho = np.sqrt(complex(lam))
    free = complex(np.cos(rho * x))
    if k <= pot.junction:
        return free
    t = pot.grid.nodes[pot.junction: k + 1]
    integrand = kernel_K(x, t, pot) * np.cos(rho * (x - t))
    return free + complex(pot.grid.rule.apply(integrand))


# ---------------------------------------------------------------------------
# Characteristic-function densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CharFnModel:
    """(ω, w₀, w₁) parameterizing Δ₀ and Δ₁.

    w₀ and w₁ are node arrays over s ∈ [0, π]. Both may jump at
    s = π - a: the arrays hold the inner limit (s → π - a from below) and
    ``edge`` holds the outer limits of (w₀, w₁).
    """

    omega: complex
    w0: np.ndarray
    w1: np.ndarray
    a: DelayParameter
    grid: GridSpec
    edge: tuple[complex, complex] = field(default=(0j, 0j))

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", DelayParameter.coerce(self.a))
        object.__setattr__(self, "omega", complex(self.omega))
        n = self.grid.m + 1
        object.__setattr__(self, "w0", _frozen_array(self.w0, n, "w0"))
        object.__setattr__(self, "w1", _frozen_array(self.w1, n, "w1"))
        object.__setattr__(self, "edge", (complex(self.edge[0]), complex(self.edge[1])))

    @property
    def delay(self) -> float:
        return self.grid.junction_index(self.a.a) * self.grid.h

    @property
    def split(self) -> int:
        """Node index of s = π - a."""
        return self.grid.m - self.grid.junction_index(self.a.a)

    def pieces(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """w_j on [0, π-a] and on [π-a, π], each with its own value at the split."""
        w = self.w0 if j == 0 else self.w1
        J = self.split
        outer = np.concatenate(([self.edge[j]], w[J + 1:]))
        return w[: J + 1], outer

    def overlap_error(self) -> float:
        """max |w₀ - w₁| over [π-a, π]; both equal q⁻(π - s) there."""
        J = self.split
        diffs = np.concatenate(([self.edge[0] - self.edge[1]], self.w0[J + 1:] - self.w1[J + 1:]))
        return float(np.max(np.abs(diffs)))

    @classmethod
    def zero(cls, a: DelayParameter | float, grid: GridSpec) -> "CharFnModel":
        n = grid.m + 1
        return cls(0j, np.zeros(n), np.zeros(n), DelayParameter.coerce(a), grid)


def _half_node_tables(pot: PotentialPair) -> tuple[np.ndarray, np.ndarray]:
    """q⁺ and its running integral from a at a + l·h/2, l = 0..2(m - k_a)."""
    M = pot.grid.m - pot.junction
    y = pot.delay + 0.5 * pot.grid.h * np.arange(2 * M + 1)
    return pot.qplus_interp(y), pot.qplus_interp.integral(y)


def cauchy_densities(pot: PotentialPair) -> tuple[np.ndarray, np.ndarray]:
    """Densities v₀, v₁ of the Cauchy solution with free term q⁻, on s-nodes.

    z(π) = ∫ v₀(s) sin(ρs)/ρ ds and z'(π) = ∫ v₁(s) cos(ρs) ds. For s past
    π - a both equal q⁻(π - s) (outer limit q⁻(a⁻) is the model edge); up to
    π - a they are the double integrals of q⁻ against q⁺, the split node
    holding the inner value.
    """
    m = pot.grid.m
    k = pot.junction
    M = m - k
    rule = pot.grid.rule
    _, iph = _half_node_tables(pot)
    top = iph[2 * M]
    v0 = np.zeros(m + 1, dtype=complex)
    v1 = np.zeros(m + 1, dtype=complex)
    v0[M + 1:] = pot.qminus[k - 1:: -1]
    v1[M + 1:] = v0[M + 1:]
    for d in range(M + 1):
        i = np.arange(d + 1)
        weighted = rule.weights(d + 1) * pot.qminus[: d + 1]
        lo = iph[d + i]
        hi = iph[2 * M - d + i]
        v0[M - d] = 0.5 * np.dot(weighted, hi - lo)
        v1[M - d] = 0.5 * np.dot(weighted, (top - lo) + (top - hi))
    return v0, v1


def build_w_functions(pot: PotentialPair) -> CharFnModel:
    """Assemble (ω, w₀, w₁) from the split potential."""
    M = pot.grid.m - pot.junction
    qph, iph = _half_node_tables(pot)
    v0, v1 = cauchy_densities(pot)
    d = np.arange(M + 1)
    near, far = qph[d], qph[2 * M - d]
    w0 = v0.copy()
    w1 = v1.copy()
    w0[M - d] += 0.25 * (near - far)
    w1[M - d] += 0.25 * (near + far)
    omega = 0.5 * complex(iph[2 * M])
    edge = complex(pot.qminus[pot.junction])
    logger.debug("w-functions built: m=%d split=%d omega=%s", pot.grid.m, M, omega)
    return CharFnModel(omega, w0, w1, pot.a, pot.grid, edge=(edge, edge))
