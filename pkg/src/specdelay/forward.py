"""Forward problem: characteristic functions, eigenvalues and an IVP oracle.

Usage:
    model = build_w_functions(pot)
    spectrum0 = compute_spectrum(0, model, 128)
    check = solve_ivp_method_of_steps(pot, 1.0).y_end   # equals Δ₀(1)
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from specdelay.constants import (
    CERTIFY_TOL,
    DEFAULT_TOL_ROOT,
    IVP_MAX_REFINE,
    IVP_TOL,
    MERGE_TOL,
    MIN_N_EIGEN,
    ORACLE_GROWTH_BAND,
    ORACLE_TOL,
    REPAIR_RADIUS,
    ZERO_INDEX_RADIUS,
    ZERO_INDEX_SEED_J1,
)
from specdelay.core import (
    CharFnModel,
    PotentialPair,
    build_w_functions,
    cauchy_densities,
    kernel_Kj,
    omega_of_x,
)
from specdelay.errors import DomainError, NonConvergence, StepControlFailure
from specdelay.numerics import newton_root, sin_over, sin_over_dlam

logger = logging.getLogger(__name__)


def _check_j(j: int) -> None:
    if j not in (0, 1):
        raise DomainError(f"boundary index j must be 0 or 1, got {j!r}")


def _like_input(value: np.ndarray, template):
    return complex(value[0]) if np.ndim(template) == 0 else value.reshape(np.shape(template))


# ---------------------------------------------------------------------------
# Characteristic functions
# ---------------------------------------------------------------------------

class CharFnEvaluator:
    """Δ₀ and Δ₁ of a CharFnModel, vectorized over λ.

    Only cos ρx, sin(ρx)/ρ and ρ² enter, so results do not depend on which
    square root of λ is taken.
    """

    def __init__(self, model: CharFnModel) -> None:
        self.model = model
        grid = model.grid
        split = model.split
        self._rule = grid.rule
        self._x = (grid.nodes[: split + 1], grid.nodes[split:])
        self._pieces = (model.pieces(0), model.pieces(1))
        self._tail = math.pi - model.delay

    def _integral(self, j: int, kernel) -> np.ndarray:
        total = 0j
        for x, w in zip(self._x, self._pieces[j]):
            total = total + self._rule.apply(kernel(x[None, :]) * w)
        return total

    def at_rho(self, j: int, rho):
        """Δ_j(ρ²) for given ρ (scalar or array)."""
        _check_j(j)
        r = np.atleast_1d(np.asarray(rho, dtype=complex)).reshape(-1)
        lam = r * r
        rc = r[:, None]
        om = self.model.omega
        if j == 0:
            val = np.cos(r * math.pi) + om * sin_over(r, self._tail)
            val = val + self._integral(0, lambda x: sin_over(rc, x))
        else:
            val = -lam * sin_over(r, math.pi) + om * np.cos(r * self._tail)
            val = val + self._integral(1, lambda x: np.cos(rc * x))
        return _like_input(val, rho)

    def __call__(self, j: int, lam):
        return self.at_rho(j, np.sqrt(np.asarray(lam, dtype=complex)))

    def derivative(self, j: int, lam):
        """dΔ_j/dλ from the differentiated integral representation."""
        _check_j(j)
        lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex)).reshape(-1)
        r = np.sqrt(lam_arr)
        rc = r[:, None]
        om = self.model.omega
        tail = self._tail
        if j == 0:
            val = -0.5 * math.pi * sin_over(r, math.pi) + om * sin_over_dlam(r, tail)
            val = val + self._integral(0, lambda x: sin_over_dlam(rc, x))
        else:
            val = -sin_over(r, math.pi) - lam_arr * sin_over_dlam(r, math.pi)
            val = val - 0.5 * om * tail * sin_over(r, tail)
            val = val + self._integral(1, lambda x: -0.5 * x * sin_over(rc, x))
        return _like_input(val, lam)


def eval_char_fn(j: int, lam, model: CharFnModel):
    return CharFnEvaluator(model)(j, lam)


# ---------------------------------------------------------------------------
# Cauchy problem terms
# ---------------------------------------------------------------------------

def eval_cauchy_z(lam: complex, pot: PotentialPair) -> tuple[complex, complex]:
    """z(π,λ; q⁻) and z'(π,λ; q⁻): the solution with free term q⁻ and zero data."""
    grid = pot.grid
    rule = grid.rule
    split = grid.m - pot.junction
    v0, v1 = cauchy_densities(pot)
    edge = pot.qminus[pot.junction]
    rho = np.sqrt(complex(lam))
    pieces = (
        (grid.nodes[: split + 1], v0[: split + 1], v1[: split + 1]),
        (grid.nodes[split:], np.concatenate(([edge], v0[split + 1:])), np.concatenate(([edge], v1[split + 1:]))),
    )
    z = 0j
    dz = 0j
    for x, p0, p1 in pieces:
        z += complex(rule.apply(p0 * sin_over(rho, x)))
        dz += complex(rule.apply(p1 * np.cos(rho * x)))
    return z, dz


def eval_cauchy_c(lam: complex, pot: PotentialPair) -> tuple[complex, complex]:
    """C(π,λ) and C'(π,λ) from ω and the kernels K₀(π,t), K₁(π,t)."""
    rho = np.sqrt(complex(lam))
    t = pot.grid.nodes[pot.junction:]
    rule = pot.grid.rule
    tail = math.pi - pot.delay
    om = omega_of_x(math.pi, pot)
    k0 = kernel_Kj(0, math.pi, t, pot)
    k1 = kernel_Kj(1, math.pi, t, pot)
    c = np.cos(rho * math.pi) + om * sin_over(rho, tail) + rule.apply(k0 * sin_over(rho, math.pi - t))
    dc = -rho * rho * sin_over(rho, math.pi) + om * np.cos(rho * tail) + rule.apply(k1 * np.cos(rho * (math.pi - t)))
    return complex(c), complex(dc)


# ---------------------------------------------------------------------------
# Method-of-steps oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IvpSolution:
    """y(π), y'(π) and, when requested, y at the grid nodes.

    For array λ the fields are arrays indexed like λ (trajectory has the grid
    along its first axis).
    """

    y_end: complex | np.ndarray
    dy_end: complex | np.ndarray
    trajectory: np.ndarray | None = None
    level: int = 0


def _rk4_pass(pot: PotentialPair, lam: np.ndarray, level: int, y0: complex, dy0: complex):
    grid = pot.grid
    sub = 2 ** level
    hf = grid.h / sub
    n_steps = grid.m * sub
    K = pot.junction * sub
    x = hf * np.arange(n_steps + 1)
    stages = (x[:-1], x[:-1] + 0.5 * hf, x[1:])
    left = np.arange(n_steps) < K
    # each fine step lies in one cell: sample that side's coefficient only
    qm = [np.where(left, pot.qminus_interp(p), 0.0) for p in stages]
    qp = [np.where(left, 0.0, pot.qplus_interp(p)) for p in stages]

    Y = np.empty((n_steps + 1, lam.size), dtype=complex)
    V = np.empty_like(Y)
    Y[0] = y0
    V[0] = dy0
    half = 0.5 * hf
    for i in range(n_steps):
        y, v = Y[i], V[i]
        if i < K:
            g1, g2, g4 = qm[0][i] * y0, qm[1][i] * y0, qm[2][i] * y0
        else:
            p = i - K
            yl, yr = Y[p], Y[p + 1]
            ymid = 0.5 * (yl + yr) + 0.125 * hf * (V[p] - V[p + 1])
            g1, g2, g4 = qp[0][i] * yl, qp[1][i] * ymid, qp[2][i] * yr
        k1y = v
        k1v = g1 - lam * y
        k2y = v + half * k1v
        k2v = g2 - lam * (y + half * k1y)
        k3y = v + half * k2v
        k3v = g2 - lam * (y + half * k2y)
        k4y = v + hf * k3v
        k4v = g4 - lam * (y + hf * k3y)
        Y[i + 1] = y + hf / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        V[i + 1] = v + hf / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return Y[-1].copy(), V[-1].copy(), Y[::sub].copy()


def solve_ivp_method_of_steps(
    pot: PotentialPair,
    lam,
    *,
    y0: complex = 1.0,
    dy0: complex = 0.0,
    tol: float = IVP_TOL,
    max_refine: int = IVP_MAX_REFINE,
    keep_trajectory: bool = False,
) -> IvpSolution:
    """Integrate -y'' + q⁺(x)y(x-a) + q⁻(x)y(0) = λy on [0, π].

    Fixed-step RK4 on the grid refined by halving; the delayed value is read
    from the stored trajectory (cubic Hermite at step midpoints) and equals
    y(0) before the delay. Refinement stops once two successive levels agree
    to ``tol`` relative to 1 + |value|.

    Args:
        pot: the split potential.
        lam: spectral parameter, scalar or array.
        y0: y(0); the eigenfunction normalization uses 1.
        dy0: y'(0).
        tol: agreement required between successive levels.
        max_refine: number of halvings allowed.
        keep_trajectory: also return y at the grid nodes.

    Returns:
        IvpSolution with y(π), y'(π) (Δ₀(λ), Δ₁(λ) for the default data).

    Raises:
        StepControlFailure: the levels never agreed.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex)).reshape(-1)
    y_prev, dy_prev, traj = _rk4_pass(pot, lam_arr, 0, y0, dy0)
    for level in range(1, max_refine + 1):
        y_cur, dy_cur, traj = _rk4_pass(pot, lam_arr, level, y0, dy0)
        ok_y = np.abs(y_cur - y_prev) < tol * (1.0 + np.abs(y_cur))
        ok_dy = np.abs(dy_cur - dy_prev) < tol * (1.0 + np.abs(dy_cur))
        logger.debug("ivp level=%d max|dy|=%.3e", level, float(np.max(np.abs(y_cur - y_prev))))
        if np.all(ok_y & ok_dy):
            trajectory = None
            if keep_trajectory:
                trajectory = traj[:, 0] if np.ndim(lam) == 0 else traj
            return IvpSolution(_like_input(y_cur, lam), _like_input(dy_cur, lam), trajectory, level)
        y_prev, dy_prev = y_cur, dy_cur
    raise StepControlFailure(f"IVP step halving did not reach tol={tol:g} within {max_refine} levels")


def oracle_tolerance(lam, tol: float = ORACLE_TOL):
    """Allowed |Δ_j(λ) - oracle| at λ.

    tol·(1 + |λ|), widened by exp(π(|Im ρ| - ORACLE_GROWTH_BAND)) once |Im ρ|
    leaves the band. Far out on the negative axis both sides grow like
    exp(π|Im ρ|) and agree only relative to that size.
    """
    lam = np.asarray(lam, dtype=complex)
    excess = np.maximum(np.abs(np.sqrt(lam).imag) - ORACLE_GROWTH_BAND, 0.0)
    return tol * (1.0 + np.abs(lam)) * np.exp(math.pi * excess)


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------

def _rho(lam: complex) -> complex:
    return complex(np.sqrt(complex(lam)))


@dataclass(frozen=True, eq=False)
class SpectralSequence:
    """Eigenvalues λ_{n,j}, n = 0..N-1, sorted by real then imaginary part.

    Multiple eigenvalues are repeated adjacent entries.
    """

    j: int
    lambdas: np.ndarray
    delay: float | None = None

    def __post_init__(self) -> None:
        _check_j(self.j)
        lams = np.array(self.lambdas, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(lams)):
            raise DomainError("spectrum contains non-finite eigenvalues")
        lams.setflags(write=False)
        object.__setattr__(self, "lambdas", lams)

    @property
    def N(self) -> int:
        return len(self.lambdas)

    def __len__(self) -> int:
        return len(self.lambdas)

    def __iter__(self) -> Iterator[complex]:
        return (complex(v) for v in self.lambdas)

    @property
    def rho(self) -> np.ndarray:
        """Principal square roots (non-negative real part)."""
        return np.sqrt(self.lambdas)

    def multiplicities(self, tol: float = MERGE_TOL) -> list[tuple[complex, int]]:
        """Distinct eigenvalues with their counts; ρ within ``tol`` merge."""
        groups: list[tuple[complex, int]] = []
        for lam, r in zip(self.lambdas, self.rho):
            if groups and abs(_rho(groups[-1][0]) - r) < tol:
                groups[-1] = (groups[-1][0], groups[-1][1] + 1)
            else:
                groups.append((complex(lam), 1))
        return groups

    @classmethod
    def unperturbed(cls, j: int, n_max: int, delay: float | None = None) -> "SpectralSequence":
        """(n + 1/2)² for j = 0, n² for j = 1."""
        n = np.arange(n_max) + 0.5 * (1 - j)
        return cls(j, n * n, delay)


def asymptotic_seed(j: int, n: int, omega: complex, a: float) -> complex:
    """Starting ρ for index n: n + (1-j)/2 + ω cos((n + (1-j)/2)a)/(πn)."""
    nu = n + 0.5 * (1 - j)
    if n == 0:
        return complex(nu if j == 0 else ZERO_INDEX_SEED_J1)
    return complex(nu + omega * math.cos(nu * a) / (math.pi * n))


class _RootSearch:
    def __init__(self, evaluator: CharFnEvaluator, j: int, tol: float) -> None:
        self.ev = evaluator
        self.j = j
        self.tol = tol

    def find(self, n: int, seed: complex, known: list[complex]) -> complex:
        ev, j = self.ev, self.j
        if n == 0:
            lam = newton_root(
                lambda z: ev(j, z),
                lambda z: ev.derivative(j, z),
                seed * seed,
                self.tol,
                radius=ZERO_INDEX_RADIUS,
                known=known,
                scale=lambda z: max(1.0, abs(z)),
            )
        else:
            rho = newton_root(
                lambda r: ev.at_rho(j, r),
                lambda r: 2.0 * r * ev.derivative(j, r * r),
                seed,
                self.tol,
                known=[_rho(k) for k in known],
                scale=lambda r: max(1.0, abs(r) ** 2),
            )
            lam = rho * rho
        residual = abs(ev(j, lam))
        if residual > CERTIFY_TOL * max(1.0, abs(lam)):
            raise NonConvergence(f"root {lam} fails certification (|Δ|={residual:.3e})", n=n)
        return complex(lam)


def compute_spectrum(
    j: int,
    model: CharFnModel,
    n_max: int,
    *,
    tol: float = DEFAULT_TOL_ROOT,
    threads: int | None = None,
) -> SpectralSequence:
    """First ``n_max`` zeros of Δ_j, seeded from their asymptotics.

    Index searches run in a thread pool; results are then walked in index
    order and any index that failed or landed on an already accepted root is
    searched again with the nearby accepted roots deflated. A root found
    again after deflation is kept as a multiple eigenvalue.

    Raises:
        NonConvergence: with ``n`` set to the first index that could not be
            resolved.
    """
    _check_j(j)
    if n_max < MIN_N_EIGEN:
        raise DomainError(f"n_max must be at least {MIN_N_EIGEN}, got {n_max}")
    search = _RootSearch(CharFnEvaluator(model), j, tol)
    seeds = [asymptotic_seed(j, n, model.omega, model.delay) for n in range(n_max)]

    def attempt(n: int) -> tuple[complex | None, NonConvergence | None]:
        try:
            return search.find(n, seeds[n], []), None
        except NonConvergence as exc:
            return None, exc

    workers = threads or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        first_pass = list(pool.map(attempt, range(n_max)))

    accepted: list[complex] = []
    for n, (lam, exc) in enumerate(first_pass):
        clash = lam is not None and any(abs(_rho(lam) - _rho(prev)) < MERGE_TOL for prev in accepted)
        if exc is not None or clash:
            known = [prev for prev in accepted if abs(_rho(prev) - seeds[n]) < REPAIR_RADIUS]
            logger.warning("j=%d n=%d: %s; retrying with %d deflated root(s)",
                           j, n, "search failed" if exc else "duplicate root", len(known))
            try:
                lam = search.find(n, seeds[n], known)
            except NonConvergence as err:
                raise err.with_index(n) from err
        accepted.append(lam)

    lams = np.array(accepted, dtype=complex)
    order = np.lexsort((lams.imag, lams.real))
    logger.info("spectrum j=%d: %d eigenvalues, lambda_max=%.6g", j, n_max, lams[order[-1]].real)
    return SpectralSequence(j, lams[order], model.delay)


def forward_spectra(
    pot: PotentialPair,
    n_max: int,
    *,
    tol: float = DEFAULT_TOL_ROOT,
    threads: int | None = None,
) -> tuple[CharFnModel, SpectralSequence, SpectralSequence]:
    """Model and both spectra of a potential."""
    model = build_w_functions(pot)
    return (
        model,
        compute_spectrum(0, model, n_max, tol=tol, threads=threads),
        compute_spectrum(1, model, n_max, tol=tol, threads=threads),
    )
