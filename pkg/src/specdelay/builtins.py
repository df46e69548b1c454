"""Named test potentials.

    zero         q ≡ 0, a = π/2
    step-qplus   q⁻ = 0, q⁺ ≡ 1, a = π/2
    step-qminus  q⁻ ≡ 1, q⁺ = 0, a = π/2
    smooth       q⁻ = sin 2x, q⁺ = cos x, a = 0.6π
    random       seeded smooth complex potential with ‖q‖ ≤ 2
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from specdelay.core import DelayParameter, GridSpec, PotentialPair
from specdelay.errors import ConfigError

RANDOM_DELAYS = (0.5 * math.pi, 0.6 * math.pi, 0.75 * math.pi)
RANDOM_MODES = 4
RANDOM_NORM = 2.0


@dataclass(frozen=True)
class BuiltinPotential:
    name: str
    a: float
    qminus: Callable[[np.ndarray], np.ndarray]
    qplus: Callable[[np.ndarray], np.ndarray]

    def build(self, grid: GridSpec, a: float | None = None) -> PotentialPair:
        return PotentialPair.from_functions(self.qminus, self.qplus, self.a if a is None else a, grid)


def _zero(x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x, dtype=complex)


def _one(x: np.ndarray) -> np.ndarray:
    return np.ones_like(x, dtype=complex)


BUILTINS: dict[str, BuiltinPotential] = {
    "zero": BuiltinPotential("zero", 0.5 * math.pi, _zero, _zero),
    "step-qplus": BuiltinPotential("step-qplus", 0.5 * math.pi, _zero, _one),
    "step-qminus": BuiltinPotential("step-qminus", 0.5 * math.pi, _one, _zero),
    "smooth": BuiltinPotential("smooth", 0.6 * math.pi, lambda x: np.sin(2 * x), np.cos),
}

BUILTIN_NAMES = (*BUILTINS, "random")


def random_potential(seed: int, grid: GridSpec, a: float | None = None) -> PotentialPair:
    """Low-order complex cosine sums on each side, rescaled so ‖q‖ equals 2.

    The delay is drawn from π/2, 0.6π and 0.75π unless given.
    """
    rng = np.random.default_rng(seed)
    if a is None:
        a = float(rng.choice(RANDOM_DELAYS))
    coef = rng.standard_normal((2, RANDOM_MODES)) + 1j * rng.standard_normal((2, RANDOM_MODES))
    coef /= 1.0 + np.arange(RANDOM_MODES)

    def series(c: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        return lambda x: np.cos(np.outer(x, np.arange(RANDOM_MODES))) @ c

    pot = PotentialPair.from_functions(series(coef[0]), series(coef[1]), a, grid)
    rule = grid.rule
    k = pot.junction
    norm = math.sqrt(
        rule.apply(np.abs(pot.qminus[: k + 1]) ** 2).real + rule.apply(np.abs(pot.qplus[k:]) ** 2).real
    )
    scale = RANDOM_NORM / norm if norm > 0 else 0.0
    return PotentialPair(pot.a, grid, pot.qminus * scale, pot.qplus * scale)


def builtin_potential(name: str, grid: GridSpec, *, seed: int = 0, a: float | None = None) -> PotentialPair:
    """Build a named potential; ``a`` overrides the built-in delay."""
    if name == "random":
        return random_potential(seed, grid, a)
    try:
        spec = BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown built-in potential {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    if a is not None:
        DelayParameter.coerce(a)
    return spec.build(grid, a)
