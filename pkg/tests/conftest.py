"""Shared fixtures: grids, built-in potentials and cached forward spectra."""

from __future__ import annotations

import math

import numpy as np
import pytest

from specdelay.builtins import builtin_potential, random_potential
from specdelay.core import GridSpec
from specdelay.forward import forward_spectra

DELAYS = (0.5 * math.pi, 0.6 * math.pi, 0.75 * math.pi)


@pytest.fixture
def grid64() -> GridSpec:
    return GridSpec(64)


@pytest.fixture
def grid512() -> GridSpec:
    return GridSpec(512)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def forward_run():
    """forward_run(name, n_eigen, m, quadrature) -> (pot, model, spectrum0, spectrum1), cached per session."""
    cache: dict[tuple, tuple] = {}

    def run(name: str, n_eigen: int = 128, m: int = 512, quadrature: str = "trapezoid"):
        key = (name, n_eigen, m, quadrature)
        if key not in cache:
            pot = builtin_potential(name, GridSpec(m, quadrature))
            cache[key] = (pot, *forward_spectra(pot, n_eigen))
        return cache[key]

    return run


@pytest.fixture(params=list(enumerate(DELAYS)), ids=["a=pi/2", "a=0.6pi", "a=0.75pi"])
def random_pot(request):
    """Seeded random potential on a 256-interval trapezoid grid, one per delay."""
    seed, a = request.param
    return random_potential(seed, GridSpec(256), a)
