"""Tests for grids, potentials, kernels and the w-functions."""

from __future__ import annotations

import math

import numpy as np
import pytest

from specdelay.builtins import BUILTINS
from specdelay.core import (
    CharFnModel,
    DelayParameter,
    GridSpec,
    PotentialPair,
    build_w_functions,
    kernel_K,
    kernel_Kj,
    kernel_P,
    omega_of_x,
    relative_l2_error,
    split_potential,
    transform_C,
    transform_S,
)
from specdelay.errors import DelayOutOfRange, DomainError
from specdelay.forward import solve_ivp_method_of_steps


def _zero(x):
    return 0 * x


# ---------------------------------------------------------------------------
# Grid and delay
# ---------------------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(DomainError):
        GridSpec(8)
    with pytest.raises(DomainError):
        GridSpec(64, "gauss")
    assert GridSpec(64).h == pytest.approx(math.pi / 64)
    assert GridSpec(64, "simpson").interp_degree == 3


def test_junction_index_snaps_to_nearest_node():
    grid = GridSpec(512)
    assert grid.junction_index(0.5 * math.pi) == 256
    assert grid.junction_index(0.6 * math.pi) == 307
    assert grid.junction_index(math.pi - 1e-9) == 511


def test_node_index_rejects_off_grid_points():
    grid = GridSpec(64)
    assert grid.node_index(grid.nodes[10]) == 10
    with pytest.raises(DomainError):
        grid.node_index(0.5 * grid.h)


@pytest.mark.parametrize("a", [1.0, math.pi, 4.0, float("nan")])
def test_delay_out_of_range(a):
    with pytest.raises(DelayOutOfRange):
        DelayParameter(a)


def test_delay_clamps_rounding_below_half_pi():
    assert DelayParameter(0.5 * math.pi - 1e-13).a == 0.5 * math.pi
    assert DelayParameter(0.6 * math.pi).snap_distance(GridSpec(512)) < 0.5 * math.pi / 512


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

def test_support_is_enforced(grid64):
    q = np.ones(grid64.m + 1)
    with pytest.raises(DomainError):
        PotentialPair(0.5 * math.pi, grid64, q, np.zeros(grid64.m + 1))
    with pytest.raises(DomainError):
        PotentialPair(0.5 * math.pi, grid64, np.zeros(grid64.m + 1), q)


def test_non_finite_values_rejected(grid64):
    q = np.zeros(grid64.m + 1)
    q[3] = np.nan
    with pytest.raises(DomainError):
        PotentialPair(0.5 * math.pi, grid64, q, np.zeros(grid64.m + 1))


def test_junction_holds_one_sided_values(grid64):
    pot = BUILTINS["step-qminus"].build(grid64)
    k = pot.junction
    assert pot.qminus[k] == 1 and pot.qplus[k] == 0
    assert pot.combined()[k] == 0.5


def test_split_potential_round_trip(grid64, rng):
    q = rng.standard_normal(grid64.m + 1) + 1j * rng.standard_normal(grid64.m + 1)
    pot = split_potential(q, 0.6 * math.pi, grid64)
    np.testing.assert_array_equal(pot.combined(), q)


def test_relative_l2_error(grid64):
    ref = PotentialPair.from_functions(_zero, lambda x: 1 + 0 * x, 0.5 * math.pi, grid64)
    cand = PotentialPair.from_functions(_zero, lambda x: 1.1 + 0 * x, 0.5 * math.pi, grid64)
    assert relative_l2_error(cand, ref) == pytest.approx(0.1)
    assert relative_l2_error(ref, ref) == 0
    with pytest.raises(DomainError):
        relative_l2_error(cand, PotentialPair.zero(0.75 * math.pi, grid64))


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def test_kernel_K_on_the_delay_line_is_omega(random_pot):
    a = random_pot.delay
    x = np.linspace(a, math.pi, 17)
    np.testing.assert_allclose(kernel_K(x, np.full_like(x, a), random_pot), omega_of_x(x, random_pot), atol=1e-14)


def test_kernel_P_vanishes_on_the_diagonal(random_pot):
    x = np.linspace(random_pot.delay, math.pi, 9)
    np.testing.assert_allclose(kernel_P(x, x, random_pot), 0, atol=1e-14)


def test_kernels_reject_points_off_the_triangle(random_pot):
    a = random_pot.delay
    with pytest.raises(DomainError):
        kernel_P(2.8, a - 0.1, random_pot)
    with pytest.raises(DomainError):
        kernel_K(2.0, 2.5, random_pot)
    with pytest.raises(DomainError):
        kernel_Kj(2, 3.0, 2.5, random_pot)
    with pytest.raises(DomainError):
        omega_of_x(a - 0.2, random_pot)


def test_constant_qplus_kernels():
    grid = GridSpec(256)
    pot = BUILTINS["step-qplus"].build(grid)
    a = pot.delay
    assert omega_of_x(math.pi, pot) == pytest.approx(math.pi / 4)
    # K0 = (q⁺ - q⁺)/4, K1 = (q⁺ + q⁺)/4
    assert kernel_Kj(0, 3.0, 2.0, pot) == pytest.approx(0.0, abs=1e-14)
    assert kernel_Kj(1, 3.0, 2.0, pot) == pytest.approx(0.5)
    # P(x,t) = (x - t)/2 for q⁺ ≡ 1
    assert kernel_P(3.0, 2.0, pot) == pytest.approx(0.5)
    assert kernel_K(3.0, a, pot) == pytest.approx(0.5 * (3.0 - a))


@pytest.mark.parametrize("lam", [-6.0, 0.7, 4.0 + 1.5j, 25.0])
def test_transformation_operators_match_ivp(lam):
    grid = GridSpec(1024, "simpson")
    pot = PotentialPair.from_functions(_zero, lambda x: np.cos(x) + 0.5j * x, 0.6 * math.pi, grid)
    scale = (1 + abs(lam)) * math.exp(math.pi * abs(np.sqrt(complex(lam)).imag))
    s_oracle = solve_ivp_method_of_steps(pot, lam, y0=0.0, dy0=1.0).y_end
    c_oracle = solve_ivp_method_of_steps(pot, lam).y_end
    assert abs(transform_S(math.pi, lam, pot) - s_oracle) <= 1e-6 * scale
    assert abs(transform_C(math.pi, lam, pot) - c_oracle) <= 1e-6 * scale


def test_transformation_operators_are_free_before_the_delay(grid64):
    pot = BUILTINS["smooth"].build(grid64)
    x = grid64.nodes[20]
    assert transform_S(x, 4.0, pot) == pytest.approx(math.sin(2 * x) / 2)
    assert transform_C(x, 4.0, pot) == pytest.approx(math.cos(2 * x))


# ---------------------------------------------------------------------------
# w-functions
# ---------------------------------------------------------------------------

def test_zero_potential_gives_zero_model(grid64):
    model = build_w_functions(PotentialPair.zero(0.5 * math.pi, grid64))
    assert model.omega == 0
    assert not np.any(model.w0) and not np.any(model.w1)


def test_step_qplus_w_functions():
    grid = GridSpec(256)
    model = build_w_functions(BUILTINS["step-qplus"].build(grid))
    J = model.split
    assert model.omega == pytest.approx(math.pi / 4)
    np.testing.assert_allclose(model.w0, 0, atol=1e-14)
    np.testing.assert_allclose(model.w1[: J + 1], 0.5, atol=1e-14)
    np.testing.assert_allclose(model.w1[J + 1:], 0, atol=1e-14)


def test_step_qminus_w_functions():
    grid = GridSpec(256)
    model = build_w_functions(BUILTINS["step-qminus"].build(grid))
    J = model.split
    assert model.omega == 0
    for j in (0, 1):
        inner, outer = model.pieces(j)
        np.testing.assert_allclose(inner, 0, atol=1e-14)
        np.testing.assert_allclose(outer, 1, atol=1e-14)
    assert model.w0[J] == 0 and model.edge == (1, 1)


def test_w_functions_are_linear_in_qminus_without_qplus(grid64):
    a = 0.6 * math.pi
    g = np.cos

    def f(x):
        return np.sin(3 * x) + 0.2j

    def model(qminus):
        return build_w_functions(PotentialPair.from_functions(qminus, _zero, a, grid64))

    mf, mg, mix = model(f), model(g), model(lambda x: f(x) - 2.0 * g(x))
    assert mix.omega == 0
    np.testing.assert_allclose(mix.w0, mf.w0 - 2.0 * mg.w0, atol=1e-13)
    np.testing.assert_allclose(mix.w1, mf.w1 - 2.0 * mg.w1, atol=1e-13)
    np.testing.assert_allclose(mix.edge, np.subtract(mf.edge, np.multiply(2.0, mg.edge)), atol=1e-13)


def test_w_functions_agree_past_the_split(random_pot):
    model = build_w_functions(random_pot)
    assert model.overlap_error() == 0
    J = model.split
    np.testing.assert_allclose(model.w0[J + 1:], random_pot.qminus[random_pot.junction - 1:: -1])


def test_model_zero_and_shape_check(grid64):
    model = CharFnModel.zero(0.75 * math.pi, grid64)
    assert model.delay == pytest.approx(48 * grid64.h)
    with pytest.raises(DomainError):
        CharFnModel(0, np.zeros(3), np.zeros(grid64.m + 1), 0.75 * math.pi, grid64)
