"""Tests for the characterization diagnostics."""

from __future__ import annotations

import json
import math
import warnings

import numpy as np
import pytest

from specdelay.builtins import BUILTINS
from specdelay.characterization import (
    build_report,
    check_A4,
    check_A4_direct,
    check_asymptotics,
    check_overdetermination,
    estimate_exponential_type,
    model_exponential_type,
    theta_from_model,
    theta_functions,
)
from specdelay.core import GridSpec, build_w_functions
from specdelay.errors import DegenerateTheta, DomainError
from specdelay.forward import CharFnEvaluator, SpectralSequence
from specdelay.inverse import estimate_omega_sample
from specdelay.numerics import l2_tail_diagnostic

HALF_PI = 0.5 * math.pi


def _trivial(n: int = 64) -> tuple[SpectralSequence, SpectralSequence]:
    return SpectralSequence.unperturbed(0, n), SpectralSequence.unperturbed(1, n)


# ---------------------------------------------------------------------------
# Asymptotics
# ---------------------------------------------------------------------------

def test_asymptotics_of_trivial_spectrum():
    _, s1 = _trivial()
    omega_fit, kappa = check_asymptotics(s1, 0.6 * math.pi)
    assert omega_fit == 0
    assert kappa.shape == (64,) and not np.any(kappa)


def test_asymptotics_recovers_synthetic_omega():
    a, omega = 0.6 * math.pi, 0.3 + 0.1j
    n = np.arange(1, 64)
    rho = n + omega * np.cos(n * a) / (math.pi * n)
    s1 = SpectralSequence(1, np.concatenate(([0.0], rho * rho)))
    omega_fit, kappa = check_asymptotics(s1, a)
    assert omega_fit == pytest.approx(omega, abs=1e-10)
    np.testing.assert_allclose(kappa, 0, atol=1e-9)


def test_asymptotics_on_step_qplus(forward_run):
    pot, _, _, s1 = forward_run("step-qplus", 128)
    omega_fit, _ = check_asymptotics(s1, pot.delay)
    assert omega_fit == pytest.approx(math.pi / 4, abs=2e-2)


@pytest.mark.parametrize("name", ["step-qplus", "smooth"])
def test_kappa_tail_stabilizes_on_forward_spectra(forward_run, name):
    pot, _, _, s1 = forward_run(name, 128)
    _, kappa = check_asymptotics(s1, pot.delay)
    _, stabilized = l2_tail_diagnostic(kappa[1:])
    assert stabilized


def test_asymptotics_needs_enough_eigenvalues():
    with pytest.raises(DomainError):
        check_asymptotics(SpectralSequence.unperturbed(1, 31), HALF_PI)


# ---------------------------------------------------------------------------
# Δ₁(0) = 2ω
# ---------------------------------------------------------------------------

def test_a4_residual_of_trivial_spectrum():
    _, s1 = _trivial()
    assert check_A4(s1, 0.0) == 0
    with pytest.raises(DomainError):
        check_A4(SpectralSequence.unperturbed(0, 8), 0.0)


def test_a4_fails_with_qminus(forward_run):
    # Δ₁(0) = ∫ q⁻ = π/2 while ω = 0
    _, _, _, s1 = forward_run("step-qminus", 128)
    assert check_A4(s1, 0.0) == pytest.approx(0.5, abs=0.05)


def test_a4_direct_and_regularized_agree(forward_run):
    _, model, _, s1 = forward_run("smooth", 64)
    assert check_A4_direct(s1, model.omega) == pytest.approx(check_A4(s1, model.omega), rel=1e-10, abs=1e-12)


@pytest.mark.slow
def test_a4_holds_without_qminus(forward_run):
    _, _, _, s1 = forward_run("step-qplus", 256, 1024)
    assert abs(check_A4(s1, math.pi / 4)) <= 1e-3


# ---------------------------------------------------------------------------
# θ functions
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("rho", [3.3, 2.0 - 1.0j, 0.7 + 0.2j])
def test_theta_identity(rho):
    model = build_w_functions(BUILTINS["smooth"].build(GridSpec(256)))
    ev = CharFnEvaluator(model)
    t0, t1 = theta_functions(rho, lambda lam: ev(0, lam), lambda lam: ev(1, lam), model.omega, model.delay)
    assert t0 == pytest.approx(theta_from_model(model, 0, rho), abs=1e-9)
    assert t1 == pytest.approx(theta_from_model(model, 1, rho), abs=1e-9)


# ---------------------------------------------------------------------------
# Decay along the imaginary axis
# ---------------------------------------------------------------------------

def test_overdetermination_of_trivial_spectra():
    s0, s1 = _trivial()
    decay = check_overdetermination(s0, s1, HALF_PI, omega=0.0)
    assert decay.shape == (8,)
    np.testing.assert_allclose(decay, 0, atol=1e-12)


def test_overdetermination_common_potential_decays(forward_run):
    _, _, s0, s1 = forward_run("step-qplus", 128)
    r = np.array([0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
    decay = check_overdetermination(s0, s1, HALF_PI, r)
    # θ₀ = 0 and θ₁(-ir) = sinh(rπ/2)/(2r)
    np.testing.assert_allclose(decay, (1 - np.exp(-math.pi * r)) / (4 * r), rtol=0.05)
    assert np.all(np.diff(decay) < 0)


def test_overdetermination_mismatched_spectra_grow(forward_run):
    _, _, s0, _ = forward_run("step-qplus", 128)
    _, _, _, s1 = forward_run("step-qminus", 128)
    r = np.array([1.0, 1.5, 2.0, 2.5, 3.0])
    decay = check_overdetermination(s0, s1, HALF_PI, r, omega=0.0)
    half = r * HALF_PI
    expected = np.abs(math.pi / 4 * np.sinh(half) - (np.sinh(2 * half) - np.sinh(half)) / r) * np.exp(-half)
    np.testing.assert_allclose(decay, expected, rtol=1e-2)
    assert np.all(np.diff(decay) > 0)


def test_overdetermination_argument_order():
    s0, s1 = _trivial()
    with pytest.raises(DomainError):
        check_overdetermination(s1, s0, HALF_PI)


# ---------------------------------------------------------------------------
# Exponential type
# ---------------------------------------------------------------------------

def test_exponential_type_degenerate_theta_reports_zero():
    s0, _ = _trivial()
    with pytest.warns(DegenerateTheta):
        assert estimate_exponential_type(s0, 0, 0.0, HALF_PI) == 0.0


def test_exponential_type_exceeds_bound_with_qminus(forward_run):
    _, _, _, s1 = forward_run("step-qminus", 128)
    assert estimate_exponential_type(s1, 1, 0.0, HALF_PI) > math.pi - HALF_PI + 0.1


def test_exponential_type_of_qplus_spectra_within_bound(forward_run):
    _, _, s0, s1 = forward_run("step-qplus", 128)
    omega = estimate_omega_sample(s1, HALF_PI)
    with warnings.catch_warnings():
        # w0 is zero here, so theta_0 may be reported as degenerate
        warnings.simplefilter("ignore", DegenerateTheta)
        type0 = estimate_exponential_type(s0, 0, omega, HALF_PI)
    assert type0 <= HALF_PI + 0.1
    assert estimate_exponential_type(s1, 1, omega, HALF_PI) <= HALF_PI + 0.1


def test_model_exponential_type_within_bound(forward_run):
    _, model, _, _ = forward_run("step-qplus", 128)
    assert model_exponential_type(model, 1) <= HALF_PI + 0.1


def test_exponential_type_checks_boundary_index():
    s0, _ = _trivial()
    with pytest.raises(DomainError):
        estimate_exponential_type(s0, 1, 0.0, HALF_PI)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

def test_report_on_trivial_spectra_passes():
    s0, s1 = _trivial()
    with pytest.warns(DegenerateTheta):
        report = build_report(s1, HALF_PI, spectrum0=s0)
    assert report.flags == {"asymptotics": "pass", "A4": "pass", "char": "pass", "exponential_type": "pass"}
    assert len(report.summary_lines()) == 4


def test_report_without_spectrum0_skips_char():
    _, s1 = _trivial()
    with pytest.warns(DegenerateTheta):
        report = build_report(s1, HALF_PI)
    data = json.loads(report.to_json())
    assert data["flags"]["char"] == "skipped"
    assert data["char_decay"] is None
    assert data["exp_type_estimates"][0] is None
    assert data["delay"] == pytest.approx(HALF_PI)
    assert len(data["kappa_residuals"]) == 64


def test_report_on_qplus_spectra_passes_type_check(forward_run):
    _, _, s0, s1 = forward_run("step-qplus", 128)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateTheta)
        report = build_report(s1, HALF_PI, spectrum0=s0)
    assert report.flags["exponential_type"] == "pass"
    assert all(t <= HALF_PI + 0.1 for t in report.exp_type_estimates)


def test_report_flags_mismatched_spectra(forward_run):
    _, _, s0, _ = forward_run("step-qplus", 128)
    _, _, _, s1 = forward_run("step-qminus", 128)
    report = build_report(s1, HALF_PI, spectrum0=s0)
    assert report.flags["char"] == "fail"
    assert report.flags["exponential_type"] == "fail"
