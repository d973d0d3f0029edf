from __future__ import annotations

import math

import numpy as np
import pytest

from harnack_lab.bounds import default_K
from harnack_lab.errors import DomainError, ParameterError
from harnack_lab.pde.exact import (
    Barenblatt,
    HeatKernel,
    PBarenblatt,
    SeparableProfile,
    barenblatt_eval,
    heat_kernel_eval,
    log_moser_ratio,
    moser_family,
    moser_ratio,
)


def fd_derivatives(fn, x, t, h=1e-4):
    """Central-difference gradient, Laplacian and time derivative of a scalar field."""
    d = x.shape[-1]
    grad = np.zeros(x.shape)
    lap = np.zeros(x.shape[:-1])
    base = fn(x, t)
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        fp, fm = fn(x + e, t), fn(x - e, t)
        grad[..., k] = (fp - fm) / (2 * h)
        lap += (fp - 2 * base + fm) / (h * h)
    ut = (fn(x, t + h) - fn(x, t - h)) / (2 * h)
    return grad, lap, ut


# ---------------------------------------------------------------- heat kernel


def test_heat_kernel_peak():
    out = heat_kernel_eval(3, [1.0, -2.0, 0.5], np.array([-1.0, 2.0, -0.5]), 2.0)
    assert out["u"] == pytest.approx((8 * math.pi) ** -1.5, rel=1e-15)
    np.testing.assert_array_equal(out["grad"], 0.0)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_heat_kernel_li_yau_identity(d):
    rng = np.random.default_rng(d)
    hk = HeatKernel(d, rng.normal(size=d))
    x = rng.normal(size=(200, d)) * 2
    t = rng.uniform(0.1, 10, 200)
    u, g, ut = hk.u(x, t), hk.grad(x, t), hk.ut(x, t)
    combo = np.sum(g * g, axis=-1) / u**2 - ut / u
    np.testing.assert_allclose(combo, d / (2 * t), rtol=1e-12)


@pytest.mark.parametrize("d", [1, 2])
def test_heat_kernel_derivatives_against_finite_differences(d):
    rng = np.random.default_rng(10 + d)
    hk = HeatKernel(d, rng.normal(size=d), mass=2.5)
    x = rng.normal(size=(100, d))
    t = rng.uniform(0.5, 3.0, 100)
    grad, lap, ut = fd_derivatives(hk.u, x, t)
    np.testing.assert_allclose(hk.grad(x, t), grad, atol=1e-7)
    np.testing.assert_allclose(hk.lap(x, t), lap, atol=1e-5)
    np.testing.assert_allclose(hk.ut(x, t), ut, atol=1e-7)
    assert np.max(np.abs(hk.residual(x, t))) <= 1e-8


def test_heat_kernel_rejects_nonpositive_time():
    with pytest.raises(DomainError):
        HeatKernel(1).u(np.array([0.0]), 0.0)


# ---------------------------------------------------------------- Moser family


def test_moser_family_is_scaled_heat_kernel():
    xi = 0.7
    x = np.linspace(-3, 3, 13)
    t = 1.7
    direct = t**-0.5 * np.exp(-((x + xi) ** 2) / (4 * t))
    np.testing.assert_allclose(moser_family(xi).u(x, t), direct, rtol=1e-14)
    np.testing.assert_allclose(moser_family(xi).u(x, t), math.sqrt(4 * math.pi) * HeatKernel(1, [xi]).u(x, t), rtol=1e-14)


def _ratio_oracle(xi, x0):
    fam = moser_family(xi)
    return float(fam.log_u(np.array([0.0]), 1.0) - fam.log_u(np.array([x0]), 1.0))


@pytest.mark.parametrize("xi,x0", [(0.0, 1.0), (-0.5, 1.0), (3.0, 2.0), (-60.0, 1.0), (-7.5, 0.3)])
def test_moser_ratio_matches_direct_evaluation(xi, x0):
    assert log_moser_ratio(xi, x0) == pytest.approx(_ratio_oracle(xi, x0), rel=1e-13, abs=1e-13)


def test_moser_ratio_examples():
    assert moser_ratio(0.0, 1.0) == pytest.approx(math.exp(0.25), rel=1e-15)
    # xi = -x0/2 puts 0 and x0 symmetric about the peak
    assert moser_ratio(-1.5, 3.0) == pytest.approx(1.0, rel=1e-15)
    recip = 1.0 / moser_ratio(-60.0, 1.0)
    assert recip == pytest.approx(math.exp(29.75), rel=1e-12)
    assert recip > 1e6


def test_moser_ratio_requires_positive_x0():
    with pytest.raises(DomainError):
        moser_ratio(1.0, 0.0)


# ---------------------------------------------------------------- Barenblatt


@pytest.mark.parametrize("M,d", [(2.0, 1), (3.0, 2), (1.5, 3), (4.0, 1)])
def test_barenblatt_pressure_laplacian(M, d):
    b = Barenblatt(d, M, 0.8)
    rng = np.random.default_rng(int(M * 10 + d))
    t = rng.uniform(0.5, 5.0, 400)
    r = b.support_radius(t) * rng.uniform(0, 0.999, 400) ** (1 / d)
    dirs = rng.normal(size=(400, d))
    x = dirs / np.linalg.norm(dirs, axis=1, keepdims=True) * r[:, None]
    assert np.all(b.inside(x, t))
    np.testing.assert_allclose(b.pressure_lap(x, t) + b.k / t, 0.0, atol=1e-12)
    assert b.k == pytest.approx(b.alpha, rel=1e-15)


@pytest.mark.parametrize("M,d", [(2.0, 1), (3.0, 2)])
def test_barenblatt_derivatives_against_finite_differences(M, d):
    b = Barenblatt(d, M)
    rng = np.random.default_rng(3)
    t = rng.uniform(1.0, 3.0, 60)
    x = rng.uniform(-0.7, 0.7, (60, d)) * b.support_radius(t)[:, None] / math.sqrt(d)
    grad, _, ut = fd_derivatives(b.u, x, t, h=1e-5)
    _, lap_pow, _ = fd_derivatives(lambda y, s: b.u(y, s) ** M, x, t, h=1e-4)
    np.testing.assert_allclose(b.grad(x, t), grad, atol=1e-7)
    np.testing.assert_allclose(b.ut(x, t), ut, atol=1e-7)
    np.testing.assert_allclose(b.lap_power(x, t), lap_pow, atol=1e-5)
    _, lap_f, _ = fd_derivatives(b.pressure, x, t, h=1e-4)
    np.testing.assert_allclose(b.pressure_lap(x, t), lap_f, atol=1e-5)
    assert np.max(np.abs(b.residual(x, t))) <= 1e-8


def test_barenblatt_vanishes_outside_support():
    b = Barenblatt(1, 2.0)
    t = 2.0
    radius = math.sqrt(12) * 2 ** (1 / 3)
    assert float(b.support_radius(t)) == pytest.approx(radius, rel=1e-14)
    outside = np.array([[radius * 1.001], [-radius * 1.5], [10.0]])
    np.testing.assert_array_equal(b.u(outside, t), 0.0)
    np.testing.assert_array_equal(b.residual(outside, t), 0.0)
    assert float(b.u(np.array([0.0]), 1.0)) == 1.0


def test_barenblatt_eval_bundle():
    out = barenblatt_eval(2, 3.0, 1.0, np.zeros(2), 1.0)
    assert out["u"] == pytest.approx(1.0) and out["pressure_f"] == pytest.approx(1.5)
    assert out["lap_f"] == pytest.approx(-1 / 3)


def test_barenblatt_rejects_fast_diffusion():
    with pytest.raises(ParameterError):
        Barenblatt(1, 0.8)


def test_barenblatt_mass_conserved():
    from scipy import integrate

    b = Barenblatt(1, 2.0)
    masses = [integrate.quad(lambda y: float(b.u(np.array([y]), t)), -8, 8, points=[-b.support_radius(t), b.support_radius(t)])[0] for t in (1.0, 2.0, 4.0)]
    np.testing.assert_allclose(masses, masses[0], rtol=1e-9)


# ---------------------------------------------------------------- p-Barenblatt and separable


@pytest.mark.parametrize("p,d", [(3.0, 1), (3.0, 2), (2.5, 1)])
def test_p_barenblatt_solves_p_diffusion(p, d):
    pb = PBarenblatt(d, p)
    rng = np.random.default_rng(4)
    t = rng.uniform(1.0, 2.0, 20)
    # stay away from x = 0, where |grad u|^{p-2} is not smooth
    x = rng.uniform(0.1, 0.5, (20, d)) * rng.choice([-1.0, 1.0], (20, d))
    h = 1e-4

    def flux_div(fn, y, s):
        total = 0.0
        for k in range(d):
            e = np.zeros(d)
            e[k] = h
            def flux(z):
                g = fd_derivatives(fn, z, s, h=1e-5)[0]
                return np.linalg.norm(g, axis=-1) ** (p - 2) * g[..., k]
            total = total + (flux(y + e) - flux(y - e)) / (2 * h)
        return total

    ut = fd_derivatives(pb.u, x, t)[2]
    np.testing.assert_allclose(ut, flux_div(pb.u, x, t), atol=2e-5)
    np.testing.assert_allclose(flux_div(pb.pressure, x, t), pb.pressure_flux_div(x, t), atol=2e-5)
    np.testing.assert_allclose(pb.pressure_flux_div(x, t), -default_K(p, d) / t, rtol=1e-14)


def test_separable_profile_equality_cases():
    p = 1.5
    sp = SeparableProfile(1 / (2 - p), c=2.0)
    t = np.array([0.5, 1.0, 3.0])
    x = np.zeros((3, 1))
    np.testing.assert_allclose(-sp.u(x, t) / ((p - 2) * t) - sp.ut(x, t), 0.0, atol=1e-14)
    decay = SeparableProfile(-1.0, d=2)
    x2 = np.zeros((3, 2))
    np.testing.assert_allclose(-decay.ut(x2, t) / decay.u(x2, t), 2 / (2 * t))
