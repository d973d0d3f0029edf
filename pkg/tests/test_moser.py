from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harnack_lab.errors import ParameterError, RegionError
from harnack_lab.moser import (
    CylinderKind,
    HolderParams,
    ParabolicCylinder,
    SpaceTimeBox,
    empirical_holder_quotient,
    estimate_harnack_constant,
    holder_bound,
    iteration_scale,
    nested_cylinders,
    oscillation,
    oscillation_inequality_check,
    parabolic_distance,
    sample_cylinders,
    sup_norm,
)
from harnack_lab.pde import GridSolution, HeatKernel, SolverConfig, solve_heat


def field(fn, L=2.0, dx=0.05, times=np.linspace(1.0, 3.0, 81)):
    axis = -L + dx * np.arange(int(round(2 * L / dx)) + 1)
    vals = np.array([fn(axis, t) for t in times])
    return GridSolution(axis, 1, times, vals, {"name": "test"})


@pytest.fixture(scope="module")
def heat_grid():
    return solve_heat(SolverConfig(L=6, dx=0.05, t_end=3.0, max_snapshots=1000), exact=HeatKernel(1))


# ---------------------------------------------------------------- cylinders


def test_cylinder_extents():
    c = ParabolicCylinder((0.0,), 2.0, 0.5)
    assert c.radius == 1.0 and c.time_interval == (1.75, 2.25)
    plus, minus = c.with_kind("plus"), c.with_kind(CylinderKind.MINUS)
    assert plus.radius == 0.25 and plus.time_interval == (2.0 + 0.1875, 2.25)
    assert minus.time_interval == (2.0 - 0.1875, 2.0 - 0.0625)


def test_membership_is_exact_with_fractions():
    c = ParabolicCylinder((Fraction(0),), Fraction(1), Fraction(1, 3), "plus")
    lo, hi = c.time_interval
    assert lo == Fraction(1) + Fraction(1, 12) and hi == Fraction(10, 9)
    assert c.contains((Fraction(1, 6),), hi)
    assert not c.contains((Fraction(1, 6) + Fraction(1, 10**30),), hi)
    assert not c.contains((Fraction(0),), lo - Fraction(1, 10**30))


@settings(max_examples=300, deadline=None)
@given(
    st.fractions(-5, 5, max_denominator=1000),
    st.fractions(0, 10, max_denominator=1000),
    st.fractions(Fraction(1, 100), 3, max_denominator=1000),
    st.fractions(-1, 1, max_denominator=1000),
    st.fractions(-1, 1, max_denominator=1000),
)
def test_plus_and_minus_inside_full(x0, t0, R, sx, st_):
    full = ParabolicCylinder((x0,), t0, R)
    for kind in ("plus", "minus"):
        sub = full.with_kind(kind)
        lo, hi = sub.time_interval
        x = x0 + sx * sub.radius
        t = lo + (st_ + 1) / 2 * (hi - lo)
        assert sub.contains((x,), t)
        assert full.contains((x,), t)
    plus_lo, _ = full.with_kind("plus").time_interval
    _, minus_hi = full.with_kind("minus").time_interval
    assert minus_hi < plus_lo


# ---------------------------------------------------------------- oscillation


def test_oscillation_constant_field_is_zero():
    sol = field(lambda x, t: np.full(x.shape, 2.0))
    assert oscillation(sol, ParabolicCylinder((0.0,), 2.0, 0.4)) == 0.0


@pytest.mark.parametrize("R", [0.1, 0.25, 0.4])
def test_oscillation_of_linear_field(R):
    sol = field(lambda x, t: x)
    assert abs(oscillation(sol, ParabolicCylinder((0.1,), 2.0, R)) - 4 * R) <= sol.dx


def test_oscillation_subset_monotone(heat_grid):
    rng = np.random.default_rng(0)
    for _ in range(30):
        R = rng.uniform(0.2, 0.6)
        cyl = ParabolicCylinder((rng.uniform(-3, 3),), rng.uniform(1 + R * R, 3 - R * R), R)
        full = oscillation(heat_grid, cyl)
        assert oscillation(heat_grid, cyl.with_kind("minus")) <= full
        assert oscillation(heat_grid, cyl.with_kind("plus")) <= full


def test_empty_region_raises():
    sol = field(lambda x, t: x, times=np.array([1.0, 3.0]))
    with pytest.raises(RegionError):
        oscillation(sol, ParabolicCylinder((0.0,), 2.0, 0.1))


def test_oscillation_inequality_constant_field():
    sol = field(lambda x, t: np.full(x.shape, 1.0))
    out = oscillation_inequality_check(sol, 0.0, 2.0, 0.5, 4 / 3)
    assert out["omega"] == out["omega_plus"] == 0.0 and out["holds"]
    assert out["zeta"] == pytest.approx(0.25, rel=1e-15)


def test_oscillation_inequality_outside_grid():
    sol = field(lambda x, t: x)
    with pytest.raises(RegionError):
        oscillation_inequality_check(sol, 1.5, 2.0, 0.5, 2.0)
    with pytest.raises(RegionError):
        oscillation_inequality_check(sol, 0.0, 1.1, 0.5, 2.0)


def test_oscillation_inequality_with_estimated_constant(heat_grid):
    rng = np.random.default_rng(1)
    cyls = []
    for _ in range(40):
        R = rng.uniform(0.2, 0.6)
        cyls.append((rng.uniform(-5 + 2 * R, 5 - 2 * R), rng.uniform(1 + R * R, 3 - R * R), R))
    C = max(4 / 3, max(estimate_harnack_constant(heat_grid, x, t, R) for x, t, R in cyls))
    assert all(oscillation_inequality_check(heat_grid, x, t, R, C)["holds"] for x, t, R in cyls)


# ---------------------------------------------------------------- Harnack constant


def test_harnack_constant_of_constant_field():
    sol = field(lambda x, t: np.full(x.shape, 3.0))
    assert estimate_harnack_constant(sol, 0.0, 2.0, 0.5) == 1.0


def test_harnack_constant_heat_kernel_sampled():
    sol = GridSolution.from_exact(HeatKernel(1), 2.0, 0.02, np.linspace(1.0, 3.0, 201))
    c = estimate_harnack_constant(sol, 0.0, 2.0, 0.3)
    assert 1.0 <= c < math.inf


def test_harnack_constant_scale_invariant(heat_grid):
    scaled = heat_grid.with_field(7.5 * heat_grid.values)
    for x in (-1.0, 0.0, 2.0):
        assert estimate_harnack_constant(scaled, x, 2.0, 0.5) == pytest.approx(
            estimate_harnack_constant(heat_grid, x, 2.0, 0.5), rel=1e-14
        )


def test_harnack_constant_zero_infimum_is_infinite():
    sol = field(lambda x, t: np.maximum(x, 0.0))
    assert estimate_harnack_constant(sol, 0.0, 2.0, 0.5) == math.inf


# ---------------------------------------------------------------- nested cylinders


def test_nested_single():
    chain = nested_cylinders(0.0, 5.0, 1.0, 1)
    assert chain.radii == (Fraction(1),) and chain.certificates == ()


def test_nested_three():
    chain = nested_cylinders((0.0,), 5.0, 1.0, 3)
    assert chain.radii == (Fraction(1, 16), Fraction(1, 4), Fraction(1))
    assert chain.taus[1] == 5 - 14 * Fraction(1, 256)
    assert len(chain.certificates) == 2 and all(c.ok for c in chain.certificates)


@settings(max_examples=300, deadline=None)
@given(
    st.floats(1e-6, 1e3, allow_nan=False),
    st.floats(-1e3, 1e3, allow_nan=False),
    st.integers(1, 12),
)
def test_nested_certificates_property(delta, tau0, k):
    chain = nested_cylinders(0.0, tau0, delta, k)
    assert len(chain.radii) == k and len(chain.certificates) == k - 1
    for j, cert in enumerate(chain.certificates):
        R, Rn = chain.radii[j], chain.radii[j + 1]
        assert chain.taus[j + 1] + Fraction(3, 4) * Rn**2 == chain.taus[j] - 2 * R**2
        assert chain.taus[j + 1] + Rn**2 == chain.taus[j] + 2 * R**2
        assert cert.ok


def test_nested_oscillation_chain(heat_grid):
    # omega_j <= omega_{j+1}^+ by inclusion of node sets
    chain = nested_cylinders((0.5,), Fraction(27, 10), Fraction(1, 2), 2)
    full = chain.cylinders()
    assert oscillation(heat_grid, full[0]) <= oscillation(heat_grid, full[1].with_kind("plus"))


def test_nested_guards():
    with pytest.raises(ParameterError):
        nested_cylinders(0.0, 1.0, 1.0, 0)
    with pytest.raises(ParameterError):
        nested_cylinders(0.0, 1.0, -1.0, 2)


# ---------------------------------------------------------------- Hölder


def test_holder_exponents():
    assert HolderParams(4 / 3).nu == pytest.approx(1.0, rel=1e-15)
    assert HolderParams(2.0).nu == pytest.approx(0.5, rel=1e-15)
    assert HolderParams(4 / 3).zeta == pytest.approx(0.25, rel=1e-15)


@settings(max_examples=1000, deadline=None)
@given(st.floats(1.0, 1e6, exclude_min=True, allow_nan=False))
def test_zeta_is_four_to_minus_nu(C):
    hp = HolderParams(C)
    assert 0 < hp.zeta < 1 and hp.nu > 0
    assert abs(4.0 ** (-hp.nu) - hp.zeta) <= 1e-15


def test_holder_bound_values():
    assert holder_bound(4 / 3, 1.0, 1.0) == pytest.approx(512.0, rel=1e-14)
    assert holder_bound(2.0, 4.0, 3.0) == pytest.approx(2 * 8.0 * 3.0, rel=1e-14)
    assert holder_bound(3.0, 0.5, 0.0) == 0.0
    assert iteration_scale(6.4) == pytest.approx(0.1)
    with pytest.raises(ParameterError):
        holder_bound(1.0, 1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1.01, 100), st.floats(1e-3, 10), st.floats(1e-3, 10))
def test_holder_bound_monotone(C, d1, d2):
    lo, hi = sorted((d1, d2))
    assert holder_bound(C, hi, 1.0) <= holder_bound(C, lo, 1.0) * (1 + 1e-14)
    assert holder_bound(C * 1.5, lo, 1.0) <= holder_bound(C, lo, 1.0) * (1 + 1e-14)


# ---------------------------------------------------------------- parabolic distance and quotient


def test_parabolic_distance_examples():
    box = SpaceTimeBox((0.0,), (4.0,), (1.0,), (3.0,), 1.0, 2.0, 3.0, 4.0)
    assert parabolic_distance(box) == 1.0
    touching = SpaceTimeBox((0.0,), (4.0,), (0.0,), (3.0,), 1.0, 2.0, 3.0, 4.0)
    assert parabolic_distance(touching) == 0.0
    time_limited = SpaceTimeBox((0.0, 0.0), (4.0, 4.0), (1.0, 1.0), (3.0, 3.0), 1.0, 1.25, 3.0, 4.0)
    assert parabolic_distance(time_limited) == 0.5


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.9), st.floats(0.01, 0.9))
def test_parabolic_distance_grows_when_shrinking(a, b):
    s1, s2 = sorted((a, b))
    outer = dict(outer_lo=(0.0,), outer_hi=(4.0,), T1=0.0, T4=4.0)
    big = SpaceTimeBox(inner_lo=(2 - 2 * (1 - s1),), inner_hi=(2 + 2 * (1 - s1),), T2=2 - 2 * (1 - s1), T3=2 + 2 * (1 - s1), **outer)
    small = SpaceTimeBox(inner_lo=(2 - 2 * (1 - s2),), inner_hi=(2 + 2 * (1 - s2),), T2=2 - 2 * (1 - s2), T3=2 + 2 * (1 - s2), **outer)
    assert parabolic_distance(small) >= parabolic_distance(big)


def test_box_guards():
    with pytest.raises(ParameterError):
        SpaceTimeBox((0.0,), (4.0,), (1.0,), (3.0,), 1.0, 3.0, 2.0, 4.0)
    with pytest.raises(ParameterError):
        SpaceTimeBox((0.0,), (4.0,), (-1.0,), (3.0,), 1.0, 2.0, 3.0, 4.0)


def test_quotient_constant_and_linear():
    box = SpaceTimeBox((-2.0,), (2.0,), (-1.0,), (1.0,), 1.0, 1.5, 2.5, 3.0)
    assert empirical_holder_quotient(field(lambda x, t: np.full(x.shape, 4.0)), box, 0.5) == 0.0
    static = field(lambda x, t: x, times=np.array([2.0]))
    static_box = SpaceTimeBox((-2.0,), (2.0,), (-1.0,), (1.0,), 1.0, 1.9, 2.1, 3.0)
    assert empirical_holder_quotient(static, static_box, 1.0, pair_count=500) == pytest.approx(1.0, rel=1e-12)


def test_quotient_deterministic_and_needs_nodes(heat_grid):
    box = SpaceTimeBox((-4.0,), (4.0,), (-2.0,), (2.0,), 1.2, 1.6, 2.4, 2.8)
    a = empirical_holder_quotient(heat_grid, box, 0.8, 2000, seed=5)
    assert a == empirical_holder_quotient(heat_grid, box, 0.8, 2000, seed=5)
    tiny = SpaceTimeBox((-4.0,), (4.0,), (0.01,), (0.02,), 1.2, 1.6, 2.4, 2.8)
    with pytest.raises(RegionError):
        empirical_holder_quotient(heat_grid, tiny, 0.8)


def test_holder_end_to_end(heat_grid):
    box = SpaceTimeBox((-4.0,), (4.0,), (-2.0,), (2.0,), 1.2, 1.6, 2.4, 2.8)
    rng = np.random.default_rng(3)
    ests = []
    for _ in range(20):
        R = rng.uniform(0.2, 0.5)
        ests.append(estimate_harnack_constant(heat_grid, rng.uniform(-3, 3), rng.uniform(1 + R * R, 3 - R * R), R))
    C = max(4 / 3, max(ests))
    q = empirical_holder_quotient(heat_grid, box, HolderParams(C).nu, 5000, seed=0)
    assert q <= holder_bound(C, parabolic_distance(box), sup_norm(heat_grid, box))


def test_sampled_cylinders_fit_the_grid(heat_grid):
    cyls = sample_cylinders(6.0, 0.05, 1.0, 3.0, 1, 200, (0.2, 0.9), seed=4)
    assert len(cyls) == 200
    for c, t0, R in cyls:
        assert 0.2 <= R <= 0.9
        estimate_harnack_constant(heat_grid, c, t0, R)  # raises RegionError if outside
    assert cyls == sample_cylinders(6.0, 0.05, 1.0, 3.0, 1, 200, (0.2, 0.9), seed=4)


@pytest.mark.parametrize("r_range", [(0.0, 0.5), (0.6, 0.5), (0.2, 1.5)])
def test_sampled_cylinders_guards(r_range):
    with pytest.raises(ParameterError):
        sample_cylinders(6.0, 0.05, 1.0, 3.0, 1, 10, r_range, seed=0)
