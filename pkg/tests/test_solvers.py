from __future__ import annotations

import json
import math

import numpy as np
import pytest

from harnack_lab.errors import ConfigError, DomainError, ParameterError
from harnack_lab.pde import (
    Barenblatt,
    GridSolution,
    HeatKernel,
    SolverConfig,
    solve_heat,
    solve_pdiff,
    solve_pme,
)


def observed_order(errors, ratio=2.0):
    e = np.asarray(errors)
    return np.log(e[:-1] / e[1:]) / math.log(ratio)


# ---------------------------------------------------------------- config


@pytest.mark.parametrize(
    "kwargs",
    [
        {"t_start": 0.0},
        {"t_end": 0.5},
        {"cfl": 1.0},
        {"cfl": 0.0},
        {"boundary": "periodic"},
        {"dx": 0.07},
        {"eps": -1.0},
        {"store_every": 0},
    ],
)
def test_invalid_config_rejected(kwargs):
    with pytest.raises(ConfigError):
        SolverConfig(**kwargs)


def test_explicit_dt_above_stability_limit_rejected():
    cfg = SolverConfig(L=2, dx=0.1, dt=0.006)
    with pytest.raises(ConfigError, match="stability"):
        solve_heat(cfg, exact=HeatKernel(1))


def test_exact_boundary_needs_exact_solution():
    with pytest.raises(ConfigError):
        solve_heat(SolverConfig(L=2, dx=0.1), initial=lambda x: np.ones(x.shape[:-1]))


def test_negative_initial_data_rejected():
    with pytest.raises(DomainError):
        solve_heat(SolverConfig(L=2, dx=0.1, boundary="fixed"), initial=lambda x: x[..., 0])


# ---------------------------------------------------------------- heat


def test_constant_data_neumann_stays_constant():
    cfg = SolverConfig(L=2, dx=0.1, boundary="neumann", d=2, t_end=1.5)
    sol = solve_heat(cfg, initial=lambda x: np.full(x.shape[:-1], 3.25))
    np.testing.assert_array_equal(sol.values, 3.25)


def test_heat_second_order_refinement():
    hk = HeatKernel(1)
    errs = [solve_heat(SolverConfig(L=6, dx=dx, t_end=2.0), exact=hk).metadata["l1_error_final"] for dx in (0.2, 0.1, 0.05)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios >= 3.5)


def test_heat_two_dimensional_error_small():
    hk = HeatKernel(2, [0.3, -0.2])
    sol = solve_heat(SolverConfig(L=4, dx=0.2, d=2, t_end=1.5), exact=hk)
    assert sol.metadata["l1_error_final"] < 1e-3


def test_heat_mass_nonincreasing_homogeneous():
    cfg = SolverConfig(L=3, dx=0.1, boundary="homogeneous", t_end=3.0)
    sol = solve_heat(cfg, initial=HeatKernel(1))
    mass = np.array(sol.metadata["mass_history"])
    assert sol.metadata["mass_increases"] == 0
    assert np.all(np.diff(mass) <= 1e-15 * mass[0])
    assert mass[-1] < mass[0]


def test_heat_rates_match_time_derivative():
    hk = HeatKernel(1)
    sol = solve_heat(SolverConfig(L=6, dx=0.05, t_end=1.5, store_every=1), exact=hk)
    k = len(sol.times) // 2
    mesh = sol.mesh()
    interior = slice(1, -1)
    np.testing.assert_allclose(sol.rates[k][interior], hk.ut(mesh, sol.times[k])[interior], atol=5e-4)
    assert np.isnan(sol.rates[k][0])


def test_comparison_principle():
    # a shared fixed step keeps both runs on the same time grid
    cfg = SolverConfig(L=3, dx=0.1, boundary="homogeneous", t_end=1.2, store_every=50, dt=1e-4)
    x = np.linspace(-3, 3, 61)
    base = np.cos(np.pi * x / 6) ** 2
    bump = base * (1 + 0.2 * np.exp(-((x - 0.5) ** 2)))
    for solver in (lambda i: solve_heat(cfg, initial=i), lambda i: solve_pme(2.0, cfg, initial=i),
                   lambda i: solve_pdiff(3.0, cfg, initial=i)):
        lo, hi = solver(base), solver(bump)
        assert np.all(lo.values <= hi.values + 1e-12)


# ---------------------------------------------------------------- reductions


@pytest.mark.parametrize("d", [1, 2])
def test_reductions_are_bitwise(d):
    hk = HeatKernel(d)
    cfg = SolverConfig(L=2.4, dx=0.2, d=d, t_end=1.3, store_every=1, eps=0.0)
    heat = solve_heat(cfg, exact=hk)
    assert np.array_equal(solve_pme(1.0, cfg, exact=hk).values, heat.values)
    assert np.array_equal(solve_pdiff(2.0, cfg, exact=hk).values, heat.values)
    assert np.array_equal(solve_pdiff(2.0, cfg, exact=hk).times, heat.times)


# ---------------------------------------------------------------- PME


def test_pme_barenblatt_refinement():
    b = Barenblatt(1, 2.0)
    errs = [
        solve_pme(2.0, SolverConfig(L=8, dx=dx, t_end=2.0, boundary="homogeneous"), exact=b).metadata["l1_error_final"]
        for dx in (0.1, 0.05, 0.025)
    ]
    assert np.all(observed_order(errs) >= 0.8)


def test_pme_zero_data_stays_zero():
    sol = solve_pme(2.0, SolverConfig(L=2, dx=0.1, boundary="homogeneous"), initial=lambda x: np.zeros(x.shape[:-1]))
    np.testing.assert_array_equal(sol.values, 0.0)


def test_pme_support_law():
    b = Barenblatt(1, 2.0)
    sol = solve_pme(2.0, SolverConfig(L=8, dx=0.025, t_end=3.0, boundary="homogeneous"), exact=b)
    for k in (len(sol.times) // 2, -1):
        t = sol.times[k]
        support = sol.axis[sol.values[k] > 1e-6 * sol.values[k].max()]
        radius = 0.5 * (support[-1] - support[0])
        assert radius == pytest.approx(float(b.support_radius(t)), rel=0.1)
    growth = float(b.support_radius(3.0) / b.support_radius(1.0))
    assert growth == pytest.approx(3 ** (1 / 3), rel=1e-12)


def test_pme_positivity_and_clamp_budget():
    b = Barenblatt(2, 3.0)
    sol = solve_pme(3.0, SolverConfig(L=3, dx=0.1, d=2, t_end=1.5, boundary="homogeneous"), exact=b)
    assert np.all(sol.values >= 0)
    assert sol.metadata["clamped_mass_max_fraction"] <= 1e-10
    assert sol.metadata["mass_increases"] == 0


def test_pme_fast_diffusion_runs_on_positive_data():
    sol = solve_pme(0.7, SolverConfig(L=3, dx=0.1, boundary="fixed", t_end=1.5), initial=lambda x: 1.0 + np.exp(-x[..., 0] ** 2))
    assert np.all(sol.values > 0)
    with pytest.raises(ParameterError):
        solve_pme(0.2, SolverConfig(L=3, dx=0.1, d=3, boundary="fixed"), initial=lambda x: np.ones(x.shape[:-1]))


# ---------------------------------------------------------------- p-diffusion


def test_pdiff_mass_conservation_p3():
    sol = solve_pdiff(3.0, SolverConfig(L=10, dx=0.1, t_end=2.0, boundary="fixed"), initial=HeatKernel(1))
    assert sol.mass(-1) == pytest.approx(sol.mass(0), rel=1e-6)
    neu = solve_pdiff(3.0, SolverConfig(L=4, dx=0.1, t_end=2.0, boundary="neumann"), initial=HeatKernel(1, [1.0]))
    assert neu.mass(-1) == pytest.approx(neu.mass(0), rel=1e-12)


def test_pdiff_linear_data_is_stationary():
    cfg = SolverConfig(L=2, dx=0.1, boundary="fixed", t_end=1.2, store_every=1)
    sol = solve_pdiff(3.0, cfg, initial=lambda x: 5.0 + 0.7 * x[..., 0])
    drift = np.max(np.abs(np.diff(sol.values, axis=0)))
    assert drift <= 1e-12


def test_pdiff_records_eps():
    sol = solve_pdiff(1.5, SolverConfig(L=4, dx=0.2, t_end=1.2, boundary="fixed", eps=1e-2), initial=HeatKernel(1))
    assert sol.equation == {"name": "pdiff", "p": 1.5, "eps": 1e-2}
    assert np.all(sol.values >= 0)


def test_pdiff_rejects_p_at_most_one():
    with pytest.raises(ParameterError):
        solve_pdiff(1.0, SolverConfig())


# ---------------------------------------------------------------- GridSolution


def test_grid_solution_export(tmp_path):
    sol = solve_heat(SolverConfig(L=1, dx=0.5, t_end=1.1, store_every=1000), exact=HeatKernel(1))
    csv_path, json_path = sol.write(tmp_path, "heat")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "x,t,u"
    assert len(lines) == 1 + sol.times.size * sol.axis.size
    meta = json.loads(json_path.read_text())
    assert meta["equation"] == {"name": "heat"}
    assert meta["grid"]["dx"] == 0.5
    assert meta["metadata"]["config"]["boundary"] == "exact"


def test_grid_solution_2d_header_and_immutability(tmp_path):
    sol = GridSolution.from_exact(HeatKernel(2), 1.0, 0.5, [1.0, 2.0], d=2)
    assert sol.csv_header() == ["x1", "x2", "t", "u"]
    with pytest.raises(ValueError):
        sol.values[0, 0, 0] = 1.0
    assert sol.rates is not None and sol.values.shape == (2, 5, 5)
    assert sol.l1_error(HeatKernel(2)) == 0.0


def test_csv_outputs_reproducible(tmp_path):
    cfg = SolverConfig(L=1, dx=0.25, t_end=1.2)
    a = solve_pme(2.0, cfg, exact=Barenblatt(1, 2.0)).write(tmp_path / "a")[0].read_bytes()
    b = solve_pme(2.0, cfg, exact=Barenblatt(1, 2.0)).write(tmp_path / "b")[0].read_bytes()
    assert a == b


def test_dt_cap_limits_steps():
    cfg = SolverConfig(L=4, dx=0.2, t_end=2.0, boundary="fixed", eps=0.0, dt_cap=1e-2)
    sol = solve_pdiff(3.0, cfg, initial=HeatKernel(1))
    assert sol.metadata["dt_max"] <= 1e-2 * (1 + 1e-12)
    free = solve_pdiff(3.0, SolverConfig(L=4, dx=0.2, t_end=2.0, boundary="fixed", eps=0.0), initial=HeatKernel(1))
    assert free.metadata["dt_max"] > 1e-2
    with pytest.raises(ConfigError):
        SolverConfig(dt_cap=0.0)
