"""Explicit finite-difference solvers for heat, porous-medium and p-diffusion.

All three equations are written in divergence form ``u_t = div F`` and share
one stepping loop.  Fluxes live on the faces between neighbouring nodes:

    heat     F = (u[i+1] - u[i]) / dx
    PME      F = (u[i+1]^M - u[i]^M) / dx
    p-diff   F = (|grad u|^2 + eps^2)^{(p-2)/2} (u[i+1] - u[i]) / dx

so ``M = 1`` and ``p = 2, eps = 0`` perform exactly the same floating-point
operations as the heat scheme.  Time stepping is forward Euler with a step
chosen from the largest effective diffusivity on the grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..bounds import PmeParams
from ..errors import ConfigError, DomainError, ParameterError
from .grid import GridSolution, trapezoid_weights, uniform_axis

log = logging.getLogger(__name__)

BOUNDARIES = ("exact", "homogeneous", "fixed", "neumann")


@dataclass
class SolverConfig:
    L: float = 6.0
    dx: float = 0.1
    t_start: float = 1.0
    t_end: float = 2.0
    cfl: float = 0.4
    d: int = 1
    boundary: str = "exact"
    eps: float = 1e-8
    store_every: int | None = None
    max_snapshots: int = 400
    dt: float | None = None
    dt_cap: float | None = None

    def __post_init__(self):
        if not self.t_start > 0:
            raise ConfigError(f"t_start={self.t_start}: must be > 0 (estimates are singular at t = 0)")
        if not self.t_end > self.t_start:
            raise ConfigError(f"t_end={self.t_end} must exceed t_start={self.t_start}")
        if not 0 < self.cfl < 1:
            raise ConfigError(f"cfl={self.cfl}: safety factor must lie in (0, 1)")
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError(f"d={self.d}: need an integer dimension >= 1")
        if self.boundary not in BOUNDARIES:
            raise ConfigError(f"boundary={self.boundary!r}: expected one of {BOUNDARIES}")
        if not self.eps >= 0:
            raise ConfigError("eps must be >= 0")
        if self.store_every is not None and self.store_every < 1:
            raise ConfigError("store_every must be >= 1")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.dt_cap is not None and not self.dt_cap > 0:
            raise ConfigError("dt_cap must be > 0")
        uniform_axis(self.L, self.dx)

    def axis(self) -> np.ndarray:
        return uniform_axis(self.L, self.dx)


def _stable_dt(cfl: float, dx: float, d: int, diffusivity: float) -> float:
    if diffusivity <= 0:
        # a flat or vanishing field does not move; any step is stable
        return math.inf
    return cfl * dx * dx / (2 * d * diffusivity)


def _inner(ndim: int, axis: int, lo, hi) -> tuple:
    """Index tuple selecting ``lo:hi`` along ``axis`` and ``1:-1`` elsewhere."""
    idx = [slice(1, -1)] * ndim
    idx[axis] = slice(lo, hi)
    return tuple(idx)


def _face_differences(V: np.ndarray, axis: int) -> np.ndarray:
    """``V[k+1] - V[k]`` along ``axis`` for all faces, restricted to inner rows."""
    nd = V.ndim
    return V[_inner(nd, axis, 1, None)] - V[_inner(nd, axis, None, -1)]


def _tangential_sq(V: np.ndarray, axis: int, dx: float) -> np.ndarray:
    """Sum of squared tangential gradients, averaged onto the faces normal to ``axis``."""
    nd = V.ndim
    total = 0.0
    for other in range(nd):
        if other == axis:
            continue
        plus = [slice(None)] * nd
        minus = [slice(None)] * nd
        plus[other], minus[other] = slice(2, None), slice(None, -2)
        central = (V[tuple(plus)] - V[tuple(minus)]) / (2 * dx)
        # central is defined on inner rows of `other`; all rows of `axis` are
        # still present, so average node pairs onto faces along `axis`
        lo = [slice(None)] * nd
        hi = [slice(None)] * nd
        lo[axis], hi[axis] = slice(None, -1), slice(1, None)
        face = 0.5 * (central[tuple(lo)] + central[tuple(hi)])
        # restrict rows along remaining axes (not `other`) to inner ones
        trim = [slice(None)] * nd
        for ax in range(nd):
            if ax not in (axis, other):
                trim[ax] = slice(1, -1)
        total = total + face[tuple(trim)] ** 2
    return total


class _Flux:
    """Face fluxes and a stability bound for one equation."""

    def faces(self, V, axis, dx):
        raise NotImplementedError

    def diffusivity(self, u, dx):
        raise NotImplementedError


class _HeatFlux(_Flux):
    def faces(self, V, axis, dx):
        return _face_differences(V, axis) / dx

    def diffusivity(self, u, dx):
        return 1.0


class _PmeFlux(_Flux):
    def __init__(self, M: float):
        self.M = M

    def faces(self, V, axis, dx):
        return _face_differences(V**self.M, axis) / dx

    def diffusivity(self, u, dx):
        # for M < 1 the derivative M u^{M-1} decreases in u, so its nodal
        # maximum still bounds every face secant slope
        M = self.M
        if M < 1.0 and np.any(u <= 0):
            raise DomainError("fast diffusion (M < 1) needs strictly positive data")
        return float(np.max(M * u ** (M - 1.0)))


class _PdiffFlux(_Flux):
    def __init__(self, p: float, eps: float):
        self.p = p
        self.eps = eps

    def _factor(self, V, axis, dx):
        diff = _face_differences(V, axis) / dx
        g2 = diff * diff
        if V.ndim > 1:
            g2 = g2 + _tangential_sq(V, axis, dx)
        return (g2 + self.eps * self.eps) ** ((self.p - 2.0) / 2.0), diff

    def faces(self, V, axis, dx):
        factor, diff = self._factor(V, axis, dx)
        return factor * diff

    def diffusivity(self, u, dx):
        worst = 0.0
        for axis in range(u.ndim):
            factor, _ = self._factor(u, axis, dx)
            worst = max(worst, float(np.max(factor)))
        return max(1.0, self.p - 1.0) * worst


def _divergence(V: np.ndarray, flux: _Flux, dx: float) -> np.ndarray:
    """Discrete ``div F`` at the inner nodes of the padded array ``V``."""
    nd = V.ndim
    out = 0.0
    for axis in range(nd):
        F = flux.faces(V, axis, dx)
        hi = [slice(None)] * nd
        lo = [slice(None)] * nd
        hi[axis], lo[axis] = slice(1, None), slice(None, -1)
        out = out + (F[tuple(hi)] - F[tuple(lo)]) / dx
    return out


def _initial_field(initial, exact, mesh, t0):
    if initial is None:
        if exact is None:
            raise ConfigError("need initial data or an exact solution")
        return np.array(exact.u(mesh, t0), dtype=float)
    if callable(initial):
        return np.array(initial(mesh), dtype=float)
    if hasattr(initial, "u"):
        return np.array(initial.u(mesh, t0), dtype=float)
    return np.array(initial, dtype=float)


def _run(config: SolverConfig, flux: _Flux, equation: dict, initial=None, exact=None) -> GridSolution:
    cfg = config
    if cfg.boundary == "exact" and exact is None:
        raise ConfigError("boundary='exact' needs an exact solution")
    axis = cfg.axis()
    d = cfg.d
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    mesh = np.stack(grids, axis=-1)
    u = _initial_field(initial, exact, mesh, cfg.t_start)
    if u.shape != mesh.shape[:-1]:
        raise ConfigError(f"initial field has shape {u.shape}, grid is {mesh.shape[:-1]}")
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise DomainError("initial data must be finite and nonnegative")

    dx = cfg.dx
    max_dt = _stable_dt(1.0, dx, d, flux.diffusivity(u, dx))
    if cfg.dt is not None and cfg.dt > max_dt:
        raise ConfigError(f"dt={cfg.dt} violates the stability bound {max_dt:.3e} for dx={dx}")

    interior = tuple([slice(1, -1)] * d)
    boundary_mask = np.ones(u.shape, dtype=bool)
    boundary_mask[interior] = False
    fixed_values = u[boundary_mask].copy()
    weights = trapezoid_weights(u.shape, dx)

    cap = cfg.dt_cap if cfg.dt_cap is not None else math.inf

    def step_size(field):
        return min(cfg.dt or _stable_dt(cfg.cfl, dx, d, flux.diffusivity(field, dx)), cap)

    est_dt = step_size(u)
    est_steps = max(1, math.ceil((cfg.t_end - cfg.t_start) / est_dt))
    store_every = cfg.store_every or max(1, math.ceil(est_steps / cfg.max_snapshots))

    def rate_of(field):
        r = np.full(field.shape, np.nan)
        if cfg.boundary == "neumann":
            r[...] = _divergence(np.pad(field, 1, mode="reflect"), flux, dx)
        else:
            r[interior] = _divergence(field, flux, dx)
        return r

    times, snaps, rates = [cfg.t_start], [u.copy()], []
    mass = [float(np.sum(u * weights))]
    clamped, dts = [], []
    mass_violations = 0
    t = cfg.t_start
    step = 0
    rate = rate_of(u)
    rates.append(rate)
    t_stop = cfg.t_end - 1e-12 * cfg.t_end
    while t < t_stop:
        dt = step_size(u)
        if not dt > 0:
            raise DomainError(f"step size collapsed to {dt}")
        last = t + dt >= t_stop
        if last:
            dt = cfg.t_end - t
        new = u.copy()
        if cfg.boundary == "neumann":
            new += dt * rate
        else:
            new[interior] += dt * rate[interior]
        t_new = cfg.t_end if last else t + dt
        if cfg.boundary == "exact":
            new[boundary_mask] = exact.u(mesh[boundary_mask], t_new)
        elif cfg.boundary == "homogeneous":
            new[boundary_mask] = 0.0
        elif cfg.boundary == "fixed":
            new[boundary_mask] = fixed_values
        neg = new < 0
        clamp_mass = float(np.sum(-new[neg] * weights[neg])) if neg.any() else 0.0
        if clamp_mass:
            new[neg] = 0.0
        clamped.append(clamp_mass)
        m_new = float(np.sum(new * weights))
        if cfg.boundary == "homogeneous" and m_new > mass[-1] * (1 + 1e-12) + 1e-300:
            mass_violations += 1
        mass.append(m_new)
        dts.append(dt)
        u, t = new, t_new
        step += 1
        rate = rate_of(u)
        if step % store_every == 0 or last:
            times.append(t)
            snaps.append(u.copy())
            rates.append(rate)

    total = max(mass[0], 1e-300)
    meta = {
        "config": asdict(cfg),
        "steps": step,
        "store_every": store_every,
        "dt_min": min(dts) if dts else None,
        "dt_max": max(dts) if dts else None,
        "mass_history": mass,
        "mass_increases": mass_violations,
        "clamped_mass_total": float(sum(clamped)),
        "clamped_mass_max_fraction": max(clamped, default=0.0) / total,
    }
    if clamped and max(clamped) > 0:
        log.info("clamped negative mass, max per step %.3e", max(clamped))
    sol = GridSolution(axis, d, np.array(times), np.stack(snaps), equation, np.stack(rates), meta)
    if exact is not None:
        sol.metadata["l1_error_final"] = sol.l1_error(exact, -1)
    return sol


def solve_heat(config: SolverConfig, initial=None, exact=None) -> GridSolution:
    """Forward-Euler, central-difference solve of ``u_t = Laplace u``.

    ``initial`` may be an array on the grid, a callable of the node
    coordinates, or omitted to sample ``exact`` at ``t_start``.  With
    ``boundary='exact'`` the boundary nodes follow ``exact`` in time.
    """
    return _run(config, _HeatFlux(), {"name": "heat"}, initial, exact)


def solve_pme(M: float, config: SolverConfig, initial=None, exact=None) -> GridSolution:
    """Explicit solve of ``u_t = Laplace(u^M)`` with ``M > M0(d)``."""
    PmeParams(M, config.d)
    return _run(config, _PmeFlux(float(M)), {"name": "pme", "M": float(M)}, initial, exact)


def solve_pdiff(p: float, config: SolverConfig, initial=None, exact=None) -> GridSolution:
    """Explicit solve of ``u_t = div(|grad u|^{p-2} grad u)`` with regularization ``config.eps``."""
    if not p > 1 or not math.isfinite(p):
        raise ParameterError(f"p={p}: need p > 1")
    eq = {"name": "pdiff", "p": float(p), "eps": float(config.eps)}
    return _run(config, _PdiffFlux(float(p), float(config.eps)), eq, initial, exact)
