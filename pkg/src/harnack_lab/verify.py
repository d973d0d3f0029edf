"""Pointwise verification of gradient estimates and Harnack inequalities.

Every check turns an inequality into a signed margin per sample (negative
means violated) and condenses the margins into a :class:`VerificationReport`.

Solutions come in two flavours:

* analytic objects from :mod:`harnack_lab.pde.exact` (``u``, ``grad``, ``ut``
  and model-specific extras), sampled at random points drawn from a
  :class:`SamplePlan`;
* :class:`~harnack_lab.pde.grid.GridSolution` fields, where derivatives come
  from centred stencils and the stored scheme rates.  Nodes within one
  stencil radius of the box boundary are skipped.

Analytic checks use a fixed tolerance (``plan.analytic_tol``).  Grid checks
use ``plan.tol_constant * (dx**2 + dt)``; :func:`calibrate_constant` derives
that constant from a two-level refinement.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ._parallel import parallel_map
from .bounds import HarnackBound, PdiffParams, PmeParams, default_K, heat_bound, pdiff_bound, pme_bound
from .errors import ConfigError, ParameterError, RegionError
from .pde.grid import GridSolution, trapezoid_weights
from .pde.solvers import _divergence, _PdiffFlux

N_OFFENDERS = 5


# --------------------------------------------------------------------------
# plan and report


@dataclass
class SamplePlan:
    """Where to evaluate an inequality.

    Analytic solutions: ``n_points`` points uniform in the box
    ``[-x_half_width, x_half_width]^d`` with times uniform in ``t_range``;
    pairs use ``t2 - t1`` uniform in ``[dt_min, dt_max]``.  If
    ``pair_dx_max`` is set, ``x2`` is drawn within that distance of ``x1``.

    Grid solutions: all interior nodes at stored times after ``t_origin``,
    and ``n_pairs`` random node pairs.  ``t_origin`` is the time the
    estimate's clock starts from (the ``t`` in ``k/t``); use ``0`` for data
    sampled from a self-similar solution and the initial time otherwise.
    For degenerate equations, nodes closer than ``front_clearance`` to the
    edge of ``{u > support_floor * max u}`` are skipped.
    """

    n_points: int = 1000
    n_pairs: int = 1000
    seed: int = 0
    x_half_width: float = 3.0
    t_range: tuple[float, float] = (0.1, 10.0)
    dt_min: float = 1e-3
    dt_max: float = 2.0
    pair_dx_max: float | None = None
    t_origin: float = 0.0
    analytic_tol: float = 1e-8
    tol_constant: float = 10.0
    front_clearance: float = 0.5
    support_floor: float = 1e-3

    def __post_init__(self):
        self.t_range = tuple(float(v) for v in self.t_range)
        lo, hi = self.t_range
        if not (lo > 0 and hi >= lo):
            raise ConfigError(f"t_range={self.t_range}: need 0 < t_lo <= t_hi")
        if lo <= self.t_origin:
            raise ConfigError("sampled times must lie after t_origin")
        if not self.dt_min > 0 or self.dt_max < self.dt_min:
            raise ConfigError("need 0 < dt_min <= dt_max")
        if self.n_points < 1 or self.n_pairs < 1:
            raise ConfigError("sample counts must be >= 1")
        if not self.x_half_width > 0:
            raise ConfigError("x_half_width must be > 0")
        if self.pair_dx_max is not None and not self.pair_dx_max >= 0:
            raise ConfigError("pair_dx_max must be >= 0")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def points(self, d: int):
        rng = self.rng()
        x = rng.uniform(-self.x_half_width, self.x_half_width, (self.n_points, d))
        t = rng.uniform(*self.t_range, self.n_points)
        return x, t

    def pairs(self, d: int):
        rng = self.rng()
        n = self.n_pairs
        x1 = rng.uniform(-self.x_half_width, self.x_half_width, (n, d))
        if self.pair_dx_max is None:
            x2 = rng.uniform(-self.x_half_width, self.x_half_width, (n, d))
        else:
            direction = rng.normal(size=(n, d))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            radius = self.pair_dx_max * rng.uniform(0, 1, n) ** (1.0 / d)
            x2 = x1 + direction * radius[:, None]
        t1 = rng.uniform(*self.t_range, n)
        t2 = t1 + rng.uniform(self.dt_min, self.dt_max, n)
        return x1, t1, x2, t2


@dataclass
class VerificationReport:
    inequality: str
    samples: int
    worst_margin: float
    violations: int
    tolerated: int
    tolerance: float
    excluded: int = 0
    flagged: int = 0
    sharpness: dict | None = None
    worst_offenders: list = field(default_factory=list)
    notes: str = ""

    @property
    def passed(self) -> bool:
        return self.violations == 0

    CSV_HEADER = (
        "inequality",
        "samples",
        "worst_margin",
        "violations",
        "tolerated",
        "excluded",
        "flagged",
        "tolerance",
        "sharpness_min",
        "sharpness_median",
        "sharpness_max",
        "notes",
    )

    def row(self) -> list:
        sh = self.sharpness or {}
        return [
            self.inequality,
            self.samples,
            repr(float(self.worst_margin)),
            self.violations,
            self.tolerated,
            self.excluded,
            self.flagged,
            repr(float(self.tolerance)),
            repr(float(sh.get("min", math.nan))),
            repr(float(sh.get("median", math.nan))),
            repr(float(sh.get("max", math.nan))),
            self.notes,
        ]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def _report(name, margins, where, tol, excluded=0, flagged=0, sharpness=None, notes="") -> VerificationReport:
    """Condense margins into a report; ``where`` describes each sample."""
    margins = np.asarray(margins, dtype=float)
    n = int(margins.size)
    if n == 0:
        raise RegionError(f"{name}: no admissible samples")
    order = np.argsort(margins, kind="stable")[:N_OFFENDERS]
    offenders = [{"margin": float(margins[i]), **where(int(i))} for i in order]
    sharp = None
    if sharpness is not None:
        s = np.asarray(sharpness, dtype=float)
        s = s[np.isfinite(s)]
        if s.size:
            sharp = {"min": float(s.min()), "median": float(np.median(s)), "max": float(s.max())}
    return VerificationReport(
        inequality=name,
        samples=n,
        worst_margin=float(margins.min()),
        violations=int(np.count_nonzero(margins < -tol)),
        tolerated=int(np.count_nonzero((margins < 0) & (margins >= -tol))),
        tolerance=float(tol),
        excluded=int(excluded),
        flagged=int(flagged),
        sharpness=sharp,
        worst_offenders=offenders,
        notes=notes,
    )


def write_reports(reports, directory, stem: str = "verification") -> tuple[Path, Path]:
    """One CSV row per inequality plus a JSON file with the worst offenders."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{stem}.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(VerificationReport.CSV_HEADER)
        for r in reports:
            writer.writerow(r.row())
    json_path = directory / f"{stem}.json"
    payload = [_clean(r.to_dict()) for r in reports]
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, json_path


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# --------------------------------------------------------------------------
# shared evaluation helpers


def _dim(solution) -> int:
    return int(solution.d)


def _analytic_log_derivatives(solution, x, t):
    """``u``, ``|grad u / u|^2``, ``ut / u`` and ``lap u / u`` at analytic samples."""
    u = np.asarray(solution.u(x, t), dtype=float)
    ok = u > 0
    safe = np.where(ok, u, 1.0)
    g = np.asarray(solution.grad(x, t)) / safe[:, None]
    g2 = np.sum(g * g, axis=-1)
    ut = np.asarray(solution.ut(x, t)) / safe
    lap_fn = getattr(solution, "lap", None)
    lap = np.asarray(lap_fn(x, t)) / safe if lap_fn is not None else ut
    return u, ok, g2, ut, lap


def _point_where(x, t):
    return lambda i: {"x": [float(v) for v in np.atleast_1d(x[i])], "t": float(t[i])}


def _grid_tolerance(sol: GridSolution, plan: SamplePlan) -> float:
    dt = sol.metadata.get("dt_max")
    if dt is None:
        dt = 0.0
    return plan.tol_constant * (sol.dx**2 + float(dt))


def _grid_frames(sol: GridSolution, plan: SamplePlan):
    """Stored time indices usable by a check (strictly after ``t_origin``)."""
    ks = [k for k, t in enumerate(sol.times) if t - plan.t_origin > 0]
    if not ks:
        raise RegionError("no stored time lies after t_origin")
    return ks


def _inner(d: int):
    return tuple([slice(1, -1)] * d)


def _clearance_mask(u: np.ndarray, dx: float, plan: SamplePlan) -> np.ndarray:
    """Inner-node mask keeping nodes at least ``front_clearance`` inside the resolved support."""
    from scipy import ndimage

    resolved = u > plan.support_floor * float(u.max())
    steps = math.ceil(plan.front_clearance / dx - 1e-9)
    if steps > 0:
        resolved = ndimage.binary_erosion(resolved, iterations=steps, border_value=0)
    return resolved[_inner(u.ndim)]


def _grid_report(name, sol, plan, per_frame, tol=None, notes="", clearance=False):
    """Collect margins from ``per_frame(k, t_eff) -> inner-node margin array``."""
    d = sol.d
    inner = _inner(d)
    coords = sol.mesh()[inner]
    margins, where_k, where_idx = [], [], []
    excluded = 0
    for k in _grid_frames(sol, plan):
        m = np.asarray(per_frame(k, float(sol.times[k]) - plan.t_origin), dtype=float)
        keep = np.isfinite(m)
        if clearance:
            keep &= _clearance_mask(sol.values[k], sol.dx, plan)
        excluded += int(m.size - np.count_nonzero(keep))
        flat = np.flatnonzero(keep.reshape(-1))
        margins.append(m.reshape(-1)[flat])
        where_k.append(np.full(flat.size, k))
        where_idx.append(flat)
    margins = np.concatenate(margins)
    ks = np.concatenate(where_k)
    idx = np.concatenate(where_idx)
    pts = coords.reshape(-1, d)

    def where(i):
        return {"x": [float(v) for v in pts[idx[i]]], "t": float(sol.times[ks[i]])}

    tol = _grid_tolerance(sol, plan) if tol is None else tol
    return _report(name, margins, where, tol, excluded=excluded, notes=notes)


def _log_face_terms(u: np.ndarray, dx: float):
    """Discrete ``Laplace log u`` and ``|grad log u|^2`` at inner nodes.

    With ``delta = log u[i +- 1] - log u[i]`` the squared gradient is
    ``sum (expm1(delta) - delta) / dx^2``, which makes
    ``lap_h u / u - |grad log u|_h^2 = lap_h log u`` hold identically.
    """
    d = u.ndim
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.log(u)
    inner = _inner(d)
    centre = lg[inner]
    lap_log = np.zeros(centre.shape)
    grad2 = np.zeros(centre.shape)
    for axis in range(d):
        for shift in (1, -1):
            idx = list(inner)
            idx[axis] = slice(1 + shift, u.shape[axis] - 1 + shift)
            with np.errstate(invalid="ignore"):
                delta = lg[tuple(idx)] - centre
            lap_log += delta
            grad2 += np.expm1(delta) - delta
    return lap_log / dx**2, grad2 / dx**2


# --------------------------------------------------------------------------
# Li-Yau


def li_yau_check(solution, plan: SamplePlan) -> VerificationReport:
    """Margin ``d/(2t) - (|grad u|^2/u^2 - u_t/u)`` for positive heat solutions."""
    d = _dim(solution)
    if isinstance(solution, GridSolution):
        if solution.rates is None:
            raise ConfigError("grid solution carries no time derivative")
        dx = solution.dx

        def frame(k, t):
            u = solution.values[k]
            _, grad2 = _log_face_terms(u, dx)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = solution.rates[k][_inner(d)] / u[_inner(d)]
            return d / (2.0 * t) - (grad2 - ratio)

        return _grid_report("li_yau", solution, plan, frame)
    x, t = plan.points(d)
    u, ok, g2, ut, _ = _analytic_log_derivatives(solution, x, t)
    te = t - plan.t_origin
    margin = d / (2.0 * te) - (g2 - ut)
    return _report("li_yau", margin[ok], _point_where(x[ok], t[ok]), plan.analytic_tol, excluded=int(np.sum(~ok)))


# --------------------------------------------------------------------------
# pressure estimates


def aronson_benilan_check(solution, M: float, plan: SamplePlan) -> VerificationReport:
    """Margin ``Laplace f + k/t`` with the pressure ``f = M/(M-1) u^{M-1}``.

    ``M = 1`` uses ``f = log u`` and ``k = d/2``, i.e. the Li-Yau estimate.
    """
    d = _dim(solution)
    k = PmeParams(M, d).k
    name = f"aronson_benilan[M={M:g}]"
    if M == 1.0:
        return _log_pressure_check(name, solution, k, plan)
    if isinstance(solution, GridSolution):
        dx = solution.dx
        flux = _PdiffFlux(2.0, 0.0)

        def frame(kk, t):
            f = M / (M - 1.0) * solution.values[kk] ** (M - 1.0)
            return _divergence(f, flux, dx) + k / t

        return _grid_report(name, solution, plan, frame, clearance=M > 1.0)
    if not hasattr(solution, "pressure_lap"):
        raise ConfigError(f"{type(solution).__name__} has no analytic pressure Laplacian")
    x, t = plan.points(d)
    u = np.asarray(solution.u(x, t))
    ok = u > 0
    margin = np.asarray(solution.pressure_lap(x, t)) + k / (t - plan.t_origin)
    return _report(name, margin[ok], _point_where(x[ok], t[ok]), plan.analytic_tol, excluded=int(np.sum(~ok)))


def _log_pressure_check(name, solution, K, plan) -> VerificationReport:
    """``Laplace log u + K/t``: the shared ``M = 1`` / ``p = 2`` path."""
    d = _dim(solution)
    if isinstance(solution, GridSolution):
        dx = solution.dx

        def frame(kk, t):
            lap_log, _ = _log_face_terms(solution.values[kk], dx)
            return K / t + lap_log

        return _grid_report(name, solution, plan, frame)
    x, t = plan.points(d)
    u, ok, g2, _, lap = _analytic_log_derivatives(solution, x, t)
    te = t - plan.t_origin
    margin = K / te + (lap - g2)
    return _report(name, margin[ok], _point_where(x[ok], t[ok]), plan.analytic_tol, excluded=int(np.sum(~ok)))


def esteban_vazquez_check(solution, p: float, K: float | None, plan: SamplePlan) -> VerificationReport:
    """Margin ``div(|grad f|^{p-2} grad f) + K/t`` with ``f = u^gamma / gamma``.

    ``gamma = (p-2)/(p-1)``; at ``p = 2`` the pressure is ``log u``.  On grids
    the divergence uses face fluxes, as in the p-diffusion solver.
    """
    d = _dim(solution)
    params = PdiffParams(p, d, K)
    K = params.K if params.K is not None else default_K(p, d)
    name = f"esteban_vazquez[p={p:g}]"
    if p == 2.0:
        return _log_pressure_check(name, solution, K, plan)
    gamma = params.gamma
    if isinstance(solution, GridSolution):
        dx = solution.dx
        flux = _PdiffFlux(float(p), 0.0)

        def frame(kk, t):
            u = solution.values[kk]
            with np.errstate(divide="ignore", invalid="ignore"):
                f = u**gamma / gamma
                return _divergence(f, flux, dx) + K / t

        return _grid_report(name, solution, plan, frame, clearance=p > 2.0)
    if not hasattr(solution, "pressure_flux_div"):
        raise ConfigError(f"{type(solution).__name__} has no analytic pressure flux divergence")
    if getattr(solution, "p", p) != p:
        raise ParameterError(f"solution has p={solution.p}, check asked for p={p}")
    x, t = plan.points(d)
    u = np.asarray(solution.u(x, t))
    ok = u > 0
    margin = np.asarray(solution.pressure_flux_div(x, t)) + K / (t - plan.t_origin)
    return _report(name, margin[ok], _point_where(x[ok], t[ok]), plan.analytic_tol, excluded=int(np.sum(~ok)))


def benilan_crandall_check(solution, p: float, plan: SamplePlan) -> VerificationReport:
    """Margin ``-u/((p-2) t) - u_t`` of the time-monotonicity inequality.

    This inequality has the shape of a gradient estimate with a zero
    gradient coefficient, which the bounds module refuses, so the report
    carries no Harnack conclusion.
    """
    if p == 2.0:
        raise ParameterError("p = 2: the coefficient 1/(p-2) is singular")
    if not p > 1:
        raise ParameterError(f"p={p}: need p > 1")
    d = _dim(solution)
    name = f"benilan_crandall[p={p:g}]"
    notes = "no Harnack conclusion: zero gradient coefficient"
    if isinstance(solution, GridSolution):
        if solution.rates is None:
            raise ConfigError("grid solution carries no time derivative")

        def frame(kk, t):
            inner = _inner(d)
            return -solution.values[kk][inner] / ((p - 2.0) * t) - solution.rates[kk][inner]

        return _grid_report(name, solution, plan, frame, notes=notes)
    x, t = plan.points(d)
    u = np.asarray(solution.u(x, t))
    margin = -u / ((p - 2.0) * (t - plan.t_origin)) - np.asarray(solution.ut(x, t))
    return _report(name, margin, _point_where(x, t), plan.analytic_tol, notes=notes)


# --------------------------------------------------------------------------
# two-point Harnack inequalities


BoundProducer = Callable[[tuple, tuple, float], "HarnackBound | float"]


def heat_producer(d: int) -> BoundProducer:
    return lambda p1, p2, u1: heat_bound(d, p1, p2, u1)


def pme_producer(M: float, d: int) -> BoundProducer:
    params = PmeParams(M, d)
    return lambda p1, p2, u1: pme_bound(params, p1, p2, u1)


def pdiff_producer(p: float, d: int, K: float | None = None) -> BoundProducer:
    params = PdiffParams(p, d, K)
    return lambda p1, p2, u1: pdiff_bound(params, p1, p2, u1)


def _as_record(b) -> HarnackBound:
    if isinstance(b, HarnackBound):
        return b
    v = float(b)
    return HarnackBound(v, "I", 1.0, True, "lower")


def _grid_pairs(sol: GridSolution, plan: SamplePlan):
    ks = _grid_frames(sol, plan)
    times = sol.times
    rng = plan.rng()
    inner_n = sol.axis.size - 2
    if inner_n < 1 or len(ks) < 2:
        raise RegionError("grid too small for pair sampling")
    pairs = []
    attempts = 0
    while len(pairs) < plan.n_pairs and attempts < 100 * plan.n_pairs:
        attempts += 1
        k1, k2 = sorted(int(v) for v in rng.choice(ks, 2, replace=False))
        if times[k2] - times[k1] < plan.dt_min:
            continue
        i1 = tuple(int(v) for v in rng.integers(1, inner_n + 1, sol.d))
        i2 = tuple(int(v) for v in rng.integers(1, inner_n + 1, sol.d))
        pairs.append((k1, i1, k2, i2))
    if not pairs:
        raise RegionError("no admissible pairs with t2 - t1 >= dt_min")
    x1 = np.array([sol.axis[list(p[1])] for p in pairs])
    x2 = np.array([sol.axis[list(p[3])] for p in pairs])
    t1 = np.array([times[p[0]] for p in pairs])
    t2 = np.array([times[p[2]] for p in pairs])
    u1 = np.array([sol.values[(p[0],) + p[1]] for p in pairs])
    u2 = np.array([sol.values[(p[2],) + p[3]] for p in pairs])
    return x1, t1, x2, t2, u1, u2


def harnack_check(solution, bound: BoundProducer, plan: SamplePlan, name: str = "harnack") -> VerificationReport:
    """Margin ``u(x2,t2)^power - bound`` (or ``bound - u^power`` for upper bounds) per pair.

    Pairs with ``u(x1,t1) <= 0`` are excluded.  Bounds in power form whose
    bracket is negative are counted as flagged and never as violations.
    The sharpness ratio is ``bound / u(x2,t2)^power`` for positive lower bounds.
    """
    d = _dim(solution)
    if isinstance(solution, GridSolution):
        x1, t1, x2, t2, u1, u2 = _grid_pairs(solution, plan)
        tol = _grid_tolerance(solution, plan)
    else:
        x1, t1, x2, t2 = plan.pairs(d)
        u1 = np.asarray(solution.u(x1, t1), dtype=float)
        u2 = np.asarray(solution.u(x2, t2), dtype=float)
        tol = plan.analytic_tol
    ok = u1 > 0
    idx = np.flatnonzero(ok)
    te1 = t1 - plan.t_origin
    te2 = t2 - plan.t_origin

    def evaluate(i):
        p1 = (x1[i], float(te1[i]))
        p2 = (x2[i], float(te2[i]))
        return _as_record(bound(p1, p2, float(u1[i])))

    records = parallel_map(evaluate, idx)
    margins, sharp, keep = [], [], []
    flagged = 0
    for j, rec in zip(idx, records):
        if not rec.parenthesis_nonneg:
            flagged += 1
            continue
        with np.errstate(divide="ignore", over="ignore"):
            lhs = float(u2[j]) ** rec.power if u2[j] > 0 or rec.power > 0 else math.inf
        margin = lhs - rec.value if rec.sense == "lower" else rec.value - lhs
        margins.append(margin)
        keep.append(j)
        if rec.sense == "lower" and rec.value > 0 and lhs > 0 and math.isfinite(lhs):
            sharp.append(rec.value / lhs)
        else:
            sharp.append(math.nan)
    keep = np.array(keep, dtype=int)

    def where(i):
        j = keep[i]
        return {
            "x1": [float(v) for v in np.atleast_1d(x1[j])],
            "t1": float(t1[j]),
            "x2": [float(v) for v in np.atleast_1d(x2[j])],
            "t2": float(t2[j]),
        }

    return _report(name, margins, where, tol, excluded=int(np.sum(~ok)), flagged=flagged, sharpness=sharp)


# --------------------------------------------------------------------------
# weak form


def _bump(s):
    """``exp(1 - 1/(1 - s^2))`` on ``|s| < 1`` and its derivative; zero outside."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1
    one = np.where(inside, 1.0 - s * s, 1.0)
    val = np.where(inside, np.exp(1.0 - 1.0 / one), 0.0)
    der = np.where(inside, val * (-2.0 * s / (one * one)), 0.0)
    return val, der


@dataclass(frozen=True)
class BumpFunction:
    """Smooth compactly supported test function, a product of 1-D bumps in space and time."""

    center: tuple
    t_center: float
    width: float
    t_width: float

    def evaluate(self, mesh: np.ndarray, t: float):
        """``phi``, ``grad phi`` (``(..., d)``) and ``phi_t`` on node coordinates at time ``t``."""
        c = np.asarray(self.center, dtype=float)
        s = (mesh - c) / self.width
        vals, ders = _bump(s)
        tv, td = _bump((t - self.t_center) / self.t_width)
        space = np.prod(vals, axis=-1)
        grad = np.empty(mesh.shape)
        for k in range(mesh.shape[-1]):
            others = np.prod(np.delete(vals, k, axis=-1), axis=-1)
            grad[..., k] = ders[..., k] / self.width * others
        return space * tv, grad * tv, space * td / self.t_width


def random_bumps(solution: GridSolution, count: int, seed: int = 0, width: float | None = None) -> list[BumpFunction]:
    """Bumps whose supports sit well inside the grid's space-time box."""
    rng = np.random.default_rng(seed)
    L, dx = solution.L, solution.dx
    t0, t1 = float(solution.times[0]), float(solution.times[-1])
    w = width if width is not None else 0.3 * L
    tw = 0.3 * (t1 - t0)
    span = L - dx - w
    if span <= 0:
        raise ConfigError("bump width too large for the grid")
    out = []
    for _ in range(count):
        c = tuple(float(v) for v in rng.uniform(-0.9 * span, 0.9 * span, solution.d))
        tc = float(rng.uniform(t0 + 1.05 * tw, t1 - 1.05 * tw))
        out.append(BumpFunction(c, tc, float(w), float(tw)))
    return out


def _check_support(solution: GridSolution, phi: BumpFunction):
    lim = solution.L - solution.dx
    c = np.asarray(phi.center, dtype=float)
    if c.shape != (solution.d,):
        raise ConfigError("test-function centre has the wrong dimension")
    if np.any(np.abs(c) + phi.width > lim + 1e-12):
        raise ConfigError("test-function support touches the grid boundary")
    if phi.t_center - phi.t_width < solution.times[0] - 1e-12 or phi.t_center + phi.t_width > solution.times[-1] + 1e-12:
        raise ConfigError("test-function support leaves the stored time interval")


def weak_form_terms(solution: GridSolution, gamma: float, phi: BumpFunction) -> tuple[float, float, float]:
    """The three integrals of the weak formulation for ``f = u^gamma / gamma``.

    Returns ``(int f phi_t, -gamma int f |grad f|^{p-2} grad f . grad phi,
    (1-gamma) int |grad f|^p phi)`` with ``p = (2-gamma)/(1-gamma)``.  The
    factor ``gamma f`` is evaluated as ``u^gamma`` so that ``gamma = 0``
    (pressure ``log u``, the heat equation) is the continuous limit.  Space integrals use the
    trapezoid rule on the nodes and time integrals the trapezoid rule over
    the stored times.
    """
    if not gamma < 1:
        raise ParameterError(f"gamma={gamma}: need gamma < 1")
    _check_support(solution, phi)
    p = (2.0 - gamma) / (1.0 - gamma)
    mesh = solution.mesh()
    weights = trapezoid_weights(solution.shape, solution.dx)
    axes = tuple(range(solution.d))
    series = np.zeros((solution.times.size, 3))
    for k, t in enumerate(solution.times):
        val, grad_phi, phi_t = phi.evaluate(mesh, float(t))
        if not np.any(val) and not np.any(phi_t):
            continue
        u = solution.values[k]
        support = (val != 0) | (phi_t != 0)
        if np.any(u[support] <= 0):
            raise RegionError("the field must be positive on the test-function support")
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.log(u) if gamma == 0 else u**gamma / gamma
        grads = np.gradient(f, solution.dx, axis=axes)
        grad_f = np.stack(grads if solution.d > 1 else [grads], axis=-1)
        norm2 = np.sum(grad_f * grad_f, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            gp2 = np.where(norm2 > 0, norm2 ** ((p - 2.0) / 2.0), 0.0)
        flux_dot = gp2 * np.sum(grad_f * grad_phi, axis=-1)
        i1 = f * phi_t
        # gamma * f = u^gamma, which stays finite (-> 1) as gamma -> 0
        i2 = -(u**gamma) * flux_dot
        i3 = (1.0 - gamma) * norm2 ** (p / 2.0) * val
        for j, integrand in enumerate((i1, i2, i3)):
            series[k, j] = float(np.sum(np.where(support, integrand, 0.0) * weights))
    terms = np.trapezoid(series, solution.times, axis=0)
    return float(terms[0]), float(terms[1]), float(terms[2])


def weak_form_residual(solution: GridSolution, gamma: float, test_functions, relative: bool = False) -> float:
    """``max |T1 + T2 + T3|`` over the test set; ``relative`` divides by ``|T1|+|T2|+|T3|``."""
    worst = 0.0
    for phi in test_functions:
        t1, t2, t3 = weak_form_terms(solution, gamma, phi)
        r = abs(t1 + t2 + t3)
        if relative:
            scale = abs(t1) + abs(t2) + abs(t3)
            r = r / scale if scale > 0 else 0.0
        worst = max(worst, r)
    return worst


# --------------------------------------------------------------------------
# tolerance calibration


@dataclass(frozen=True)
class Calibration:
    constant: float
    raw: tuple
    ratio: float


def calibrate_constant(run: Callable[[float], tuple[float, float]], dx: float, safety: float = 4.0) -> Calibration:
    """Calibrate ``c`` in ``c (dx^2 + dt)`` from runs at ``dx`` and ``dx/2``.

    ``run(dx)`` returns ``(worst_margin, dx^2 + dt)`` for one resolution.  The
    raw constants ``max(0, -worst) / (dx^2 + dt)`` of both levels are
    reported; ``ratio`` is the coarse-to-fine shrink factor of the worst
    violation (about 4 when the slack is genuinely second order).
    """
    raw, viol = [], []
    for h in (dx, dx / 2):
        worst, scale = run(h)
        v = max(0.0, -float(worst))
        viol.append(v)
        raw.append(v / scale)
    ratio = viol[0] / viol[1] if viol[1] > 0 else math.inf
    return Calibration(safety * max(raw), tuple(raw), ratio)
