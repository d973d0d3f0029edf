"""Parabolic cylinders, oscillation and the Hölder bound obtained by iterating a Harnack inequality.

Geometry is exact where it matters: membership tests compare squared
distances, so Fraction inputs give exact answers, and the nested-cylinder
certificates are checked in rational arithmetic.  Grid quantities (suprema,
infima, oscillations) are node-wise extrema over the closed regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import ContainmentError, DomainError, ParameterError, RegionError
from .pde.grid import GridSolution

LOG4 = math.log(4.0)
# smallest admissible Harnack constant known for the linear equation
HARNACK_CONSTANT_FLOOR = Fraction(4, 3)


class CylinderKind(str, Enum):
    FULL = "full"
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class ParabolicCylinder:
    """``D_R``, ``D_R^+`` or ``D_R^-`` around ``(center, t0)``.

    Full:  ball of radius ``2R``,  times ``(t0 - R^2, t0 + R^2)``
    Plus:  ball of radius ``R/2``, times ``(t0 + 3R^2/4, t0 + R^2)``
    Minus: ball of radius ``R/2``, times ``(t0 - 3R^2/4, t0 - R^2/4)``
    """

    center: tuple
    t0: float
    R: float
    kind: CylinderKind = CylinderKind.FULL

    def __post_init__(self):
        if not isinstance(self.center, tuple):
            object.__setattr__(self, "center", tuple(np.atleast_1d(self.center).tolist()))
        object.__setattr__(self, "kind", CylinderKind(self.kind))
        if not self.R > 0:
            raise ParameterError(f"R={self.R}: must be > 0")

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def radius(self):
        return 2 * self.R if self.kind is CylinderKind.FULL else self.R / 2

    @property
    def time_interval(self) -> tuple:
        R2 = self.R * self.R
        if self.kind is CylinderKind.FULL:
            return self.t0 - R2, self.t0 + R2
        if self.kind is CylinderKind.PLUS:
            return self.t0 + 3 * R2 / 4, self.t0 + R2
        return self.t0 - 3 * R2 / 4, self.t0 - R2 / 4

    def with_kind(self, kind) -> "ParabolicCylinder":
        return ParabolicCylinder(self.center, self.t0, self.R, kind)

    def contains(self, x, t) -> bool:
        """Closed-set membership using only ``+ - * <=`` (exact for Fractions)."""
        x = tuple(x) if np.ndim(x) else (x,)
        if len(x) != self.d:
            raise DomainError("point dimension does not match the cylinder")
        lo, hi = self.time_interval
        r2 = sum((a - b) * (a - b) for a, b in zip(x, self.center))
        return bool(lo <= t <= hi and r2 <= self.radius * self.radius)

    def node_mask(self, axis: np.ndarray, d: int) -> np.ndarray:
        """Boolean mask of grid nodes inside the closed ball."""
        grids = np.meshgrid(*([axis] * d), indexing="ij")
        r2 = sum((g - float(c)) ** 2 for g, c in zip(grids, self.center))
        return r2 <= float(self.radius) ** 2 * (1 + 1e-12)

    def time_mask(self, times: np.ndarray) -> np.ndarray:
        lo, hi = (float(v) for v in self.time_interval)
        slack = 1e-12 * max(1.0, abs(hi))
        return (times >= lo - slack) & (times <= hi + slack)


@dataclass(frozen=True)
class SpaceTimeBox:
    """Inner box ``Q' = Omega' x (T2, T3)`` inside ``Q = Omega x (T1, T4)``; boxes are axis-aligned."""

    outer_lo: tuple
    outer_hi: tuple
    inner_lo: tuple
    inner_hi: tuple
    T1: float
    T2: float
    T3: float
    T4: float

    def __post_init__(self):
        for name in ("outer_lo", "outer_hi", "inner_lo", "inner_hi"):
            object.__setattr__(self, name, tuple(np.atleast_1d(getattr(self, name)).tolist()))
        if not (self.T1 < self.T2 < self.T3 < self.T4):
            raise ParameterError("need T1 < T2 < T3 < T4")
        if not (len(self.outer_lo) == len(self.outer_hi) == len(self.inner_lo) == len(self.inner_hi)):
            raise ParameterError("box corners must share one dimension")
        for olo, ilo, ihi, ohi in zip(self.outer_lo, self.inner_lo, self.inner_hi, self.outer_hi):
            if not (olo <= ilo < ihi <= ohi):
                raise ParameterError("inner box must lie inside the outer box")

    @property
    def d(self) -> int:
        return len(self.outer_lo)


def parabolic_distance(box: SpaceTimeBox) -> float:
    """Distance from ``Q'`` to the parabolic boundary of ``Q``.

    For axis-aligned boxes the infimum splits: lateral faces cost the
    smallest coordinate gap (time offset 0), the bottom and top faces cost
    the square root of the time gap (spatial offset 0).
    """
    gaps = [ilo - olo for olo, ilo in zip(box.outer_lo, box.inner_lo)]
    gaps += [ohi - ihi for ihi, ohi in zip(box.inner_hi, box.outer_hi)]
    time_gap = min(box.T2 - box.T1, box.T4 - box.T3)
    return float(min(min(gaps), math.sqrt(time_gap)))


# --------------------------------------------------------------------------
# grid reductions


def region_values(solution: GridSolution, cyl: ParabolicCylinder) -> np.ndarray:
    """Field values at grid nodes in the closed cylinder (flattened)."""
    if cyl.d != solution.d:
        raise DomainError("cylinder and grid dimensions differ")
    tmask = cyl.time_mask(solution.times)
    smask = cyl.node_mask(solution.axis, solution.d)
    vals = solution.values[tmask][:, smask]
    if vals.size == 0:
        raise RegionError(f"{cyl.kind.value} cylinder at {cyl.center}, t0={cyl.t0}, R={cyl.R} contains no grid node")
    return vals.reshape(-1)


def oscillation(solution: GridSolution, cyl: ParabolicCylinder) -> float:
    vals = region_values(solution, cyl)
    return float(vals.max() - vals.min())


def _require_inside(solution: GridSolution, cyl: ParabolicCylinder):
    full = cyl.with_kind(CylinderKind.FULL)
    lo, hi = full.time_interval
    c = np.asarray(full.center, dtype=float)
    if np.any(np.abs(c) + float(full.radius) > solution.L + 1e-12):
        raise RegionError("cylinder leaves the spatial grid")
    if lo < solution.times[0] - 1e-12 or hi > solution.times[-1] + 1e-12:
        raise RegionError("cylinder leaves the stored time interval")


def oscillation_inequality_check(solution: GridSolution, center, t0: float, R: float, C: float, tol: float = 0.0) -> dict:
    """Check ``omega_plus <= ((C-1)/C) omega + tol`` on ``D_R`` and ``D_R^+``."""
    params = HolderParams(C)
    cyl = ParabolicCylinder(tuple(np.atleast_1d(center).tolist()), t0, R)
    _require_inside(solution, cyl)
    omega = oscillation(solution, cyl)
    omega_plus = oscillation(solution, cyl.with_kind(CylinderKind.PLUS))
    return {
        "omega": omega,
        "omega_plus": omega_plus,
        "zeta": params.zeta,
        "holds": bool(omega_plus <= params.zeta * omega + tol),
    }


def sample_cylinders(L: float, dx: float, t_start: float, t_end: float, d: int, count: int, r_range, seed: int):
    """Random ``(center, t0, R)`` whose full cylinders fit inside the grid."""
    r_lo, r_hi = r_range
    if not 0 < r_lo <= r_hi:
        raise ParameterError("need 0 < r_min <= r_max")
    if 2 * r_hi * r_hi >= t_end - t_start:
        raise ParameterError(f"r_max={r_hi}: cylinders of height 2 R^2 do not fit in ({t_start}, {t_end})")
    if 2 * r_hi + dx >= L:
        raise ParameterError(f"r_max={r_hi}: balls of radius 2R do not fit in the box of half-width {L}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        R = float(rng.uniform(r_lo, r_hi))
        reach = L - 2 * R - dx
        center = tuple(float(c) for c in rng.uniform(-reach, reach, d))
        t0 = float(rng.uniform(t_start + R * R, t_end - R * R))
        out.append((center, t0, R))
    return out


def estimate_harnack_constant(solution: GridSolution, center, t0: float, R: float) -> float:
    """``max over D_R^- / min over D_R^+``: the least ``C`` for this cylinder.

    Returns ``inf`` when the infimum over ``D_R^+`` is zero.
    """
    cyl = ParabolicCylinder(tuple(np.atleast_1d(center).tolist()), t0, R)
    _require_inside(solution, cyl)
    minus = region_values(solution, cyl.with_kind(CylinderKind.MINUS))
    plus = region_values(solution, cyl.with_kind(CylinderKind.PLUS))
    if minus.min() < 0 or plus.min() < 0:
        raise DomainError("the Harnack constant is defined for nonnegative fields")
    low = float(plus.min())
    if low == 0:
        return math.inf
    return float(minus.max()) / low


# --------------------------------------------------------------------------
# nested cylinders


@dataclass(frozen=True)
class ContainmentCertificate:
    """Exact checks that ``D_{R_j}(z, tau_j)`` lies in ``D^+_{R_{j+1}}(z, tau_{j+1})``."""

    j: int
    balls_equal: bool
    lower_identity: bool
    upper_identity: bool
    lower_strict: bool
    upper_strict: bool

    @property
    def ok(self) -> bool:
        return self.balls_equal and self.lower_identity and self.upper_identity and self.lower_strict and self.upper_strict


@dataclass(frozen=True)
class NestedCylinders:
    center: tuple
    radii: tuple
    taus: tuple
    certificates: tuple

    def cylinders(self, kind=CylinderKind.FULL) -> list[ParabolicCylinder]:
        return [ParabolicCylinder(self.center, float(t), float(r), kind) for r, t in zip(self.radii, self.taus)]


def _exact(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float) and not math.isfinite(v):
        raise ParameterError("value must be finite")
    return Fraction(v)


def nested_cylinders(z, tau0, delta, k: int) -> NestedCylinders:
    """``R_0 = delta / 4^{k-1}``, ``R_{j+1} = 4 R_j``, ``tau_{j+1} = tau_j - 14 R_j^2``.

    Floats are converted to Fractions exactly, so each certificate is
    decided in rational arithmetic.
    """
    if int(k) != k or k < 1:
        raise ParameterError(f"k={k}: need an integer >= 1")
    delta = _exact(delta)
    if not delta > 0:
        raise ParameterError("delta must be > 0")
    tau = _exact(tau0)
    R = delta / 4 ** (k - 1)
    radii, taus = [R], [tau]
    for _ in range(k - 1):
        tau = tau - 14 * R * R
        R = 4 * R
        radii.append(R)
        taus.append(tau)
    certs = []
    for j in range(k - 1):
        Rj, Rn, tj, tn = radii[j], radii[j + 1], taus[j], taus[j + 1]
        lower = tn + Fraction(3, 4) * Rn * Rn
        upper = tn + Rn * Rn
        cert = ContainmentCertificate(
            j=j,
            balls_equal=2 * Rj == Rn / 2,
            lower_identity=lower == tj - 2 * Rj * Rj,
            upper_identity=upper == tj + 2 * Rj * Rj,
            lower_strict=lower < tj - Rj * Rj,
            upper_strict=upper > tj + Rj * Rj,
        )
        if not cert.ok:
            raise ContainmentError(f"cylinder {j} is not contained in the next one: {cert}")
        certs.append(cert)
    centre = tuple(np.atleast_1d(z).tolist()) if not isinstance(z, tuple) else z
    return NestedCylinders(centre, tuple(radii), tuple(taus), tuple(certs))


# --------------------------------------------------------------------------
# Hölder continuity


@dataclass(frozen=True)
class HolderParams:
    """Harnack constant ``C > 1`` with ``zeta = (C-1)/C`` and ``nu = log_4(C/(C-1))``."""

    C: float

    def __post_init__(self):
        if not (self.C > 1 and math.isfinite(self.C)):
            raise ParameterError(f"C={self.C}: need a finite C > 1 (zeta = (C-1)/C must lie in (0, 1))")

    @property
    def zeta(self) -> float:
        return (self.C - 1.0) / self.C

    @property
    def nu(self) -> float:
        return -math.log1p(-1.0 / self.C) / LOG4


def iteration_scale(dQQp: float) -> float:
    """``delta = d(Q, Q') / 64``, the largest scale of the cylinder iteration."""
    return dQQp / 64.0


def holder_bound(C: float, dQQp: float, sup_norm: float) -> float:
    """``2 (256 / d(Q,Q'))^nu ||u||_inf`` with ``nu = log_4(C/(C-1))``."""
    nu = HolderParams(C).nu
    if not dQQp > 0:
        raise ParameterError("the parabolic distance must be > 0")
    if sup_norm < 0:
        raise ParameterError("sup_norm must be >= 0")
    if sup_norm == 0:
        return 0.0
    return 2.0 * math.exp(nu * math.log(256.0 / dQQp)) * sup_norm


def _box_masks(solution: GridSolution, lo, hi, t_lo, t_hi):
    if len(lo) != solution.d:
        raise DomainError("box and grid dimensions differ")
    grids = np.meshgrid(*([solution.axis] * solution.d), indexing="ij")
    smask = np.ones(solution.shape, dtype=bool)
    for g, a, b in zip(grids, lo, hi):
        smask &= (g >= a - 1e-12) & (g <= b + 1e-12)
    tmask = (solution.times >= t_lo - 1e-12) & (solution.times <= t_hi + 1e-12)
    return smask, tmask


def sup_norm(solution: GridSolution, box: SpaceTimeBox) -> float:
    """Node-wise ``max |u|`` over the outer box ``Q``."""
    smask, tmask = _box_masks(solution, box.outer_lo, box.outer_hi, box.T1, box.T4)
    vals = solution.values[tmask][:, smask]
    if vals.size == 0:
        raise RegionError("Q contains no grid node")
    return float(np.max(np.abs(vals)))


def empirical_holder_quotient(solution: GridSolution, box: SpaceTimeBox, nu: float, pair_count: int = 10_000, seed: int = 0) -> float:
    """Largest ``|u(x,t) - u(y,s)| / (|x-y| + |t-s|^{1/2})^nu`` over node pairs in ``Q'``.

    Pairs are ``pair_count`` random distinct nodes plus every axis-aligned
    nearest-neighbour pair (in each space direction and in time).
    """
    if not nu > 0:
        raise ParameterError("nu must be > 0")
    smask, tmask = _box_masks(solution, box.inner_lo, box.inner_hi, box.T2, box.T3)
    sub_times = solution.times[tmask]
    block = solution.values[tmask]
    # restrict to the bounding index box of Q' (it is a box, so this is exact)
    idx = [np.flatnonzero(np.any(smask, axis=tuple(a for a in range(solution.d) if a != ax))) for ax in range(solution.d)]
    if any(i.size == 0 for i in idx) or sub_times.size == 0:
        raise RegionError("Q' contains no grid node")
    block = block[(slice(None),) + np.ix_(*idx)]
    coords = [solution.axis[i] for i in idx]
    if block.size < 2:
        raise RegionError("Q' needs at least two grid nodes")

    best = 0.0

    def update(du, dist):
        nonlocal best
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.abs(du) / dist**nu
        q = q[dist > 0]
        if q.size:
            best = max(best, float(q.max()))

    dx = solution.dx
    for ax in range(solution.d):
        update(np.diff(block, axis=ax + 1), np.full(np.diff(block, axis=ax + 1).shape, dx))
    if sub_times.size > 1:
        dt = np.diff(sub_times).reshape((-1,) + (1,) * solution.d)
        du = np.diff(block, axis=0)
        update(du, np.broadcast_to(np.sqrt(dt), du.shape))

    rng = np.random.default_rng(seed)
    shape = block.shape
    flat = block.reshape(-1)
    a = rng.integers(0, flat.size, pair_count)
    b = rng.integers(0, flat.size, pair_count)
    a, b = a[a != b], b[a != b]
    ia, ib = np.unravel_index(a, shape), np.unravel_index(b, shape)
    space = np.zeros(a.size)
    for ax in range(solution.d):
        diff = coords[ax][ia[ax + 1]] - coords[ax][ib[ax + 1]]
        space += diff * diff
    dist = np.sqrt(space) + np.sqrt(np.abs(sub_times[ia[0]] - sub_times[ib[0]]))
    update(flat[a] - flat[b], dist)
    return best
