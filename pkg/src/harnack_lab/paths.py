"""Weighted path-energy minimization.

The energy of a path ``x : [t1, t2] -> R^d`` with weight ``w > 0`` is

    E(x) = (1/q) * int |x'(t)|^q w(t) dt,      q > 1.

Among paths with fixed endpoints it is minimized by ``v(t) = D + B W(t)``
where ``W`` is an antiderivative of ``w^{1/(1-q)}``, and the minimum equals
``|x2 - x1|^q / (q (W(t2) - W(t1))^{q-1})``.  The closed form is computed
here next to a discrete piecewise-linear minimizer, so each can serve as an
oracle for the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.linalg import solve_banded

from .bounds import Constant, PowerLaw, TimeCoefficient
from .errors import DomainError, ParameterError, ShapeError

# slopes below this norm count as zero in the chain rule
ZERO_SLOPE = 1e-14


def _int_power(eta: float, a, b):
    """Vectorized ``int_a^b t**eta dt`` that stays accurate for short cells."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if eta == 0.0:
        return b - a
    s = eta + 1.0
    if np.any(a <= 0):
        if s <= 0:
            raise DomainError(f"t**{eta} is not integrable down to t = 0")
        return (b**s - a**s) / s
    log_ratio = np.log(b / a)
    if s == 0.0:
        return log_ratio
    return a**s * np.expm1(s * log_ratio) / s


def _int_exp(kappa: float, a, b):
    """Vectorized ``int_a^b exp(kappa t) dt``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if kappa == 0.0:
        return b - a
    return np.exp(kappa * a) * np.expm1(kappa * (b - a)) / kappa


def _check_q(q: float) -> None:
    if not q > 1 or not math.isfinite(q):
        raise ParameterError(f"q={q}: need 1 < q < inf")


# --------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class PowerTime:
    """``w(t) = t**sigma``."""

    sigma: float

    def __call__(self, t):
        return np.asarray(t, dtype=float) ** self.sigma

    def cell_integrals(self, knots):
        return _int_power(self.sigma, knots[:-1], knots[1:])

    def dual_integral(self, q: float, a, b):
        """``int_a^b w^{1/(1-q)} dt``, i.e. ``W(b) - W(a)``."""
        return _int_power(self.sigma / (1.0 - q), a, b)

    def extrema(self, t1: float, t2: float) -> tuple[float, float]:
        ends = self(np.array([t1, t2]))
        return float(ends.min()), float(ends.max())


@dataclass(frozen=True)
class ExpOfA:
    """``w(t) = exp(-m A(t))`` for a time coefficient with antiderivative ``A``."""

    m: float
    A: TimeCoefficient

    def __call__(self, t):
        return np.exp(-self.m * np.asarray(self.A.A(t), dtype=float))

    def _as_power(self):
        if isinstance(self.A, PowerLaw):
            return PowerTime(-self.m * self.A.mu)
        return None

    def cell_integrals(self, knots):
        pw = self._as_power()
        if pw is not None:
            return pw.cell_integrals(knots)
        if isinstance(self.A, Constant):
            return _int_exp(-self.m * self.A.c, knots[:-1], knots[1:])
        return _midpoint_cells(self, knots)

    def dual_integral(self, q: float, a, b):
        pw = self._as_power()
        if pw is not None:
            return pw.dual_integral(q, a, b)
        if isinstance(self.A, Constant):
            return _int_exp(self.m * self.A.c / (q - 1.0), a, b)
        return _quad_dual(self, q, a, b)

    def extrema(self, t1: float, t2: float) -> tuple[float, float]:
        if isinstance(self.A, (PowerLaw, Constant)):
            ends = self(np.array([t1, t2]))
            return float(ends.min()), float(ends.max())
        return _sampled_extrema(self, t1, t2)


@dataclass(frozen=True, eq=False)
class CallableWeight:
    """Arbitrary positive weight given as a vectorized callable."""

    evaluator: Callable

    def __call__(self, t):
        return np.asarray(self.evaluator(np.asarray(t, dtype=float)), dtype=float)

    def cell_integrals(self, knots):
        return _midpoint_cells(self, knots)

    def dual_integral(self, q: float, a, b):
        return _quad_dual(self, q, a, b)

    def extrema(self, t1: float, t2: float) -> tuple[float, float]:
        return _sampled_extrema(self, t1, t2)


WeightFunction = PowerTime | ExpOfA | CallableWeight


def _midpoint_cells(w, knots):
    knots = np.asarray(knots, dtype=float)
    mids = 0.5 * (knots[:-1] + knots[1:])
    vals = w(mids)
    if np.any(vals <= 0):
        raise DomainError("weight must be positive")
    return vals * np.diff(knots)


def _quad_dual(w, q, a, b):
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.empty(a_arr.shape)
    expo = 1.0 / (1.0 - q)
    for idx in np.ndindex(a_arr.shape):
        val, _ = integrate.quad(lambda t: float(w(t)) ** expo, a_arr[idx], b_arr[idx],
                                epsrel=1e-12, epsabs=0.0, limit=200)
        out[idx] = val
    return out if out.ndim else float(out)


def _sampled_extrema(w, t1, t2, n=4097):
    vals = w(np.linspace(t1, t2, n))
    return float(vals.min()), float(vals.max())


# --------------------------------------------------------------------------
# paths


@dataclass
class DiscretePath:
    """Piecewise-linear path through ``values[i]`` at ``times[i]``.

    ``values`` has shape ``(n_knots, d)``; a 1-D array is treated as ``d = 1``.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        self.values = values
        if self.times.ndim != 1 or self.times.size < 2:
            raise ShapeError("a path needs at least 2 knots")
        if values.shape[0] != self.times.size:
            raise ShapeError(f"{values.shape[0]} values for {self.times.size} knots")
        if np.any(np.diff(self.times) <= 0):
            raise ShapeError("knot times must be strictly increasing")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def slopes(self) -> np.ndarray:
        return np.diff(self.values, axis=0) / np.diff(self.times)[:, None]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        cols = [np.interp(t, self.times, self.values[:, j]) for j in range(self.dim)]
        return np.stack(cols, axis=-1)


def _endpoints(x1, x2):
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.shape != x2.shape or x1.ndim != 1:
        raise ShapeError("endpoints must be vectors of equal length")
    return x1, x2


def _check_interval(t1, t2):
    if not t1 >= 0:
        raise DomainError(f"t1={t1}: must be >= 0")
    if not t2 > t1:
        raise DomainError(f"need t1 < t2, got t1={t1}, t2={t2}")


def _energy_parts(slopes, omega, q):
    speed = np.linalg.norm(slopes, axis=1)
    return speed, float(np.sum(speed**q * omega) / q)


def functional_E(path: DiscretePath, w, q: float) -> float:
    """``(1/q) * sum_cells |slope|^q * int_cell w``."""
    _check_q(q)
    omega = w.cell_integrals(path.times)
    return _energy_parts(path.slopes(), omega, q)[1]


def closed_form_min(q: float, w, t1: float, t2: float, x1, x2) -> float:
    """Minimum of the energy over paths joining ``(t1, x1)`` to ``(t2, x2)``."""
    _check_q(q)
    _check_interval(t1, t2)
    x1, x2 = _endpoints(x1, x2)
    dW = float(w.dual_integral(q, t1, t2))
    if not dW > 0:
        raise DomainError("W(t2) - W(t1) must be positive")
    dist = float(np.linalg.norm(x2 - x1))
    if dist == 0.0:
        return 0.0
    return math.exp(q * math.log(dist) - math.log(q) - (q - 1.0) * math.log(dW))


@dataclass(frozen=True)
class OptimalPath:
    """The minimizer ``t -> D + B W(t)``, normalised so that ``W(t1) = 0``.

    Evaluation uses ``x1 + (x2 - x1) * (W(t) - W(t1)) / (W(t2) - W(t1))`` so
    both endpoints are reproduced exactly.
    """

    q: float
    w: object
    t1: float
    t2: float
    x1: np.ndarray
    x2: np.ndarray

    @property
    def span(self) -> float:
        return float(self.w.dual_integral(self.q, self.t1, self.t2))

    @property
    def B(self) -> np.ndarray:
        return (self.x2 - self.x1) / self.span

    @property
    def D(self) -> np.ndarray:
        return self.x1  # with W(t1) = 0

    def fraction(self, t):
        """``(W(t) - W(t1)) / (W(t2) - W(t1))``, exactly 0 and 1 at the ends."""
        t = np.asarray(t, dtype=float)
        lam = np.asarray(self.w.dual_integral(self.q, np.full(t.shape, self.t1), t), dtype=float) / self.span
        lam = np.where(t == self.t2, 1.0, lam)
        return np.where(t == self.t1, 0.0, lam)

    def __call__(self, t):
        lam = self.fraction(t)
        return self.x1 + lam[..., None] * (self.x2 - self.x1)

    def sample(self, n_knots: int, spacing: str = "uniform") -> DiscretePath:
        times = make_knots(self.q, self.w, self.t1, self.t2, n_knots, spacing)
        return DiscretePath(times, self(times))


def optimal_path(q: float, w, t1: float, t2: float, x1, x2) -> OptimalPath:
    _check_q(q)
    _check_interval(t1, t2)
    x1, x2 = _endpoints(x1, x2)
    return OptimalPath(q, w, float(t1), float(t2), x1, x2)


def make_knots(q: float, w, t1: float, t2: float, n_knots: int, spacing: str = "uniform") -> np.ndarray:
    """Knot times, uniform in ``t`` or uniform in ``W(t)``."""
    if n_knots < 2:
        raise ParameterError("need at least 2 knots")
    if spacing == "uniform":
        times = np.linspace(t1, t2, n_knots)
    elif spacing == "W":
        fine = np.linspace(t1, t2, max(20 * n_knots, 2001))
        cum = np.concatenate([[0.0], np.cumsum(w.dual_integral(q, fine[:-1], fine[1:]))])
        times = np.interp(np.linspace(0.0, cum[-1], n_knots), cum, fine)
        times[0], times[-1] = t1, t2
    else:
        raise ParameterError(f"unknown knot spacing {spacing!r}")
    return times


# --------------------------------------------------------------------------
# derivative and minimization


def _flux(slopes: np.ndarray, speed: np.ndarray, q: float) -> np.ndarray:
    """``|s|^{q-2} s`` per cell, zero where ``|s|`` is below ``ZERO_SLOPE``."""
    safe = np.where(speed < ZERO_SLOPE, 1.0, speed)
    factor = np.where(speed < ZERO_SLOPE, 0.0, safe ** (q - 2.0))
    return factor[:, None] * slopes


def gateaux(v: DiscretePath, h: DiscretePath, w, q: float) -> float:
    """Directional derivative ``int |v'|^{q-2} v' . h' w dt`` of the energy."""
    _check_q(q)
    if v.times.shape != h.times.shape or not np.array_equal(v.times, h.times):
        raise ShapeError("v and h must share the same knots")
    if v.values.shape != h.values.shape:
        raise ShapeError("v and h must have the same dimension")
    if np.any(h.values[0] != 0) or np.any(h.values[-1] != 0):
        raise ShapeError("the direction h must vanish at both endpoints")
    omega = w.cell_integrals(v.times)
    slopes = v.slopes()
    speed = np.linalg.norm(slopes, axis=1)
    phi = _flux(slopes, speed, q)
    return float(np.sum(np.sum(phi * h.slopes(), axis=1) * omega))


def energy_gradient(path: DiscretePath, w, q: float, omega=None) -> np.ndarray:
    """Gradient of the discrete energy with respect to the interior knot values."""
    if omega is None:
        omega = w.cell_integrals(path.times)
    hcell = np.diff(path.times)
    slopes = path.slopes()
    speed = np.linalg.norm(slopes, axis=1)
    flux = _flux(slopes, speed, q) * (omega / hcell)[:, None]
    return flux[:-1] - flux[1:]


@dataclass
class MinimizationResult:
    value: float
    path: DiscretePath
    iterations: int
    converged: bool
    gap_to_closed_form: float | None = None
    grad_norm: float = math.nan


def _metric_bands(speed, omega, hcell, q, dim, floor):
    """Tridiagonal positive-definite metric used to precondition descent.

    It is the second variation of the discrete energy with the slope
    magnitudes frozen (and floored away from zero), which makes the descent
    direction insensitive to the knot count.
    """
    factor = (q - 1.0) if dim == 1 else max(q - 1.0, 1.0)
    kappa = factor * np.maximum(speed, floor) ** (q - 2.0) * omega / hcell**2
    n = kappa.size - 1  # interior unknowns
    ab = np.zeros((3, n))
    ab[1] = kappa[:-1] + kappa[1:]
    ab[0, 1:] = -kappa[1:-1]
    ab[2, :-1] = -kappa[1:-1]
    return ab


def numeric_minimize(
    q: float,
    w,
    t1: float,
    t2: float,
    x1,
    x2,
    N: int = 200,
    tol: float = 1e-8,
    max_iters: int = 100_000,
    spacing: str = "uniform",
    initial: np.ndarray | None = None,
) -> MinimizationResult:
    """Minimize the discrete energy over the interior knot values.

    Descent directions are gradients taken in the metric of
    :func:`_metric_bands`; each step is accepted by Armijo backtracking.
    Stops when the sup-norm of the Euclidean gradient is at most ``tol``.
    ``initial`` optionally gives the starting knot values (shape
    ``(N, d)``); endpoints are always reset to ``x1, x2``.
    """
    _check_q(q)
    _check_interval(t1, t2)
    if N < 3:
        raise ParameterError("need N >= 3 knots")
    x1, x2 = _endpoints(x1, x2)
    times = make_knots(q, w, t1, t2, N, spacing)
    if initial is None:
        lam = (times - t1) / (t2 - t1)
        values = x1 + lam[:, None] * (x2 - x1)
    else:
        values = np.array(initial, dtype=float).reshape(N, -1)
        if values.shape[1] != x1.size:
            raise ShapeError("initial path has the wrong dimension")
    values[0], values[-1] = x1, x2

    omega = w.cell_integrals(times)
    hcell = np.diff(times)
    floor = 1e-6 * max(float(np.linalg.norm(x2 - x1)) / (t2 - t1), 1e-12)

    def evaluate(vals):
        slopes = np.diff(vals, axis=0) / hcell[:, None]
        speed = np.linalg.norm(slopes, axis=1)
        energy = float(np.sum(speed**q * omega) / q)
        flux = _flux(slopes, speed, q) * (omega / hcell)[:, None]
        return energy, flux[:-1] - flux[1:], speed

    energy, grad, speed = evaluate(values)
    gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
    it = 0
    converged = gnorm <= tol
    while not converged and it < max_iters:
        it += 1
        ab = _metric_bands(speed, omega, hcell, q, x1.size, floor)
        direction = -solve_banded((1, 1), ab, grad)
        slope = float(np.sum(grad * direction))
        alpha = 1.0
        accepted = False
        while alpha > 1e-20:
            trial = values.copy()
            trial[1:-1] += alpha * direction
            e_new, g_new, s_new = evaluate(trial)
            gn_new = float(np.max(np.abs(g_new)))
            armijo = e_new <= energy + 1e-4 * alpha * slope
            # near the optimum energy differences drown in rounding; accept a
            # step that keeps the energy flat to rounding and shrinks the gradient
            flat = e_new - energy <= 8 * np.finfo(float).eps * abs(energy) and gn_new < gnorm
            if armijo or flat:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        values, energy, grad, speed, gnorm = trial, e_new, g_new, s_new, gn_new
        converged = gnorm <= tol

    path = DiscretePath(times, values)
    gap = energy - closed_form_min(q, w, t1, t2, x1, x2)
    return MinimizationResult(energy, path, it, converged, gap, gnorm)


# --------------------------------------------------------------------------
# Poincare inequality


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class PoincareCheck:
    lhs: float
    rhs: float
    constant: float
    holds: bool


def weighted_norm(path: DiscretePath, w, q: float) -> float:
    """``(int |x(t)|^q w(t) dt)^{1/q}`` by 8-point Gauss-Legendre per cell."""
    a, b = path.times[:-1], path.times[1:]
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b)[:, None] + half[:, None] * _GL_NODES[None, :]
    lam = (nodes - a[:, None]) / (2 * half[:, None])
    xa, xb = path.values[:-1], path.values[1:]
    pts = xa[:, None, :] + lam[..., None] * (xb - xa)[:, None, :]
    integrand = np.linalg.norm(pts, axis=2) ** q * w(nodes)
    total = float(np.sum(integrand * _GL_WEIGHTS[None, :] * half[:, None]))
    return total ** (1.0 / q)


def poincare_check(x: DiscretePath, q: float, w) -> PoincareCheck:
    """Check ``||x||_{q,w} <= C ||x'||_{q,w}`` for a path vanishing at both ends."""
    _check_q(q)
    if np.any(x.values[0] != 0) or np.any(x.values[-1] != 0):
        raise ShapeError("Poincare check needs a path with zero endpoints")
    t1, t2 = float(x.times[0]), float(x.times[-1])
    wmin, wmax = w.extrema(t1, t2)
    c1, c2 = wmin ** (1.0 / q), wmax ** (1.0 / q)
    c3 = q ** (-1.0 / q) * (t2 - t1)
    const = c2 * c3 / c1
    lhs = weighted_norm(x, w, q)
    deriv = (q * functional_E(x, w, q)) ** (1.0 / q)
    rhs = const * deriv
    return PoincareCheck(lhs, rhs, const, lhs <= rhs * (1 + 1e-12))
