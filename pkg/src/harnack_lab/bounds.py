"""Closed-form Harnack bounds derived from parabolic gradient estimates.

A positive function ``f`` on ``Omega x (0, T)`` satisfying the forward estimate

    f_t + a(t) f >= C |grad f|^p / f^r

(or the backward estimate ``f_t + a f <= -C |grad f|^p / f^r``) obeys explicit
two-point inequalities between ``f(x1, t1)`` and ``f(x2, t2)``.  This module
evaluates those inequalities for arbitrary ``(C, p, r, a)`` and for the three
model equations: heat, porous medium and p-diffusion.

Everything is computed in float64.  Whenever a bound is a pure product of
powers and exponentials it is assembled in log space (``log_value``) and only
exponentiated at the end, so ``e^{A(t)}`` factors never overflow on their own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Union

import numpy as np
from scipy import integrate

from .errors import DomainError, OrderingError, ParameterError

# |m| below this is treated as the r = p - 1 case.
CASE_I_ATOL = 1e-14


# --------------------------------------------------------------------------
# time coefficients a(t) and antiderivatives A(t)


@dataclass(frozen=True)
class PowerLaw:
    """``a(t) = mu / t`` with ``A(t) = mu * log t``."""

    mu: float

    def a(self, t):
        return self.mu / np.asarray(t, dtype=float)

    def A(self, t):
        return self.mu * np.log(t)


@dataclass(frozen=True)
class Constant:
    """``a(t) = c`` with ``A(t) = c * t``."""

    c: float

    def a(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.c)

    def A(self, t):
        return self.c * np.asarray(t, dtype=float)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Piecewise-linear ``a`` through ``(times, values)`` samples.

    ``A`` is the exact antiderivative of the linear interpolant, normalised so
    that ``A(times[0]) = 0``; at the sample times it coincides with the
    cumulative trapezoid rule.
    """

    times: np.ndarray
    values: np.ndarray
    _cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ParameterError("Tabulated needs matching 1-D times/values with at least 2 samples")
        if np.any(times <= 0):
            raise ParameterError("Tabulated sample times must be > 0")
        if np.any(np.diff(times) <= 0):
            raise ParameterError("Tabulated sample times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        cum = integrate.cumulative_trapezoid(values, times, initial=0.0)
        object.__setattr__(self, "_cumulative", cum)

    def a(self, t):
        return np.interp(t, self.times, self.values)

    def A(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.times[0]) or np.any(t_arr > self.times[-1]):
            raise DomainError(
                f"t outside tabulated range [{self.times[0]}, {self.times[-1]}]"
            )
        i = np.clip(np.searchsorted(self.times, t_arr, side="right") - 1, 0, self.times.size - 2)
        h = self.times[i + 1] - self.times[i]
        s = t_arr - self.times[i]
        slope = (self.values[i + 1] - self.values[i]) / h
        out = self._cumulative[i] + self.values[i] * s + 0.5 * slope * s * s
        return out if out.ndim else float(out)


TimeCoefficient = Union[PowerLaw, Constant, Tabulated]


# --------------------------------------------------------------------------
# parameter containers


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class Case(str, Enum):
    I = "I"  # noqa: E741
    II = "II"
    III = "III"
    NONNEG_R0 = "nonneg_r0"


class Derived(NamedTuple):
    q: float
    m: float
    xi: float


@dataclass(frozen=True)
class EstimateParams:
    """Constants of the gradient estimate ``f_t + a f >= C |grad f|^p / f^r``.

    ``direction="backward"`` selects the reversed estimate
    ``f_t + a f <= -C |grad f|^p / f^r``.  The derived exponents ``q, m, xi``
    are properties, so they can never go stale.
    """

    C: float
    p: float
    r: float
    a: TimeCoefficient = PowerLaw(0.0)
    direction: Direction = Direction.FORWARD

    def __post_init__(self):
        if not self.C > 0:
            raise ParameterError(
                f"C={self.C}: the gradient-estimate constant must be > 0; with C <= 0 no "
                "Harnack inequality follows (the Benilan-Crandall inequality for subcritical "
                "p-diffusion has this form, and those solutions admit no Harnack bound)"
            )
        if not self.p > 1:
            raise ParameterError(f"p={self.p}: need p > 1")
        if not math.isfinite(self.r):
            raise ParameterError(f"r={self.r}: must be finite")
        object.__setattr__(self, "direction", Direction(self.direction))

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def m(self) -> float:
        return self.r / (self.p - 1.0) - 1.0

    @property
    def xi(self) -> float:
        q = self.q
        return (1.0 / q) * (1.0 / (self.p * self.C)) ** (q - 1.0)

    @property
    def case(self) -> Case:
        m = self.m
        if abs(m) <= CASE_I_ATOL:
            return Case.I
        return Case.II if m > 0 else Case.III


@dataclass(frozen=True)
class SpacetimePoint:
    x: np.ndarray
    t: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1:
            raise DomainError("x must be a vector")
        object.__setattr__(self, "x", x)
        if not self.t > 0:
            raise DomainError(f"t={self.t}: times must be > 0")


@dataclass(frozen=True)
class HarnackBound:
    """One two-point inequality ``f(x2, t2)**power  (>= or <=)  value``.

    ``sense`` is ``"lower"`` for ``>=`` and ``"upper"`` for ``<=``.
    ``parenthesis_nonneg`` reports whether the bracket that must be
    nonnegative for the root form was nonnegative; when it is False, the
    record holds the power form of the inequality and never the root form.
    """

    value: float
    case: Case
    power: float
    parenthesis_nonneg: bool
    sense: str = "lower"
    log_value: float | None = None

    def implied(self) -> tuple[str, float]:
        """Translate the inequality into a bound on ``f(x2, t2)`` itself.

        Returns ``(sense, bound)`` where ``sense`` is ``"lower"``,
        ``"upper"`` or ``"none"`` (no information on ``f`` itself).
        """
        pw, v = self.power, self.value
        if v <= 0 and not (pw == 1.0 and self.sense == "upper"):
            # f**pw >= nonpositive carries no information on f
            return "none", math.nan
        if pw == 1.0:
            return self.sense, v
        sense = self.sense
        if pw < 0:
            sense = "upper" if sense == "lower" else "lower"
        if self.log_value is not None:
            return sense, math.exp(self.log_value / pw)
        return sense, v ** (1.0 / pw)


# --------------------------------------------------------------------------
# helpers


def _as_point(p) -> SpacetimePoint:
    if isinstance(p, SpacetimePoint):
        return p
    x, t = p
    return SpacetimePoint(x, t)


def _pair(p1, p2):
    p1, p2 = _as_point(p1), _as_point(p2)
    if p1.x.shape != p2.x.shape:
        raise DomainError("x1 and x2 have different dimensions")
    if not p2.t > p1.t:
        raise OrderingError(f"need t1 < t2, got t1={p1.t}, t2={p2.t}")
    return p1, p2, float(np.linalg.norm(p2.x - p1.x))


def integral_of_power(eta: float, t1: float, t2: float) -> float:
    """``int_{t1}^{t2} t**eta dt`` without cancellation near ``eta = -1``."""
    s = eta + 1.0
    L = math.log(t2 / t1)
    if s == 0.0:
        return L
    return math.exp(s * math.log(t1)) * math.expm1(s * L) / s


def _log_or_neg_inf(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def derive_quantities(params: EstimateParams) -> Derived:
    return Derived(params.q, params.m, params.xi)


def _log_expm1_ratio(x: float, s: float) -> float:
    """``log(expm1(x) / s)`` for ``x, s`` of equal sign, without overflow."""
    if x > 0:
        return x + math.log(-math.expm1(-x)) - math.log(s)
    return math.log(-math.expm1(x)) - math.log(-s)


def log_weight_integral_I(params: EstimateParams, t1: float, t2: float) -> float:
    """Natural log of :func:`weight_integral_I`, finite even when ``I`` overflows."""
    if not t1 > 0:
        raise DomainError(f"t1={t1}: times must be > 0")
    if not t2 > t1:
        raise OrderingError(f"need t1 < t2, got t1={t1}, t2={t2}")
    scale = params.m * (params.p - 1.0)
    a = params.a
    if isinstance(a, PowerLaw):
        s = scale * a.mu + 1.0
        L = math.log(t2 / t1)
        if s == 0.0:
            return math.log(L)
        return s * math.log(t1) + _log_expm1_ratio(s * L, s)
    if isinstance(a, Constant):
        kappa = scale * a.c
        if kappa == 0.0:
            return math.log(t2 - t1)
        return kappa * t1 + _log_expm1_ratio(kappa * (t2 - t1), kappa)
    # shift by the larger endpoint exponent so the quadrature stays in range
    shift = max(scale * a.A(t1), scale * a.A(t2))
    inner = [t for t in a.times if t1 < t < t2]
    val, _ = integrate.quad(
        lambda t: math.exp(scale * a.A(t) - shift), t1, t2, epsrel=1e-10, epsabs=0.0,
        limit=500, points=inner[:400] or None,
    )
    return shift + math.log(val)


def weight_integral_I(params: EstimateParams, t1: float, t2: float) -> float:
    """``I = int_{t1}^{t2} exp(m (p-1) A(t)) dt``.

    Closed form for :class:`PowerLaw` and :class:`Constant` coefficients;
    adaptive quadrature (relative tolerance 1e-10) for :class:`Tabulated`.
    """
    return math.exp(log_weight_integral_I(params, t1, t2))


def _log_J(dist: float, q: float, log_I: float) -> float:
    """log of ``|x2-x1|^q I^(1-q)``; ``-inf`` when the points coincide."""
    if dist == 0.0:
        return -math.inf
    return q * math.log(dist) + (1.0 - q) * log_I


def _check_f1(params: EstimateParams, f1: float) -> None:
    if not math.isfinite(f1) or f1 < 0:
        raise DomainError(f"f1={f1}: must be a finite nonnegative value")
    if f1 == 0 and params.r != 0:
        raise DomainError("f1 = 0 is only admissible for r = 0 (nonnegative extension)")


# --------------------------------------------------------------------------
# generic bounds


def lower_bound(params: EstimateParams, p1, p2, f1: float) -> HarnackBound:
    """Lower bound on ``f(x2, t2)`` from a forward gradient estimate."""
    if params.direction is not Direction.FORWARD:
        raise ParameterError("lower_bound needs a forward estimate")
    p1, p2, dist = _pair(p1, p2)
    _check_f1(params, f1)
    q, m, xi = derive_quantities(params)
    A1, A2 = float(params.a.A(p1.t)), float(params.a.A(p2.t))
    case = params.case

    if case is Case.I:
        lv = A1 - A2 + math.log(f1) - xi * dist**q / (p2.t - p1.t) ** (q - 1.0)
        return HarnackBound(math.exp(lv), Case.I, 1.0, True, "lower", lv)

    logJ = _log_J(dist, q, log_weight_integral_I(params, p1.t, p2.t))

    if case is Case.II:
        z = math.log(m * xi) + logJ + m * (math.log(f1) + A1)
        lv = A1 - A2 + math.log(f1) - np.logaddexp(0.0, z) / m
        return HarnackBound(math.exp(lv), Case.II, 1.0, True, "lower", float(lv))

    am = -m
    if f1 == 0:
        # nonnegative r = 0 extension: only the power form survives
        val = -math.exp(am * (A1 - A2) + math.log(am * xi) + logJ - am * A1) if logJ > -math.inf else 0.0
        return HarnackBound(val, Case.NONNEG_R0, am, logJ == -math.inf, "lower", None)
    # rho = |m| xi J / (f1^|m| e^{|m| A1}); the bracket is f1^|m| (1 - rho)
    rho = math.exp(math.log(am * xi) + logJ - am * A1 - am * math.log(f1))
    if rho <= 1.0:
        lv =A1 - A2 + math.log(f1) + math.log1p(-rho) / am if rho < 1.0 else -math.inf
        return HarnackBound(math.exp(lv), Case.III, 1.0, True, "lower", lv)
    val = math.exp(am * (A1 - A2) + am * math.log(f1)) * (1.0 - rho)
    return HarnackBound(val, Case.III, am, False, "lower", None)


def upper_bound(params: EstimateParams, p1, p2, f1: float) -> HarnackBound:
    """Upper bound on ``f(x2, t2)`` from a backward gradient estimate."""
    if params.direction is not Direction.BACKWARD:
        raise ParameterError("upper_bound needs a backward estimate")
    p1, p2, dist = _pair(p1, p2)
    _check_f1(params, f1)
    q, m, xi = derive_quantities(params)
    A1, A2 = float(params.a.A(p1.t)), float(params.a.A(p2.t))
    case = params.case

    if case is Case.I:
        lv = A1 - A2 + math.log(f1) + xi * dist**q / (p2.t - p1.t) ** (q - 1.0)
        return HarnackBound(math.exp(lv), Case.I, 1.0, True, "upper", lv)

    logJ = _log_J(dist, q, log_weight_integral_I(params, p1.t, p2.t))

    if case is Case.II:
        # bracket f1^{-m} - m xi J e^{m A1} = f1^{-m} (1 - rho)
        rho = math.exp(math.log(m * xi) + logJ + m * A1 + m * math.log(f1))
        if rho < 1.0:
            lv = A1 - A2 + math.log(f1) - math.log1p(-rho) / m
            return HarnackBound(math.exp(lv), Case.II, 1.0, True, "upper", lv)
        if rho == 1.0:
            return HarnackBound(math.inf, Case.II, 1.0, True, "upper", math.inf)
        # power form: f2^{-m} >= e^{m (A2 - A1)} f1^{-m} (1 - rho), a negative number
        val = math.exp(m * (A2 - A1) - m * math.log(f1)) * (1.0 - rho)
        return HarnackBound(val, Case.II, -m, False, "lower", None)

    am = -m
    if f1 == 0:
        if logJ == -math.inf:
            return HarnackBound(0.0, Case.NONNEG_R0, am, True, "upper", -math.inf)
        lv = am * (A1 - A2) + math.log(am * xi) + logJ - am * A1
        return HarnackBound(math.exp(lv), Case.NONNEG_R0, am, True, "upper", lv)
    z = math.log(am * xi) + logJ - am * A1 - am * math.log(f1)
    lv = A1 - A2 + math.log(f1) + float(np.logaddexp(0.0, z)) / am
    return HarnackBound(math.exp(lv), Case.III, 1.0, True, "upper", lv)


# --------------------------------------------------------------------------
# model equations


def heat_bound(d: int, p1, p2, u1: float) -> float:
    """``u1 (t1/t2)^{d/2} exp(-|x2-x1|^2 / (4 (t2-t1)))``."""
    if int(d) != d or d < 1:
        raise ParameterError(f"d={d}: need an integer dimension >= 1")
    p1, p2, dist = _pair(p1, p2)
    if not u1 > 0:
        raise DomainError(f"u1={u1}: must be > 0")
    lv = math.log(u1) + 0.5 * d * math.log(p1.t / p2.t) - dist**2 / (4.0 * (p2.t - p1.t))
    return math.exp(lv)


def _heat_record(d, p1, p2, u1) -> HarnackBound:
    v = heat_bound(d, p1, p2, u1)
    return HarnackBound(v, Case.I, 1.0, True, "lower", _log_or_neg_inf(v))


@dataclass(frozen=True)
class PmeParams:
    """Porous medium exponent ``M`` in dimension ``d``."""

    M: float
    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"d={self.d}: need an integer dimension >= 1")
        if not self.M > self.M0:
            raise ParameterError(
                f"M={self.M}: need M > M0(d) = max(0, 1 - 2/d) = {self.M0:g} for d={self.d}"
            )

    @property
    def M0(self) -> float:
        return max(0.0, 1.0 - 2.0 / self.d)

    @property
    def k(self) -> float:
        return 1.0 / (self.M - 1.0 + 2.0 / self.d)

    @property
    def mu(self) -> float:
        return (self.M - 1.0) * self.k

    @property
    def delta(self) -> float:
        return 1.0 - self.mu


def default_K(p: float, d: int) -> float:
    """Default p-diffusion constant ``d / (d (p-2) + p)``; equals ``d/2`` at ``p = 2``."""
    return d / (d * (p - 2.0) + p)


@dataclass(frozen=True)
class PdiffParams:
    """p-diffusion exponent ``p`` in dimension ``d`` with estimate constant ``K``."""

    p: float
    d: int
    K: float | None = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"d={self.d}: need an integer dimension >= 1")
        pc = 2.0 * self.d / (self.d + 1.0)
        if not self.p > pc or not math.isfinite(self.p):
            raise ParameterError(
                f"p={self.p}: need 2d/(d+1) = {pc:g} < p < inf; the subcritical range "
                "1 < p <= 2d/(d+1) admits no Harnack inequality"
            )
        if self.K is None:
            object.__setattr__(self, "K", default_K(self.p, self.d))
        if not self.K > 0:
            raise ParameterError(f"K={self.K}: must be > 0")

    @property
    def gamma(self) -> float:
        return (self.p - 2.0) / (self.p - 1.0)

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def xi(self) -> float:
        q = self.q
        return (1.0 / q) * (1.0 / self.p) ** (q - 1.0)

    @property
    def delta(self) -> float:
        return (2.0 - self.p) * self.K + 1.0

    def I(self, t1: float, t2: float) -> float:
        """``(t2^delta - t1^delta)/delta``, or ``log(t2/t1)`` when ``delta = 0``."""
        return integral_of_power(self.delta - 1.0, t1, t2)


def _bracket(power: float, u1: float, D: float) -> float:
    """``u1**power - D`` with the ``1 + O(power)`` part kept exact."""
    return 1.0 + (math.expm1(power * math.log(u1)) - D)


def _log_bracket(power: float, u1: float, D: float) -> float:
    return math.log1p(math.expm1(power * math.log(u1)) - D)


def _model_bound(mu_exp: float, power: float, u1: float, D: float, t1: float, t2: float) -> HarnackBound:
    """Shared tail of the PME / p-diffusion bounds.

    For ``power > 0``: ``u2^power >= (t1/t2)^mu_exp (u1^power - D)``.
    For ``power < 0``: ``u2^power <= (t1/t2)^mu_exp (u1^power - D)``, reported
    through its reciprocal as a lower bound on ``u2^(-power)``.
    """
    B = _bracket(power, u1, D)
    logratio = math.log(t1 / t2)
    if power > 0:
        if B > 0:
            lv = mu_exp * logratio + _log_bracket(power, u1, D)
            return HarnackBound(math.exp(lv), Case.III, power, True, "lower", lv)
        return HarnackBound(math.exp(mu_exp * logratio) * B, Case.III, power, False, "lower", None)
    if B > 0:
        lv = -mu_exp * logratio - _log_bracket(power, u1, D)
        return HarnackBound(math.exp(lv), Case.III, -power, True, "lower", lv)
    # reciprocal undefined: keep the (unsatisfiable) power form and flag it
    return HarnackBound(math.exp(mu_exp * logratio) * B, Case.III, power, False, "upper", None)


def pme_bound(params: PmeParams, p1, p2, u1: float) -> HarnackBound:
    """Harnack bound for positive solutions of ``u_t = Laplace(u^M)``.

    ``M > 1``: lower bound on ``u(x2,t2)^(M-1)``.  ``M = 1``: the heat bound.
    ``M0(d) < M < 1``: lower bound on ``u(x2,t2)^(1-M)``.
    """
    p1, p2, dist = _pair(p1, p2)
    if not u1 > 0:
        raise DomainError(f"u1={u1}: must be > 0")
    M = params.M
    if M == 1.0:
        return _heat_record(params.d, p1, p2, u1)
    I = integral_of_power(-params.mu, p1.t, p2.t)
    D = (M - 1.0) / M * dist**2 / (4.0 * I) * p1.t ** (-params.mu)
    return _model_bound(params.mu, M - 1.0, u1, D, p1.t, p2.t)


def pdiff_bound(params: PdiffParams, p1, p2, u1: float) -> HarnackBound:
    """Harnack bound for positive solutions of ``u_t = div(|grad u|^{p-2} grad u)``.

    ``p > 2``: lower bound on ``u(x2,t2)^gamma``.  ``p = 2``: the heat bound.
    ``2d/(d+1) < p < 2``: lower bound on ``u(x2,t2)^(-gamma)``.
    """
    p1, p2, dist = _pair(p1, p2)
    if not u1 > 0:
        raise DomainError(f"u1={u1}: must be > 0")
    if params.p == 2.0:
        return _heat_record(params.d, p1, p2, u1)
    g, q, K = params.gamma, params.q, params.K
    I = params.I(p1.t, p2.t)
    J = dist**q * I ** (1.0 - q) if dist > 0 else 0.0
    D = g * params.xi * J * p1.t ** (-g * K)
    return _model_bound(g * K, g, u1, D, p1.t, p2.t)
