"""Exact solutions with analytic derivatives.

Every solution exposes the same vectorized interface.  Points are arrays of
shape ``(..., d)`` and times broadcast against the leading shape:

    u(x, t), grad(x, t) -> (..., d), ut(x, t), lap(x, t)

These serve as oracles for the bounds, the solvers and the verifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ParameterError


def _prep(x, t, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != d:
        if d == 1:
            x = x[..., None]
        else:
            raise DomainError(f"points must have trailing dimension {d}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("times must be > 0")
    return x, np.broadcast_to(t, x.shape[:-1])


@dataclass(frozen=True, eq=False)
class HeatKernel:
    """``mass * (4 pi t)^{-d/2} exp(-|x + shift|^2 / (4t))``."""

    d: int = 1
    shift: np.ndarray | None = None
    mass: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"d={self.d}: need an integer dimension >= 1")
        shift = np.zeros(self.d) if self.shift is None else np.atleast_1d(np.asarray(self.shift, dtype=float))
        if shift.shape != (self.d,):
            raise ParameterError("shift must have length d")
        object.__setattr__(self, "shift", shift)
        if not self.mass > 0:
            raise ParameterError("mass must be > 0")

    def log_u(self, x, t):
        x, t = _prep(x, t, self.d)
        y = x + self.shift
        return math.log(self.mass) - 0.5 * self.d * np.log(4 * math.pi * t) - np.sum(y * y, axis=-1) / (4 * t)

    def u(self, x, t):
        return np.exp(self.log_u(x, t))

    def grad(self, x, t):
        x, t = _prep(x, t, self.d)
        y = x + self.shift
        return -(self.u(x, t) / (2 * t))[..., None] * y

    def ut(self, x, t):
        x, t = _prep(x, t, self.d)
        y = x + self.shift
        r2 = np.sum(y * y, axis=-1)
        return self.u(x, t) * (r2 / (4 * t * t) - self.d / (2 * t))

    def lap(self, x, t):
        # the heat equation holds exactly: same closed form as ut
        return self.ut(x, t)

    def residual(self, x, t):
        return self.ut(x, t) - self.lap(x, t)

    def evaluate(self, x, t) -> dict:
        return {"u": self.u(x, t), "grad": self.grad(x, t), "ut": self.ut(x, t), "lap": self.lap(x, t)}


def heat_kernel_eval(d: int, shift, x, t) -> dict:
    return HeatKernel(d, shift).evaluate(x, t)


def moser_family(xi: float) -> HeatKernel:
    """The one-dimensional family ``t^{-1/2} exp(-(x + xi)^2 / (4t))``."""
    return HeatKernel(1, [xi], mass=math.sqrt(4 * math.pi))


def log_moser_ratio(xi: float, x0: float) -> float:
    """``log(u_xi(0, 1) / u_xi(x0, 1)) = x0^2/4 + x0 xi / 2``."""
    if not x0 > 0:
        raise DomainError(f"x0={x0}: must be > 0")
    return x0 * x0 / 4.0 + x0 * xi / 2.0


def moser_ratio(xi: float, x0: float) -> float:
    """``u_xi(0, 1) / u_xi(x0, 1)`` for the family of :func:`moser_family`.

    The ratio tends to 0 as ``xi -> -inf``, so no time-independent constant
    can bound ``u(x0, 1)`` by ``u(0, 1)``.
    """
    return math.exp(log_moser_ratio(xi, x0))


@dataclass(frozen=True)
class Barenblatt:
    """Source-type solution of ``u_t = Laplace(u^M)`` for ``M > 1``.

    ``u = t^{-alpha} (C0 - kappa |x|^2 t^{-2 alpha/d})_+^{1/(M-1)}`` with
    ``alpha = d/(d(M-1)+2)`` and ``kappa = alpha (M-1) / (2 d M)``.
    """

    d: int = 1
    M: float = 2.0
    C0: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"d={self.d}: need an integer dimension >= 1")
        if not self.M > 1:
            raise ParameterError(f"M={self.M}: the source-type profile needs M > 1")
        if not self.C0 > 0:
            raise ParameterError("C0 must be > 0")

    @property
    def alpha(self) -> float:
        return self.d / (self.d * (self.M - 1.0) + 2.0)

    @property
    def beta(self) -> float:
        return self.alpha / self.d

    @property
    def kappa(self) -> float:
        return self.alpha * (self.M - 1.0) / (2.0 * self.d * self.M)

    @property
    def k(self) -> float:
        """Constant of the pressure inequality; equals ``alpha``."""
        return 1.0 / (self.M - 1.0 + 2.0 / self.d)

    def support_radius(self, t):
        return np.sqrt(self.C0 / self.kappa) * np.asarray(t, dtype=float) ** self.beta

    def _phi(self, x, t):
        r2 = np.sum(x * x, axis=-1)
        return self.C0 - self.kappa * r2 * t ** (-2 * self.beta), r2

    def inside(self, x, t):
        x, t = _prep(x, t, self.d)
        return self._phi(x, t)[0] > 0

    def u(self, x, t):
        x, t = _prep(x, t, self.d)
        phi, _ = self._phi(x, t)
        return t ** (-self.alpha) * np.maximum(phi, 0.0) ** (1.0 / (self.M - 1.0))

    def grad(self, x, t):
        x, t = _prep(x, t, self.d)
        phi, _ = self._phi(x, t)
        s = 1.0 / (self.M - 1.0)
        pos = np.maximum(phi, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(phi > 0, t ** (-self.alpha) * s * pos ** (s - 1.0), 0.0)
        return (fac * (-2 * self.kappa * t ** (-2 * self.beta)))[..., None] * x

    def ut(self, x, t):
        x, t = _prep(x, t, self.d)
        phi, r2 = self._phi(x, t)
        s = 1.0 / (self.M - 1.0)
        pos = np.maximum(phi, 0.0)
        phi_t = 2 * self.beta * self.kappa * r2 * t ** (-2 * self.beta - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = -self.alpha * t ** (-self.alpha - 1) * pos**s + np.where(
                phi > 0, t ** (-self.alpha) * s * pos ** (s - 1.0) * phi_t, 0.0
            )
        return np.where(phi > 0, val, 0.0)

    def lap_power(self, x, t):
        """``Laplace(u^M)`` inside the support (0 outside)."""
        x, t = _prep(x, t, self.d)
        phi, r2 = self._phi(x, t)
        sig = self.M / (self.M - 1.0)
        c = t ** (-2 * self.beta)
        grad_sq = 4 * self.kappa**2 * c * c * r2
        lap_phi = -2 * self.d * self.kappa * c
        pos = np.where(phi > 0, phi, 1.0)
        val = t ** (-self.alpha * self.M) * (
            sig * pos ** (sig - 1) * lap_phi + sig * (sig - 1) * pos ** (sig - 2) * grad_sq
        )
        return np.where(phi > 0, val, 0.0)

    def residual(self, x, t):
        return self.ut(x, t) - self.lap_power(x, t)

    def pressure(self, x, t):
        """``f = (M/(M-1)) u^{M-1}``."""
        x, t = _prep(x, t, self.d)
        phi, _ = self._phi(x, t)
        return self.M / (self.M - 1.0) * t ** (-self.alpha * (self.M - 1.0)) * np.maximum(phi, 0.0)

    def pressure_lap(self, x, t):
        """``Laplace f`` inside the support; the closed form is ``-k/t``."""
        x, t = _prep(x, t, self.d)
        phi, _ = self._phi(x, t)
        val = (
            self.M / (self.M - 1.0)
            * t ** (-self.alpha * (self.M - 1.0))
            * (-2 * self.d * self.kappa * t ** (-2 * self.beta))
        )
        return np.where(phi > 0, val, 0.0)

    def evaluate(self, x, t) -> dict:
        return {"u": self.u(x, t), "pressure_f": self.pressure(x, t), "lap_f": self.pressure_lap(x, t)}


def barenblatt_eval(d: int, M: float, C0: float, x, t) -> dict:
    return Barenblatt(d, M, C0).evaluate(x, t)


@dataclass(frozen=True)
class SeparableProfile:
    """Spatially constant ``u = c t^exponent``.

    With ``exponent = 1/(2-p)`` this is the separable profile attaining
    equality in the Benilan-Crandall inequality; with ``exponent = -d/2`` it
    attains equality in the Li-Yau estimate.  It solves the ODE ``u' =
    exponent * u / t``, not a diffusion equation.
    """

    exponent: float
    c: float = 1.0
    d: int = 1

    def u(self, x, t):
        x, t = _prep(x, t, self.d)
        return self.c * t**self.exponent

    def grad(self, x, t):
        x, t = _prep(x, t, self.d)
        return np.zeros(x.shape)

    def ut(self, x, t):
        x, t = _prep(x, t, self.d)
        return self.exponent * self.c * t ** (self.exponent - 1.0)

    def lap(self, x, t):
        x, t = _prep(x, t, self.d)
        return np.zeros(t.shape)


def default_box_half_width(t_end: float) -> float:
    """``6 sqrt(t_end)``: keeps Gaussian tails at the box edge below ~1e-4 of the peak."""
    return 6.0 * math.sqrt(t_end)


@dataclass(frozen=True)
class PBarenblatt:
    """Source-type solution of ``u_t = div(|grad u|^{p-2} grad u)`` for ``p > 2``.

    ``u = t^{-a} (C0 - c (|x| t^{-b})^{p/(p-1)})_+^{(p-1)/(p-2)}`` with
    ``b = 1/(d(p-2)+p)``, ``a = d b`` and ``c = ((p-2)/p) b^{1/(p-1)}``.
    Its pressure ``f = u^gamma / gamma`` has a spatially constant flux
    divergence ``-a/t`` inside the support.
    """

    d: int = 1
    p: float = 3.0
    C0: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"d={self.d}: need an integer dimension >= 1")
        if not self.p > 2:
            raise ParameterError(f"p={self.p}: the source-type profile here needs p > 2")
        if not self.C0 > 0:
            raise ParameterError("C0 must be > 0")

    @property
    def b(self) -> float:
        return 1.0 / (self.d * (self.p - 2.0) + self.p)

    @property
    def a(self) -> float:
        return self.d * self.b

    @property
    def c(self) -> float:
        return (self.p - 2.0) / self.p * self.b ** (1.0 / (self.p - 1.0))

    @property
    def gamma(self) -> float:
        return (self.p - 2.0) / (self.p - 1.0)

    def _phi(self, x, t):
        q = self.p / (self.p - 1.0)
        rho = np.linalg.norm(x, axis=-1)
        return self.C0 - self.c * (rho * t ** (-self.b)) ** q

    def u(self, x, t):
        x, t = _prep(x, t, self.d)
        phi = self._phi(x, t)
        return t ** (-self.a) * np.maximum(phi, 0.0) ** (1.0 / self.gamma)

    def pressure(self, x, t):
        x, t = _prep(x, t, self.d)
        return t ** (-self.a * self.gamma) * np.maximum(self._phi(x, t), 0.0) / self.gamma

    def pressure_flux_div(self, x, t):
        """``div(|grad f|^{p-2} grad f)`` inside the support (0 outside)."""
        x, t = _prep(x, t, self.d)
        return np.where(self._phi(x, t) > 0, -self.a / t, 0.0)
