"""Heat, equilibrium and finite stochastic-time kernels for the free field.

Conventions: ``C = (-Laplacian + m^2)^{-1}`` is the equilibrium covariance and
``D_lambda = (1 - exp(-lambda C^{-1})) C`` the covariance of the field at
stochastic time ``lambda``. In one dimension

    D_lambda(t) = C(t) - exp(-lambda m^2) (4 pi lambda)^{-1/2} (2m)^{-1} W(t),

with the smeared kernel

    W_{lambda,m}(t) = int du exp(-(t - u)^2 / (4 lambda) - m |u|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx

from .exceptions import DomainError
from .numerics import GaussianDecayHint, integrate_line

__all__ = [
    "ModelParams",
    "KernelValue",
    "heat_kernel_1d",
    "equilibrium_cov_1d",
    "dlambda_multiplier",
    "w_kernel",
    "w_kernel_closed",
    "d_lambda_position_1d",
    "d_lambda_fourier_1d",
]


@dataclass(frozen=True)
class ModelParams:
    """Stochastic time ``lam``, mass and space-time dimension."""

    lam: float
    mass: float
    dim: int = 1

    def __post_init__(self):
        for name in ("lam", "mass"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and > 0, got {v!r}")
            object.__setattr__(self, name, float(v))
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim must be an integer >= 1, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def lambda_eff(self) -> float:
        """The scale-free combination ``lam * mass**2``."""
        return self.lam * self.mass**2

    def unit_mass(self) -> "ModelParams":
        """Parameters with the mass scaled out: ``(lam m^2, 1)``."""
        return ModelParams(self.lambda_eff, 1.0, self.dim)


@dataclass(frozen=True)
class KernelValue:
    value: float
    error_estimate: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "error_estimate", float(self.error_estimate))
        if not self.error_estimate >= 0:
            raise DomainError("error_estimate must be non-negative")


def heat_kernel_1d(tau, x):
    """Kernel of ``exp(tau d^2/dx^2)``: ``(4 pi tau)^{-1/2} exp(-x^2 / 4 tau)``."""
    if not np.all(np.asarray(tau) > 0):
        raise DomainError("tau must be > 0")
    x = np.asarray(x, dtype=float)
    return np.exp(-(x**2) / (4.0 * tau)) / np.sqrt(4.0 * np.pi * tau)


def equilibrium_cov_1d(m, t):
    """``C(t) = exp(-m|t|) / 2m`` for ``C = (-d^2/dt^2 + m^2)^{-1}``."""
    if not np.all(np.asarray(m) > 0):
        raise DomainError("mass must be > 0")
    return np.exp(-m * np.abs(np.asarray(t, dtype=float))) / (2.0 * m)


def dlambda_multiplier(params: ModelParams, omega):
    """Fourier multiplier of ``D_lambda`` at squared frequency ``omega``.

    Returns ``(1 - exp(-lam omega)) / omega``.
    """
    omega = np.asarray(omega, dtype=float)
    if not np.all(omega > 0):
        raise DomainError("omega must be > 0")
    return -np.expm1(-params.lam * omega) / omega


def w_kernel(params: ModelParams, t: float, *, rule: str = "gauss-kronrod") -> KernelValue:
    """``W_{lam,m}(t)`` by quadrature; even in ``t``."""
    t = abs(float(t))
    lam, m = params.lam, params.mass

    def integrand(u):
        return np.exp(-((t - u) ** 2) / (4.0 * lam) - m * np.abs(u))

    res = integrate_line(integrand, GaussianDecayHint(t, 2.0 * math.sqrt(lam)), rule=rule)
    return KernelValue(res.value, res.error_estimate)


def w_kernel_closed(params: ModelParams, t):
    """``W_{lam,m}(t)`` via complementary error functions.

    For ``t >= 0``::

        W = sqrt(pi lam) exp(lam m^2) [exp(-m t) erfc((2 lam m - t) / 2 sqrt(lam))
                                      + exp(m t) erfc((2 lam m + t) / 2 sqrt(lam))]

    Each product ``exp(.) * erfc(x)`` is rewritten as ``erfcx(x) exp(-t^2/4lam)``
    when ``x >= 0`` so that neither factor overflows.
    """
    lam, m = params.lam, params.mass
    t = np.abs(np.asarray(t, dtype=float))
    s = 2.0 * math.sqrt(lam)
    x1 = (2.0 * lam * m - t) / s
    x2 = (2.0 * lam * m + t) / s
    gauss = np.exp(-(t**2) / (4.0 * lam))
    with np.errstate(over="ignore", invalid="ignore"):
        first = np.where(
            x1 >= 0,
            erfcx(np.maximum(x1, 0.0)) * gauss,
            np.exp(lam * m * m - m * t) * erfc(np.minimum(x1, 0.0)),
        )
    second = erfcx(x2) * gauss
    out = math.sqrt(math.pi * lam) * (first + second)
    return float(out) if out.ndim == 0 else out


def _smear_coefficient(params: ModelParams) -> float:
    lam, m = params.lam, params.mass
    return math.exp(-lam * m * m) / (math.sqrt(4.0 * math.pi * lam) * 2.0 * m)


def d_lambda_position_1d(
    params: ModelParams, t: float, *, method: str = "quadrature"
) -> KernelValue:
    """Position-space ``D_lambda(t)`` in one dimension.

    ``method`` selects how ``W`` is evaluated: ``"quadrature"`` (with a
    propagated error estimate) or ``"closed"`` (erfc form, error set to a
    roundoff bound).
    """
    if params.dim != 1:
        raise DomainError("d_lambda_position_1d requires dim == 1")
    coef = _smear_coefficient(params)
    c = float(equilibrium_cov_1d(params.mass, t))
    if method == "quadrature":
        w = w_kernel(params, t)
    elif method == "closed":
        wv = w_kernel_closed(params, t)
        w = KernelValue(wv, 16 * np.finfo(float).eps * wv)
    else:
        raise DomainError(f"unknown method {method!r}")
    value = c - coef * w.value
    err = coef * w.error_estimate + 4 * np.finfo(float).eps * abs(c)
    return KernelValue(value, err)


def d_lambda_fourier_1d(params: ModelParams, t: float) -> KernelValue:
    """``D_lambda(t)`` from its Fourier representation.

    ``int dp/2pi cos(pt) (1 - exp(-lam w)) / w`` with ``w = p^2 + m^2``. The
    ``1/w`` part is transformed analytically and the Gaussian part by
    quadrature, so this route never touches ``W``.
    """
    lam, m = params.lam, params.mass
    t = float(t)

    def integrand(p):
        w = p * p + m * m
        return np.cos(p * t) * np.exp(-lam * w) / w / (2.0 * np.pi)

    res = integrate_line(
        integrand, GaussianDecayHint(0.0, 1.0 / math.sqrt(lam)), breakpoints=()
    )
    c = float(equilibrium_cov_1d(m, t))
    return KernelValue(c - res.value, res.error_estimate + 4 * np.finfo(float).eps * abs(c))
