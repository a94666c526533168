"""One-dimensional quadrature with error estimates.

Two independent rules are provided:

* globally adaptive Gauss-Kronrod (10-point Gauss nested in 21-point
  Kronrod), the default;
* tanh-sinh (double-exponential) with step halving, used as an
  independent check of the first.

Both report the difference between two successive refinement levels as the
error estimate, plus a small roundoff floor. Integrands must accept and
return numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .exceptions import DomainError, QuadratureError

__all__ = [
    "QuadratureResult",
    "GaussianDecayHint",
    "integrate_interval",
    "integrate_line",
    "integrate_halfline",
]

DEFAULT_MAX_EVALS = 10**6
DEFAULT_EPSREL = 1e-13
TAIL_FRACTION = 1e-15

_EPS = np.finfo(float).eps

# 21-point Kronrod nodes on [-1, 1]; the odd entries are the 10 Gauss nodes.
_XK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
    -0.148874338981631210884826001129720,
    -0.294392862701460198131126603103866,
    -0.433395394129247190799265943165784,
    -0.562757134668604683339000099272694,
    -0.679409568299024406234327365114874,
    -0.780817726586416897063717578345042,
    -0.865063366688984510732096688423493,
    -0.930157491355708226001207180059508,
    -0.973906528517171720077964012084452,
    -0.995657163025808080735527280689003,
])
_WK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
    0.147739104901338491374841515972068,
    0.142775938577060080797094273138717,
    0.134709217311473325928054001771707,
    0.123491976262065851077958109831074,
    0.109387158802297641899210590325805,
    0.093125454583697605535065465083366,
    0.075039674810919952767043140916190,
    0.054755896574351996031381300244580,
    0.032558162307964727478818972459390,
    0.011694638867371874278064396062192,
])
_WG_FULL = np.zeros(21)
_WG_FULL[1::2] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
    0.295524224714752870173892994651338,
    0.269266719309996355091226921569469,
    0.219086362515982043995534934228163,
    0.149451349150580593145776339657697,
    0.066671344308688137593568809893332,
]


@dataclass(frozen=True)
class QuadratureResult:
    """Value of an integral with an absolute error estimate."""

    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "error_estimate", float(self.error_estimate))
        object.__setattr__(self, "evaluations", int(self.evaluations))
        if not self.error_estimate >= 0:
            raise DomainError("error_estimate must be non-negative")
        if self.evaluations < 1:
            raise DomainError("evaluations must be >= 1")

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
        )

    def scaled(self, factor: float) -> "QuadratureResult":
        return QuadratureResult(
            factor * self.value, abs(factor) * self.error_estimate, self.evaluations
        )


class GaussianDecayHint(NamedTuple):
    """``|f(u)| <= A exp(-((u - center) / width)**2)`` away from a bounded set."""

    center: float
    width: float


def _gk_panels(f, a, b):
    """Apply G10/K21 on each panel ``[a[i], b[i]]``.

    Returns Kronrod sums, |K - G| and Kronrod sums of |f|.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _XK[None, :]
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError("integrand returned non-finite values")
    kron = half * (fx @ _WK)
    gauss = half * (fx @ _WG_FULL)
    absk = np.abs(half) * (np.abs(fx) @ _WK)
    return kron, np.abs(kron - gauss), absk


def integrate_interval(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    breakpoints=(),
    epsabs: float = 0.0,
    epsrel: float = DEFAULT_EPSREL,
    max_evals: int = DEFAULT_MAX_EVALS,
    initial_panels: int = 4,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    The relative tolerance is measured against the integral of ``|f|`` so
    that integrals which cancel to zero still terminate.

    Raises
    ------
    QuadratureError
        If the tolerance is not met within ``max_evals`` evaluations; the
        best estimate is attached to the exception.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise DomainError("interval endpoints must be finite")
    if a == b:
        return QuadratureResult(0.0, 0.0, 1)
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    cuts = sorted({float(a), float(b)} | {float(p) for p in breakpoints if a < p < b})
    edges = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        edges.append(np.linspace(lo, hi, initial_panels + 1))
    lo = np.concatenate([e[:-1] for e in edges])
    hi = np.concatenate([e[1:] for e in edges])

    kron, err, absk = _gk_panels(f, lo, hi)
    evals = 21 * lo.size
    length = b - a
    while True:
        total_abs = absk.sum()
        tol = max(epsabs, epsrel * total_abs)
        total_err = err.sum()
        if total_err <= tol:
            break
        # Bisect every panel whose error exceeds its share of the tolerance.
        share = tol * (hi - lo) / length
        bad = err > share
        n_new = 2 * int(bad.sum())
        if evals + 21 * n_new > max_evals:
            best = QuadratureResult(
                sign * float(kron.sum()), float(total_err), max(evals, 1)
            )
            raise QuadratureError(
                f"no convergence after {evals} evaluations "
                f"(error {total_err:.3e} > tolerance {tol:.3e})",
                best,
            )
        blo, bhi = lo[bad], hi[bad]
        bmid = 0.5 * (blo + bhi)
        nlo = np.concatenate([blo, bmid])
        nhi = np.concatenate([bmid, bhi])
        nk, ne, na = _gk_panels(f, nlo, nhi)
        evals += 21 * nlo.size
        keep = ~bad
        lo = np.concatenate([lo[keep], nlo])
        hi = np.concatenate([hi[keep], nhi])
        kron = np.concatenate([kron[keep], nk])
        err = np.concatenate([err[keep], ne])
        absk = np.concatenate([absk[keep], na])
        order = np.argsort(lo, kind="stable")
        lo, hi, kron, err, absk = lo[order], hi[order], kron[order], err[order], absk[order]

    value = float(kron.sum())
    floor = 50.0 * _EPS * float(absk.sum())
    return QuadratureResult(sign * value, float(err.sum()) + floor, evals)


def _tanh_sinh_interval(f, a, b, *, epsabs, epsrel, max_evals, max_level=12):
    """Double-exponential quadrature on a finite interval with step halving."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    tmax = 3.5

    def nodes(h, odd_only):
        k = np.arange(1, int(np.ceil(tmax / h)) + 1)
        if odd_only:
            k = k[k % 2 == 1]
        t = k * h
        s = 0.5 * np.pi * np.sinh(t)
        # Distance to the endpoint, computed without cancellation.
        dist = 2.0 / (np.exp(2.0 * s) + 1.0)
        w = 0.5 * np.pi * np.cosh(t) / np.cosh(s) ** 2
        return dist, w

    def rule_sum(dist, w):
        xp = b - half * dist
        xm = a + half * dist
        fx = np.asarray(f(np.concatenate([xm, xp])), dtype=float)
        if not np.all(np.isfinite(fx)):
            raise QuadratureError("integrand returned non-finite values")
        n = dist.size
        s = half * np.sum(w * (fx[:n] + fx[n:]))
        sa = half * np.sum(w * (np.abs(fx[:n]) + np.abs(fx[n:])))
        return s, sa, 2 * n

    h = 1.0
    f0 = float(np.asarray(f(np.array([mid])), dtype=float)[0])
    center = half * 0.5 * np.pi * f0
    d, w = nodes(h, odd_only=False)
    s, sa, n = rule_sum(d, w)
    acc, acc_abs = center + s, abs(center) + sa
    evals = n + 1
    estimate = h * acc
    err = np.inf
    for _ in range(max_level):
        h *= 0.5
        d, w = nodes(h, odd_only=True)
        s, sa, n = rule_sum(d, w)
        acc += s
        acc_abs += sa
        evals += n
        new = h * acc
        err = abs(new - estimate)
        estimate = new
        tol = max(epsabs, epsrel * h * acc_abs)
        if err <= tol:
            return QuadratureResult(float(estimate), float(err) + 50 * _EPS * h * acc_abs, evals)
        if evals > max_evals:
            break
    raise QuadratureError(
        f"tanh-sinh did not converge (error {err:.3e})",
        QuadratureResult(float(estimate), float(err), evals),
    )


def _integrate_pieces(f, cuts, rule, epsabs, epsrel, max_evals):
    total = None
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if rule == "gauss-kronrod":
            part = integrate_interval(
                f, lo, hi, epsabs=epsabs, epsrel=epsrel, max_evals=max_evals
            )
        elif rule == "tanh-sinh":
            part = _tanh_sinh_interval(
                f, lo, hi, epsabs=epsabs, epsrel=epsrel, max_evals=max_evals
            )
        else:
            raise DomainError(f"unknown quadrature rule {rule!r}")
        total = part if total is None else total + part
    return total


def integrate_line(
    f: Callable[[np.ndarray], np.ndarray],
    decay: GaussianDecayHint,
    *,
    rule: str = "gauss-kronrod",
    epsabs: float = 0.0,
    epsrel: float = DEFAULT_EPSREL,
    max_evals: int = DEFAULT_MAX_EVALS,
    breakpoints=(0.0,),
) -> QuadratureResult:
    """Integrate ``f`` over the real line.

    The line is truncated to ``center +- K * width``; ``K`` grows until the
    Gaussian tail bound, anchored at the value of ``|f|`` on the cut, is
    below ``1e-15`` of the integral of ``|f|``. The window is split at each
    breakpoint (by default ``u = 0``, where ``exp(-m|u|)`` has a kink).

    Parameters
    ----------
    f : callable
        Vectorized integrand.
    decay : GaussianDecayHint
        Center and width of a Gaussian envelope of ``f``.
    rule : {"gauss-kronrod", "tanh-sinh"}
        Quadrature rule used on each piece.
    """
    center, width = float(decay.center), float(decay.width)
    if not (np.isfinite(center) and width > 0 and np.isfinite(width)):
        raise DomainError("decay hint needs a finite center and positive width")
    k = 7.0
    evals = 0
    while True:
        lo, hi = center - k * width, center + k * width
        cuts = sorted({lo, hi} | {float(p) for p in breakpoints if lo < p < hi})
        res = _integrate_pieces(f, cuts, rule, epsabs, epsrel, max_evals - evals)
        evals += res.evaluations
        edge = np.abs(np.asarray(f(np.array([lo, hi])), dtype=float))
        tail = float(edge.sum()) * width / (2.0 * k)
        scale = max(abs(res.value), res.error_estimate, np.finfo(float).tiny)
        if tail <= TAIL_FRACTION * scale or tail == 0.0:
            return QuadratureResult(res.value, res.error_estimate + tail, evals + 2)
        k += 2.0
        if evals >= max_evals or k > 40:
            raise QuadratureError("tail did not decay as hinted", res)


def integrate_halfline(
    f: Callable[[np.ndarray], np.ndarray],
    exp_rate: float,
    *,
    rule: str = "gauss-kronrod",
    epsabs: float = 0.0,
    epsrel: float = DEFAULT_EPSREL,
    max_evals: int = DEFAULT_MAX_EVALS,
) -> QuadratureResult:
    """Integrate ``f`` over ``[0, inf)`` for ``|f(u)| <= A exp(-exp_rate u)``.

    The cutoff ``U`` starts at ``40 / exp_rate`` and grows until
    ``|f(U)| / exp_rate`` falls below ``1e-15`` of the integral.
    """
    if not (exp_rate > 0 and np.isfinite(exp_rate)):
        raise DomainError("exp_rate must be positive and finite")
    upper = 40.0 / exp_rate
    evals = 0
    for _ in range(20):
        res = _integrate_pieces(f, [0.0, upper], rule, epsabs, epsrel, max_evals - evals)
        evals += res.evaluations
        tail = float(abs(np.asarray(f(np.array([upper])), dtype=float)[0])) / exp_rate
        scale = max(abs(res.value), res.error_estimate, np.finfo(float).tiny)
        if tail <= TAIL_FRACTION * scale or tail == 0.0:
            return QuadratureResult(res.value, res.error_estimate + tail, evals + 1)
        upper *= 1.5
        if evals >= max_evals:
            break
    raise QuadratureError("tail did not decay at the stated rate", res)
