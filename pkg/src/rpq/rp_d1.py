"""Reflection positivity of ``D_lambda`` in one dimension.

Test functions are finite combinations of Dirac atoms at non-negative times.
Time reflection sends an atom at ``t`` to ``-t``, so the RP form of a comb
``f = sum_a w_a delta_{t_a}`` under a translation-invariant kernel ``K`` is

    <f, theta K f> = sum_{a,b} w_a w_b K(t_a + t_b).

The combs ``exp(ms) delta_s - exp(mt) delta_t`` are null for the equilibrium
covariance. Under ``D_lambda`` their form equals
``-exp(-lam m^2) (4 pi lam)^{-1/2} F(t) / m``, so any ``F(t) > 0`` is a
violation.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import DomainError
from .kernels import (
    KernelValue,
    ModelParams,
    d_lambda_position_1d,
    equilibrium_cov_1d,
    w_kernel,
    w_kernel_closed,
)
from .numerics import GaussianDecayHint, integrate_line

__all__ = [
    "DeltaComb",
    "SeriesCoefficients",
    "Verdict",
    "RPReport",
    "null_comb",
    "rp_form_equilibrium",
    "rp_form_dlambda",
    "f_of_t",
    "f_second_derivative_at_zero",
    "series_coeffs",
    "scan_f",
    "gram_matrix",
    "TOLERANCE_FACTOR",
]

# A violation must clear zero by this multiple of the propagated error.
TOLERANCE_FACTOR = 10.0

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class DeltaComb:
    """Weighted Dirac atoms at strictly increasing non-negative times."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(t), float(w)) for t, w in self.atoms)
        if not atoms:
            raise DomainError("a comb needs at least one atom")
        times = [t for t, _ in atoms]
        if any(not math.isfinite(t) or t < 0 for t in times):
            raise DomainError("atom times must be finite and >= 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("atom times must be strictly increasing")
        if all(w == 0 for _, w in atoms):
            raise DomainError("weights must not all vanish")
        object.__setattr__(self, "atoms", atoms)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    @classmethod
    def combine(cls, combs: Sequence["DeltaComb"], coeffs) -> "DeltaComb":
        """``sum_i coeffs[i] * combs[i]`` with atoms at equal times merged."""
        acc = {}
        for comb, c in zip(combs, coeffs):
            for t, w in comb.atoms:
                acc[t] = acc.get(t, 0.0) + float(c) * w
        return cls(tuple(sorted(acc.items())))

    def to_dict(self):
        return {"atoms": [[t, w] for t, w in self.atoms]}


@dataclass(frozen=True)
class SeriesCoefficients:
    """Small-``t`` expansion data of ``F`` at unit mass.

    ``leading`` is the coefficient of ``t^2/2``; ``wpp0`` is ``W''(0)``.
    """

    w0: float
    c_lambda: float
    wpp0: float
    leading: float
    error_estimate: float = 0.0


class Verdict(str, enum.Enum):
    NO_VIOLATION_FOUND = "NO_VIOLATION_FOUND"
    RP_VIOLATED = "RP_VIOLATED"


@dataclass
class RPReport:
    """Outcome of an RP test.

    ``form_value`` is the RP form of ``witness`` (or of the best candidate
    when no violation was found).
    """

    form_value: float
    gram_spectrum: tuple
    verdict: Verdict
    witness: Optional[DeltaComb]
    tolerance_used: float
    witness_point: Optional[float] = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.verdict is Verdict.RP_VIOLATED:
            spectral = bool(self.gram_spectrum) and min(self.gram_spectrum) < -self.tolerance_used
            if not (self.form_value < -self.tolerance_used or spectral):
                raise DomainError("RP_VIOLATED needs a witness below -tolerance_used")

    def to_dict(self):
        return {
            "form_value": self.form_value,
            "gram_spectrum": list(self.gram_spectrum),
            "verdict": self.verdict.value,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "witness_point": self.witness_point,
            "tolerance_used": self.tolerance_used,
            "notes": list(self.notes),
        }


def null_comb(m: float, s: float, t: float) -> DeltaComb:
    """``exp(ms) delta_s - exp(mt) delta_t``, null for the equilibrium form."""
    if not m > 0:
        raise DomainError("mass must be > 0")
    if not (0 <= s < t):
        raise DomainError("need 0 <= s < t")
    return DeltaComb(((s, math.exp(m * s)), (t, -math.exp(m * t))))


def rp_form_equilibrium(f: DeltaComb, m: float) -> float:
    """``<f, theta C f> = (sum_a w_a exp(-m t_a))^2 / 2m``."""
    if not m > 0:
        raise DomainError("mass must be > 0")
    v = float(np.sum(f.weights * np.exp(-m * f.times)))
    return v * v / (2.0 * m)


def _kernel_table(args, params, method):
    """``D_lambda`` at each distinct argument, as value and error arrays."""
    uniq = np.unique(args)
    vals = np.empty(uniq.size)
    errs = np.empty(uniq.size)
    for i, a in enumerate(uniq):
        kv = d_lambda_position_1d(params, float(a), method=method)
        vals[i], errs[i] = kv.value, kv.error_estimate
    idx = np.searchsorted(uniq, args)
    return vals[idx], errs[idx]


def rp_form_dlambda(
    f: DeltaComb, params: ModelParams, *, method: str = "quadrature"
) -> KernelValue:
    """``<f, theta D_lambda f> = sum_ab w_a w_b D_lambda(t_a + t_b)``."""
    if params.dim != 1:
        raise DomainError("rp_form_dlambda requires dim == 1")
    t, w = f.times, f.weights
    args = t[:, None] + t[None, :]
    ww = w[:, None] * w[None, :]
    vals, errs = _kernel_table(args.ravel(), params, method)
    terms = ww.ravel() * vals
    value = float(np.sum(terms))
    err = float(np.sum(np.abs(ww.ravel()) * errs) + 4 * _EPS * np.sum(np.abs(terms)))
    return KernelValue(value, err)


def _w_eval(params, method):
    if method == "quadrature":
        return lambda t: w_kernel(params, t)
    if method == "closed":
        def closed(t):
            v = w_kernel_closed(params, t)
            return KernelValue(v, 16 * _EPS * v)
        return closed
    raise DomainError(f"unknown method {method!r}")


def _f_direct(params: ModelParams, t: float, method: str) -> KernelValue:
    # Valid for any real t: W is extended evenly to negative arguments.
    m = params.mass
    w = _w_eval(params, method)
    w0 = w(0.0)
    w1 = w(t)
    w2 = w(2.0 * t)
    e1, e2 = math.exp(m * t), math.exp(2.0 * m * t)
    a = 0.5 * (w0.value + e2 * w2.value)
    b = e1 * w1.value
    err = (
        0.5 * w0.error_estimate
        + 0.5 * e2 * w2.error_estimate
        + e1 * w1.error_estimate
        + 4 * _EPS * (abs(a) + abs(b))
    )
    return KernelValue(a - b, err)


def f_of_t(params: ModelParams, t: float, *, method: str = "quadrature") -> KernelValue:
    """``F_{lam,m}(t) = (W(0) + exp(2mt) W(2t)) / 2 - exp(mt) W(t)``.

    Evaluated at unit mass through ``F_{lam,m}(t) = F_{lam m^2,1}(mt) / m``.
    """
    if not t >= 0:
        raise DomainError("t must be >= 0")
    if t == 0:
        return KernelValue(0.0, 0.0)
    m = params.mass
    fv = _f_direct(params.unit_mass(), m * t, method)
    return KernelValue(fv.value / m, fv.error_estimate / m)


def f_second_derivative_at_zero(
    params: ModelParams, h: float = 1e-3, *, method: str = "quadrature"
) -> KernelValue:
    """``F''(0)`` from central differences with one Richardson level.

    ``F(-h)`` uses the even extension of ``W``. The error estimate is the
    change produced by the Richardson step.
    """
    def second_diff(step):
        fp = _f_direct(params, step, method)
        fm = _f_direct(params, -step, method)
        return (fp.value + fm.value) / step**2

    d1 = second_diff(h)
    d2 = second_diff(0.5 * h)
    rich = (4.0 * d2 - d1) / 3.0
    return KernelValue(rich, abs(rich - d2))


def series_coeffs(lambda_eff: float) -> SeriesCoefficients:
    """Second-order Taylor data of ``F`` at unit mass and ``lam = lambda_eff``.

    ``c = (4 lam^2)^{-1} int u^2 exp(-u^2/4lam - |u|) du`` and
    ``leading = c + (1 - 1/(2 lam)) W(0)``.
    """
    lam = float(lambda_eff)
    if not (math.isfinite(lam) and lam > 0):
        raise DomainError("lambda_eff must be finite and > 0")
    hint = GaussianDecayHint(0.0, 2.0 * math.sqrt(lam))
    w0 = integrate_line(lambda u: np.exp(-(u * u) / (4 * lam) - np.abs(u)), hint)
    moment = integrate_line(lambda u: u * u * np.exp(-(u * u) / (4 * lam) - np.abs(u)), hint)
    c = moment.value / (4 * lam * lam)
    c_err = moment.error_estimate / (4 * lam * lam)
    wpp0 = c - w0.value / (2 * lam)
    coef = 1.0 - 1.0 / (2 * lam)
    leading = c + coef * w0.value
    err = c_err + abs(coef) * w0.error_estimate + 4 * _EPS * (abs(c) + abs(coef * w0.value))
    return SeriesCoefficients(w0.value, c, wpp0, leading, float(err))


def threshold_notes(params: ModelParams) -> list:
    x = params.lambda_eff
    if x < 0.5:
        return ["lam*m^2 < 1/2: exploratory region, no failure is proven and "
                "absence of a witness proves nothing"]
    if x == 0.5:
        return ["lam*m^2 = 1/2: boundary case, leading coefficient reduces to c_lambda"]
    return []


def scan_f(
    params: ModelParams,
    t_grid,
    *,
    method: str = "quadrature",
    workers: int = 1,
):
    """Evaluate ``F`` on a grid and decide whether RP is violated.

    Returns ``(rows, report)`` with ``rows`` a list of ``(t, F, error)``.
    A point witnesses a violation when ``F(t) > 10 * error(t)``; the witness
    is the null comb at the largest such ``F``.
    """
    grid = [float(t) for t in t_grid]
    if any(t < 0 for t in grid):
        raise DomainError("grid values must be >= 0")

    def one(t):
        return f_of_t(params, t, method=method)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            values = list(ex.map(one, grid))
    else:
        values = [one(t) for t in grid]
    rows = [(t, v.value, v.error_estimate) for t, v in zip(grid, values)]

    m, lam = params.mass, params.lam
    to_form = math.exp(-lam * m * m) / math.sqrt(4 * math.pi * lam) / m
    hits = [r for r in rows if r[0] > 0 and r[1] > TOLERANCE_FACTOR * r[2]]
    notes = threshold_notes(params)
    if hits:
        t_star, f_star, e_star = max(hits, key=lambda r: r[1])
        report = RPReport(
            form_value=-to_form * f_star,
            gram_spectrum=(),
            verdict=Verdict.RP_VIOLATED,
            witness=null_comb(m, 0.0, t_star),
            tolerance_used=TOLERANCE_FACTOR * to_form * e_star,
            witness_point=t_star,
            notes=notes,
        )
    else:
        t_star, f_star, e_star = max(rows, key=lambda r: r[1])
        report = RPReport(
            form_value=-to_form * f_star,
            gram_spectrum=(),
            verdict=Verdict.NO_VIOLATION_FOUND,
            witness=None,
            tolerance_used=TOLERANCE_FACTOR * to_form * max(r[2] for r in rows),
            witness_point=None,
            notes=notes + ["no witness found on this grid; this is not a proof of RP"],
        )
    return rows, report


def gram_matrix(
    family: Sequence[DeltaComb],
    params: ModelParams,
    *,
    kernel: str = "dlambda",
    method: str = "quadrature",
):
    """Gram matrix ``M_ij = <theta f_i, K f_j>`` and its spectrum.

    ``kernel`` is ``"dlambda"`` for ``D_lambda`` or ``"equilibrium"`` for
    ``C`` (the ``lam -> inf`` limit). Returns ``(M, report)``; the verdict is
    a violation iff the smallest eigenvalue is below ``-10 ||E||_F``, where
    ``E`` bounds the entrywise error.
    """
    family = list(family)
    if not family:
        raise DomainError("family must be non-empty")
    if params.dim != 1:
        raise DomainError("gram_matrix requires dim == 1")
    n = len(family)
    times = [c.times for c in family]
    weights = [c.weights for c in family]
    all_args = np.concatenate(
        [(ti[:, None] + tj[None, :]).ravel() for ti in times for tj in times]
    )
    if kernel == "dlambda":
        vals, errs = _kernel_table(all_args, params, method)
    elif kernel == "equilibrium":
        vals = equilibrium_cov_1d(params.mass, all_args)
        errs = 4 * _EPS * np.abs(vals)
    else:
        raise DomainError(f"unknown kernel {kernel!r}")

    M = np.empty((n, n))
    E = np.empty((n, n))
    pos = 0
    for i in range(n):
        for j in range(n):
            ww = np.outer(weights[i], weights[j]).ravel()
            k = ww.size
            terms = ww * vals[pos:pos + k]
            M[i, j] = terms.sum()
            E[i, j] = np.sum(np.abs(ww) * errs[pos:pos + k]) + 4 * _EPS * np.sum(np.abs(terms))
            pos += k
    M = 0.5 * (M + M.T)
    evals, evecs = np.linalg.eigh(M)
    tol = TOLERANCE_FACTOR * float(np.linalg.norm(E))
    vmin = evecs[:, 0]
    witness = DeltaComb.combine(family, vmin)
    violated = evals[0] < -tol
    notes = threshold_notes(params) if kernel == "dlambda" else []
    if not violated:
        notes.append("no negative eigenvalue beyond tolerance; this is not a proof of RP")
    report = RPReport(
        form_value=float(evals[0]),
        gram_spectrum=tuple(float(x) for x in evals),
        verdict=Verdict.RP_VIOLATED if violated else Verdict.NO_VIOLATION_FOUND,
        witness=witness if violated else None,
        tolerance_used=tol,
        notes=notes,
    )
    return M, report
