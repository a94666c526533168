"""Free-field stochastic quantization on a periodic lattice.

The linear SPDE

    dPhi/dlam = -1/2 (-Lap + m^2) Phi + xi

is treated with the spectral (continuum) Laplacian: each Fourier mode with
``omega_k = |p_k|^2 + m^2`` is an Ornstein-Uhlenbeck process. Starting from
zero data, mode ``k`` at stochastic time ``lam`` is Gaussian with variance
``(1 - exp(-lam omega_k)) / omega_k`` (in units of the torus volume).

Normalizations
--------------
* Fourier coefficients ``phi_k = a^d sum_x Phi(x) exp(-i p_k x)``; the
  normalized mode power is ``|phi_k|^2 / L^d``.
* White noise has per-site variance ``1 / a^d`` per unit stochastic time.
* A Dirac atom at a site is the site indicator divided by ``a``, so its
  pairing with the field is the field value at that site.

Random numbers: sample ``i`` belongs to block ``i // BLOCK`` and block ``b``
draws from ``default_rng([seed, b])``, so any sample is reproducible from
``(seed, i)`` and blocks can be generated independently.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .exceptions import DomainError, StabilityError
from .kernels import ModelParams, dlambda_multiplier
from .rp_d1 import TOLERANCE_FACTOR, DeltaComb, RPReport, Verdict

__all__ = [
    "TorusLattice",
    "FieldSample",
    "EnsembleStats",
    "build_lattice",
    "sample_exact",
    "sample_exact_batch",
    "mode_power",
    "mode_variance_stats",
    "evolve_em",
    "em_stationary_bias",
    "snap_comb",
    "estimate_rp_form",
    "lattice_dlambda_pair",
    "lattice_rp_form",
    "torus_gram_matrix",
    "probe_rp_violation",
    "write_samples",
    "read_samples",
    "BLOCK",
]

BLOCK = 4096
JACKKNIFE_BLOCK = 256  # samples per jackknife block
_MAGIC = b"RPQS\x01"


@dataclass(frozen=True, eq=False)
class TorusLattice:
    """Periodic grid of ``n**dim`` sites with circumference ``length``.

    ``wave_numbers`` are in numpy FFT order, ``2 pi k / L`` for
    ``k = 0, 1, ..., n/2 - 1, -n/2, ..., -1``. The Nyquist mode ``-n/2`` is
    the same mode as ``+n/2``; only ``|p|^2`` enters, so the convention is
    immaterial for the covariance.
    """

    dim: int
    n: int
    length: float
    mass: float
    wave_numbers: np.ndarray = field(repr=False)
    mode_freqs: np.ndarray = field(repr=False)

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @property
    def n_modes(self) -> int:
        return self.n**self.dim

    @property
    def axes(self) -> tuple:
        return tuple(range(-self.dim, 0))

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "n": self.n,
            "L": self.length,
            "mass": self.mass,
            "spacing": self.spacing,
            "nyquist": "k = -n/2 (same mode as +n/2)",
        }


def build_lattice(dim: int, n: int, L: float, m: float) -> TorusLattice:
    if int(dim) != dim or dim < 1:
        raise DomainError("dim must be an integer >= 1")
    if int(n) != n or n < 8 or n % 2:
        raise DomainError("n must be an even integer >= 8")
    if not (L > 0 and math.isfinite(L)):
        raise DomainError("L must be > 0")
    if not (m > 0 and math.isfinite(m)):
        raise DomainError("mass must be > 0")
    dim, n = int(dim), int(n)
    p = 2.0 * np.pi * np.fft.fftfreq(n, d=L / n)
    grids = np.meshgrid(*([p] * dim), indexing="ij")
    omega = sum(g * g for g in grids) + m * m
    return TorusLattice(dim, n, float(L), float(m), p, omega)


@dataclass
class FieldSample:
    """Field values on the lattice; a leading batch axis is allowed."""

    lattice: TorusLattice
    values: np.ndarray
    lambda_time: float
    seed: int
    start_index: int = 0

    def __post_init__(self):
        if self.values.shape[-self.lattice.dim:] != self.lattice.shape:
            raise DomainError("values do not match the lattice shape")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field values must be finite")


def _check_params(lattice, params):
    if abs(params.mass - lattice.mass) > 1e-12 * lattice.mass:
        raise DomainError("params.mass differs from the lattice mass")


def _mode_variance(lattice, params):
    return dlambda_multiplier(params, lattice.mode_freqs)


def sample_exact_batch(
    lattice: TorusLattice, params: ModelParams, start: int, count: int, seed: int
) -> np.ndarray:
    """Exact samples ``start .. start+count-1`` at stochastic time ``params.lam``."""
    _check_params(lattice, params)
    if start < 0 or count < 0:
        raise DomainError("start and count must be >= 0")
    shape = lattice.shape
    amp = np.sqrt(_mode_variance(lattice, params) * lattice.n_modes / lattice.volume)
    amp_half = amp[..., : lattice.n // 2 + 1]
    out = np.empty((count,) + shape)
    i = start
    while i < start + count:
        b = i // BLOCK
        rng = np.random.default_rng([int(seed), int(b)])
        z = rng.standard_normal((BLOCK,) + shape)
        lo = i - b * BLOCK
        hi = min(BLOCK, start + count - b * BLOCK)
        zk = np.fft.rfftn(z[lo:hi], axes=lattice.axes)
        out[i - start: i - start + hi - lo] = np.fft.irfftn(
            zk * amp_half, s=shape, axes=lattice.axes
        )
        i += hi - lo
    return out


def sample_exact(
    lattice: TorusLattice, params: ModelParams, count: int, seed: int, *, batch: int = BLOCK
) -> Iterator[FieldSample]:
    """Stream ``count`` exact samples in batches of at most ``batch``.

    Each mode is drawn with variance ``(1 - exp(-lam omega_k)) / omega_k``
    and Hermitian symmetry, then transformed to position space.
    """
    done = 0
    while done < count:
        k = min(batch, count - done)
        vals = sample_exact_batch(lattice, params, done, k, seed)
        yield FieldSample(lattice, vals, params.lam, seed, done)
        done += k


def mode_power(lattice: TorusLattice, values: np.ndarray) -> np.ndarray:
    """Normalized power ``|phi_k|^2 / L^d`` of each Fourier mode."""
    cell = lattice.spacing**lattice.dim
    phik = cell * np.fft.fftn(values, axes=lattice.axes)
    return np.abs(phik) ** 2 / lattice.volume


def mode_variance_stats(lattice: TorusLattice, params: ModelParams, count: int, seed: int):
    """Empirical per-mode variance of the exact sampler.

    Returns ``(mean, stderr, expected, field_mean, field_mean_stderr)``;
    ``field_mean`` is the sample mean of ``Phi`` averaged over sites.
    """
    s1 = np.zeros(lattice.shape)
    s2 = np.zeros(lattice.shape)
    f1 = f2 = 0.0
    for fs in sample_exact(lattice, params, count, seed):
        pw = mode_power(lattice, fs.values)
        s1 += pw.sum(axis=0)
        s2 += (pw * pw).sum(axis=0)
        site_mean = fs.values.reshape(fs.values.shape[0], -1).mean(axis=1)
        f1 += site_mean.sum()
        f2 += (site_mean * site_mean).sum()
    mean = s1 / count
    var = np.maximum(s2 / count - mean * mean, 0.0)
    stderr = np.sqrt(var / count)
    fm = f1 / count
    fse = math.sqrt(max(f2 / count - fm * fm, 0.0) / count)
    return mean, stderr, _mode_variance(lattice, params), fm, fse


def evolve_em(
    lattice: TorusLattice,
    field: FieldSample,
    dlambda: float,
    steps: int,
    seed: int,
    *,
    mass: Optional[float] = None,
    noise: bool = True,
    callback=None,
) -> FieldSample:
    """Euler-Maruyama steps of the linear SPDE.

    ``Phi <- Phi - (dlam/2)(-Lap + m^2) Phi + sqrt(dlam) eta`` with the
    spectral Laplacian and ``eta`` of per-site variance ``1/a^d``.
    ``callback(values)`` is called after every step when given.

    Raises
    ------
    StabilityError
        If ``dlambda * max(omega) >= 2``.
    """
    if not dlambda > 0:
        raise DomainError("dlambda must be > 0")
    if int(steps) != steps or steps < 0:
        raise DomainError("steps must be a non-negative integer")
    if mass is not None and abs(mass - lattice.mass) > 1e-12 * lattice.mass:
        raise DomainError("mass differs from the lattice mass")
    if field.lattice is not lattice and field.lattice.shape != lattice.shape:
        raise DomainError("field is not on this lattice")
    wmax = float(lattice.mode_freqs.max())
    if dlambda * wmax >= 2.0:
        raise StabilityError(
            f"dlambda * max(omega) = {dlambda * wmax:.4g} >= 2; reduce dlambda below {2.0 / wmax:.4g}"
        )
    axes = lattice.axes
    shape = field.values.shape
    damp = 0.5 * dlambda * lattice.mode_freqs[..., : lattice.n // 2 + 1]
    sigma = math.sqrt(dlambda / lattice.spacing**lattice.dim)
    rng = np.random.default_rng([int(seed), 0x454D])
    phi = np.array(field.values, dtype=float, copy=True)
    for _ in range(int(steps)):
        lap = np.fft.irfftn(np.fft.rfftn(phi, axes=axes) * damp, s=lattice.shape, axes=axes)
        phi -= lap
        if noise:
            phi += sigma * rng.standard_normal(shape)
        if callback is not None:
            callback(phi)
    return FieldSample(lattice, phi, field.lambda_time + steps * dlambda, seed, field.start_index)


def em_stationary_bias(
    lattice: TorusLattice,
    dlambda: float,
    *,
    chains: int = 2000,
    burn_in: float = 3.0,
    measure_time: float = 20.0,
    seed: int = 0,
    groups: int = 20,
):
    """Relative bias of the EM stationary mode variance.

    Runs ``chains`` independent chains from zero, discards ``burn_in`` units
    of stochastic time and averages the normalized mode power over the next
    ``measure_time``. Returns ``(bias, stderr)`` where
    ``bias = mean_k(omega_k * v_k) - 1`` and the standard error comes from a
    jackknife over ``groups`` disjoint sets of chains.
    """
    zero = FieldSample(lattice, np.zeros((chains,) + lattice.shape), 0.0, seed)
    burn_steps = int(round(burn_in / dlambda))
    meas_steps = int(round(measure_time / dlambda))
    state = evolve_em(lattice, zero, dlambda, burn_steps, seed)
    acc = np.zeros((chains,) + lattice.shape)

    def observe(values):
        acc[...] += mode_power(lattice, values)

    evolve_em(lattice, state, dlambda, meas_steps, seed + 1, callback=observe)
    per_chain = (acc / meas_steps * lattice.mode_freqs).reshape(chains, -1).mean(axis=1) - 1.0
    bias = float(per_chain.mean())
    grp = np.array_split(per_chain, groups)
    sums = np.array([g.sum() for g in grp])
    cnts = np.array([g.size for g in grp])
    loo = (sums.sum() - sums) / (cnts.sum() - cnts)
    se = math.sqrt((groups - 1) / groups * np.sum((loo - loo.mean()) ** 2))
    return bias, se


@dataclass
class EnsembleStats:
    """Mergeable first and second moments of a few probes.

    Per-block pair sums are kept for a delete-one-block jackknife.
    """

    count: int = 0
    probe_sums: Optional[np.ndarray] = None
    pair_sums: Optional[np.ndarray] = None
    block_counts: list = field(default_factory=list)
    block_pair_sums: list = field(default_factory=list)
    exact_lattice: Optional[float] = None
    exact_continuum: Optional[float] = None

    def add_block(self, probes: np.ndarray):
        """Accumulate ``probes`` of shape ``(samples, n_probes)``.

        The rows are cut into jackknife blocks of ``JACKKNIFE_BLOCK`` samples.
        """
        for lo in range(0, probes.shape[0], JACKKNIFE_BLOCK):
            chunk = probes[lo:lo + JACKKNIFE_BLOCK]
            ps = chunk.sum(axis=0)
            pp = chunk.T @ chunk
            if self.probe_sums is None:
                self.probe_sums = np.zeros_like(ps)
                self.pair_sums = np.zeros_like(pp)
            self.count += chunk.shape[0]
            self.probe_sums += ps
            self.pair_sums += pp
            self.block_counts.append(chunk.shape[0])
            self.block_pair_sums.append(pp)

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        out = EnsembleStats()
        for s in (self, other):
            for c, pp in zip(s.block_counts, s.block_pair_sums):
                out.block_counts.append(c)
                out.block_pair_sums.append(pp)
            if s.count:
                if out.probe_sums is None:
                    out.probe_sums = np.zeros_like(s.probe_sums)
                    out.pair_sums = np.zeros_like(s.pair_sums)
                out.probe_sums = out.probe_sums + s.probe_sums
                out.pair_sums = out.pair_sums + s.pair_sums
                out.count += s.count
        out.exact_lattice = self.exact_lattice
        out.exact_continuum = self.exact_continuum
        return out

    @property
    def mean(self) -> np.ndarray:
        return self.probe_sums / self.count

    @property
    def second_moment(self) -> np.ndarray:
        return self.pair_sums / self.count

    def jackknife_stderr(self, i: int, j: int) -> float:
        """Standard error of ``E[X_i X_j]`` by delete-one-block jackknife."""
        nb = len(self.block_counts)
        if nb < 2:
            raise DomainError("jackknife needs at least two blocks")
        cnt = np.array(self.block_counts, dtype=float)
        sums = np.array([pp[i, j] for pp in self.block_pair_sums])
        loo = (sums.sum() - sums) / (cnt.sum() - cnt)
        return float(math.sqrt((nb - 1) / nb * np.sum((loo - loo.mean()) ** 2)))

    @property
    def standard_errors(self) -> np.ndarray:
        k = self.pair_sums.shape[0]
        return np.array([[self.jackknife_stderr(i, j) for j in range(k)] for i in range(k)])

    @property
    def rp_estimate(self) -> float:
        """``E[Phi(theta f) Phi(f)]`` (probe 0 is ``Phi(f)``, probe 1 ``Phi(theta f)``)."""
        return float(self.second_moment[0, 1])

    @property
    def rp_stderr(self) -> float:
        return self.jackknife_stderr(0, 1)


def snap_comb(lattice: TorusLattice, comb: DeltaComb, *, tol: Optional[float] = None):
    """Site indices on the time axis for each atom of ``comb``.

    An atom snaps to the nearest site when within ``tol`` (default ``a/2``);
    times must lie in ``[0, L/2)`` so that reflection is unambiguous.
    """
    a = lattice.spacing
    tol = 0.5 * a if tol is None else tol
    sites = []
    for t in comb.times:
        if not (0 <= t < 0.5 * lattice.length):
            raise DomainError(f"time {t} outside [0, L/2)")
        k = int(round(t / a))
        if abs(k * a - t) > tol:
            raise DomainError(f"time {t} is not within {tol} of a site")
        sites.append(k)
    return np.array(sites, dtype=int)


def _probe_values(lattice, values, sites, weights):
    n = lattice.n
    flat = values.reshape(values.shape[0], n, -1)[:, :, 0]  # time axis, spatial origin
    fwd = flat[:, sites] @ weights
    refl = flat[:, (-sites) % n] @ weights
    return np.stack([fwd, refl], axis=1)


def estimate_rp_form(
    samples, comb: DeltaComb, params: ModelParams, *, lattice: Optional[TorusLattice] = None
) -> EnsembleStats:
    """Monte Carlo estimate of ``<theta f, D_lambda f>`` on the torus.

    ``samples`` is an iterable of FieldSample batches. The reflection acts on
    the first lattice axis (site ``t -> -t mod n``); for ``dim > 1`` the comb
    sits at the spatial origin. The result carries the exact mode-sum value
    in ``exact_lattice`` and, for ``dim == 1``, the continuum value in
    ``exact_continuum``.
    """
    from .rp_d1 import rp_form_dlambda

    stats = EnsembleStats()
    weights = comb.weights
    sites = None
    for fs in samples:
        lat = fs.lattice
        if lattice is None:
            lattice = lat
        if sites is None:
            sites = snap_comb(lattice, comb)
        vals = fs.values if fs.values.ndim > lattice.dim else fs.values[None]
        stats.add_block(_probe_values(lattice, vals, sites, weights))
    if lattice is None:
        raise DomainError("no samples given")
    stats.exact_lattice = lattice_rp_form(lattice, params, comb)
    if lattice.dim == 1:
        stats.exact_continuum = rp_form_dlambda(comb, params, method="closed").value
    return stats


def lattice_dlambda_pair(lattice: TorusLattice, params: ModelParams, x1, x2) -> float:
    """Exact torus covariance between two sites by explicit mode sum.

    ``(1/L^d) sum_k cos(p_k . (x1 - x2)) (1 - exp(-lam omega_k)) / omega_k``.
    Sites are integer indices (a scalar for the time axis, with the other
    coordinates at 0, or a tuple of length ``dim``).
    """
    _check_params(lattice, params)
    a = lattice.spacing
    d1 = np.zeros(lattice.dim)
    d2 = np.zeros(lattice.dim)
    d1[: np.size(x1)] = np.atleast_1d(x1)
    d2[: np.size(x2)] = np.atleast_1d(x2)
    disp = (d1 - d2) * a
    grids = np.meshgrid(*([lattice.wave_numbers] * lattice.dim), indexing="ij")
    phase = sum(g * dx for g, dx in zip(grids, disp))
    var = _mode_variance(lattice, params)
    return float(np.sum(np.cos(phase) * var) / lattice.volume)


def lattice_rp_form(lattice: TorusLattice, params: ModelParams, comb: DeltaComb) -> float:
    """``sum_ab w_a w_b D_lat(t_a + t_b)`` by mode sums."""
    sites = snap_comb(lattice, comb)
    w = comb.weights
    total = 0.0
    for i, si in enumerate(sites):
        for j, sj in enumerate(sites):
            total += w[i] * w[j] * lattice_dlambda_pair(lattice, params, -si, sj)
    return total


def torus_gram_matrix(
    family: Sequence[DeltaComb], lattice: TorusLattice, params: ModelParams
):
    """Gram matrix of the torus covariance over ``family`` with a verdict.

    Entries are exact mode sums, so the tolerance is a roundoff bound.
    """
    family = list(family)
    if not family:
        raise DomainError("family must be non-empty")
    cache = {}

    def cov(k):
        if k not in cache:
            cache[k] = lattice_dlambda_pair(lattice, params, 0, k)
        return cache[k]

    n = len(family)
    sites = [snap_comb(lattice, f) for f in family]
    M = np.empty((n, n))
    scale = 0.0
    for i in range(n):
        for j in range(n):
            s = 0.0
            for a, wa in zip(sites[i], family[i].weights):
                for b, wb in zip(sites[j], family[j].weights):
                    term = wa * wb * cov(int((a + b) % lattice.n))
                    s += term
                    scale += abs(term)
            M[i, j] = s
    M = 0.5 * (M + M.T)
    evals, evecs = np.linalg.eigh(M)
    tol = TOLERANCE_FACTOR * lattice.n_modes * np.finfo(float).eps * scale
    violated = evals[0] < -tol
    notes = ["torus result is numerical evidence, not a proof"]
    return M, RPReport(
        form_value=float(evals[0]),
        gram_spectrum=tuple(float(x) for x in evals),
        verdict=Verdict.RP_VIOLATED if violated else Verdict.NO_VIOLATION_FOUND,
        witness=DeltaComb.combine(family, evecs[:, 0]) if violated else None,
        tolerance_used=float(tol),
        notes=notes,
    )


def probe_rp_violation(
    lattice: TorusLattice,
    params: ModelParams,
    comb: DeltaComb,
    seed: int,
    *,
    initial: int = 100_000,
    max_samples: int = 1_000_000,
    sigmas: float = 3.0,
) -> EnsembleStats:
    """Draw samples until the RP estimate is negative by ``sigmas`` standard errors.

    The sample count doubles from ``initial`` up to ``max_samples``; the
    stream is the same for every run with the same seed, so later rounds
    extend earlier ones.
    """
    stats = EnsembleStats()
    sites = snap_comb(lattice, comb)
    done = 0
    target = initial
    while True:
        while done < target:
            k = min(BLOCK, target - done)
            vals = sample_exact_batch(lattice, params, done, k, seed)
            stats.add_block(_probe_values(lattice, vals, sites, comb.weights))
            done += k
        if done >= max_samples:
            break
        if len(stats.block_counts) > 1 and stats.rp_estimate + sigmas * stats.rp_stderr < 0:
            break
        target = min(2 * target, max_samples)
    from .rp_d1 import rp_form_dlambda

    stats.exact_lattice = lattice_rp_form(lattice, params, comb)
    if lattice.dim == 1:
        stats.exact_continuum = rp_form_dlambda(comb, params, method="closed").value
    return stats


def write_samples(path, values: np.ndarray, *, lattice: TorusLattice, params: ModelParams,
                  seed: int) -> None:
    """Write samples as a flat float64 array behind a JSON header.

    Layout: ``b"RPQS\\x01"``, little-endian uint32 header length, UTF-8 JSON
    header (sorted keys: dim, n, L, lambda, m, seed, count), then
    ``count * n**dim`` little-endian float64 values in C order.
    """
    values = np.asarray(values, dtype="<f8")
    count = values.shape[0] if values.ndim > lattice.dim else 1
    header = {
        "dim": lattice.dim,
        "n": lattice.n,
        "L": lattice.length,
        "lambda": params.lam,
        "m": params.mass,
        "seed": int(seed),
        "count": int(count),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(values).tobytes())


def read_samples(path):
    """Inverse of :func:`write_samples`; returns ``(header, values)``."""
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise DomainError("not an RPQS sample file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        data = np.frombuffer(fh.read(), dtype="<f8")
    shape = (header["count"],) + (header["n"],) * header["dim"]
    if data.size != math.prod(shape):
        raise DomainError("sample file is truncated")
    return header, data.reshape(shape)
