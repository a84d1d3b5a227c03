"""Monte Carlo tail estimates and envelope checks.

Replication ``r`` always draws from the stream keyed by
``derive_seed(master_seed, process.id, r)`` and replications are processed
in fixed-size chunks, so counts are bit-identical for any worker count.
"""

from __future__ import annotations

import io
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import beta

from .basis import OrthonormalBasis
from .bounds import BoundCertificate
from .kernels import CoefficientTensor, Kernel
from .mixing import MixingProcess
from .seeding import derive_seed
from .stats import (
    NAIVE_MAX_M,
    NAIVE_MAX_N,
    partial_sums,
    u_series_batch,
    u_statistic_naive,
    v_series_batch,
    v_statistic_naive,
)

CHUNK = 512
CONFIDENCE = 0.99


def clopper_pearson_upper(count, reps: int, level: float = CONFIDENCE) -> np.ndarray:
    """Exact one-sided upper confidence limit for a binomial proportion."""
    k = np.asarray(count)
    with np.errstate(invalid="ignore"):
        upper = beta.ppf(level, k + 1, np.maximum(reps - k, 1))
    return np.where(k >= reps, 1.0, upper)


@dataclass
class TailCurve:
    stat_kind: str
    x_grid: np.ndarray
    counts: np.ndarray
    reps: int
    estimates: np.ndarray
    ci_upper: np.ndarray
    bound: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, stat_kind, x_grid, counts, reps, meta=None) -> "TailCurve":
        counts = np.asarray(counts, dtype=np.int64)
        return cls(
            stat_kind,
            np.asarray(x_grid, dtype=float),
            counts,
            reps,
            counts / reps,
            clopper_pearson_upper(counts, reps),
            None,
            dict(meta or {}),
        )

    def with_bound(self, values) -> "TailCurve":
        values = np.asarray(values, dtype=float)
        if values.shape != self.x_grid.shape:
            raise ValueError("bound values do not match the x grid")
        return replace(self, bound=values)

    def to_csv(self, header: Optional[dict] = None) -> str:
        buf = io.StringIO()
        for key, value in (header or {}).items():
            buf.write(f"# {key}={value}\n")
        buf.write("x,count,estimate,ci_upper,bound\n")
        bound = self.bound if self.bound is not None else [math.nan] * len(self.x_grid)
        for x, c, e, u, b in zip(self.x_grid, self.counts, self.estimates, self.ci_upper, bound):
            buf.write(f"{x:.17g},{int(c)},{e:.17g},{u:.17g},{b:.17g}\n")
        return buf.getvalue()


def replication_seeds(master_seed: int, process_id: str, start: int, stop: int) -> list[int]:
    return [derive_seed(master_seed, process_id, r) for r in range(start, stop)]


_JOB: Optional[Callable[[int, int], np.ndarray]] = None


def _run_job(bounds: tuple[int, int]) -> np.ndarray:
    return _JOB(*bounds)


def run_chunked(job: Callable[[int, int], np.ndarray], reps: int, workers: int = 1) -> list:
    """Apply ``job(start, stop)`` to consecutive chunks of replications, in order."""
    global _JOB
    chunks = [(s, min(s + CHUNK, reps)) for s in range(0, reps, CHUNK)]
    if workers <= 1 or len(chunks) <= 1:
        return [job(*c) for c in chunks]
    _JOB = job
    try:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            return list(pool.map(_run_job, chunks))
    finally:
        _JOB = None


def _statistic_batch(
    stat_kind: str,
    tensor: Optional[CoefficientTensor],
    basis: Optional[OrthonormalBasis],
    kernel: Optional[Kernel],
) -> Callable[[np.ndarray], np.ndarray]:
    kind = stat_kind.upper()
    if kind not in ("U", "V"):
        raise ValueError("stat_kind must be 'U' or 'V'")
    if tensor is not None:
        series = v_series_batch if kind == "V" else u_series_batch
        return lambda pts: series(tensor, basis, pts)
    if kernel is None:
        raise ValueError("need a tensor (series path) or a kernel (naive path)")
    naive = v_statistic_naive if kind == "V" else u_statistic_naive
    return lambda pts: np.array([naive(kernel, row) for row in pts])


def run_tail_experiment(
    process: MixingProcess,
    tensor: Optional[CoefficientTensor],
    basis: Optional[OrthonormalBasis],
    stat_kind: str,
    n: int,
    reps: int,
    x_grid: Sequence[float],
    master_seed: int,
    workers: int = 1,
    kernel: Optional[Kernel] = None,
) -> TailCurve:
    """Exceedance counts of ``|stat| > x`` over ``reps`` independent samples.

    Statistics come from the series path. Without a tensor the naive path is
    used, but only within its size caps.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or np.any(np.diff(x) <= 0) or np.any(x < 0):
        raise ValueError("x grid must be increasing and nonnegative")
    if tensor is None and kernel is not None and (n > NAIVE_MAX_N or kernel.order > NAIVE_MAX_M):
        raise ValueError("no tensor given and naive evaluation exceeds its caps")
    stat = _statistic_batch(stat_kind, tensor, basis, kernel)

    def job(start: int, stop: int) -> np.ndarray:
        pts = process.sample_batch(replication_seeds(master_seed, process.id, start, stop), n)
        values = np.abs(stat(pts))
        return (values[:, None] > x[None, :]).sum(axis=0).astype(np.int64)

    counts = np.sum(run_chunked(job, reps, workers), axis=0)
    meta = {"process": process.id, "n": n, "master_seed": master_seed, "stat": stat_kind.upper()}
    if tensor is not None:
        meta["tensor"] = tensor.to_json()
    return TailCurve.from_counts(stat_kind.upper(), x, counts, reps, meta)


def run_hoeffding_experiment(
    kernel: Kernel,
    process: MixingProcess,
    n: int,
    reps: int,
    t_grid: Sequence[float],
    master_seed: int,
    mean: float,
    workers: int = 1,
) -> TailCurve:
    """One-sided counts of ``U - EU >= t`` for the ``(n-m)!/n!``-normalized U-statistic (m = 2)."""
    if kernel.order != 2:
        raise ValueError("batched evaluation is implemented for order-2 kernels")
    t = np.asarray(t_grid, dtype=float)
    pairs = n * (n - 1)

    def job(start: int, stop: int) -> np.ndarray:
        pts = process.sample_batch(replication_seeds(master_seed, process.id, start, stop), n)
        vals = kernel(pts[:, :, None], pts[:, None, :])
        diag = kernel(pts, pts)
        u = (vals.sum(axis=(1, 2)) - diag.sum(axis=1)) / pairs
        return ((u - mean)[:, None] >= t[None, :]).sum(axis=0).astype(np.int64)

    counts = np.sum(run_chunked(job, reps, workers), axis=0)
    meta = {"process": process.id, "n": n, "master_seed": master_seed, "stat": "U-EU"}
    return TailCurve.from_counts("U-EU", t, counts, reps, meta)


@dataclass
class EnvelopeReport:
    violations: list
    max_ratio: float
    points: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": self.violations,
            "max_ratio": self.max_ratio,
            "points": self.points,
        }


def verify_envelope(
    curve: TailCurve,
    certificate: Optional[BoundCertificate] = None,
    x_grid: Optional[Sequence[float]] = None,
) -> EnvelopeReport:
    """Flag grid points whose 0.99 upper confidence limit exceeds the bound."""
    if x_grid is not None and not np.array_equal(np.asarray(x_grid, dtype=float), curve.x_grid):
        raise ValueError("bound grid does not match the curve grid")
    if curve.bound is None:
        if certificate is None:
            raise ValueError("curve has no bound and no certificate was given")
        curve = curve.with_bound(certificate.bound(curve.x_grid))
    if curve.bound.shape != curve.x_grid.shape:
        raise ValueError("bound grid does not match the curve grid")
    violations = []
    ratios = []
    for x, c, est, up, b in zip(curve.x_grid, curve.counts, curve.estimates, curve.ci_upper,
                                curve.bound):
        if up > b:
            violations.append({"x": float(x), "count": int(c), "estimate": float(est),
                               "ci_upper": float(up), "bound": float(b)})
        if b > 0:
            ratios.append(est / b)
        elif est > 0:
            ratios.append(math.inf)
    max_ratio = max(ratios, default=0.0)
    return EnvelopeReport(violations, float(max_ratio), len(curve.x_grid), not violations)


@dataclass(frozen=True)
class MomentEstimate:
    estimate: float
    std_error: float


def estimate_mixed_moments(
    process: MixingProcess,
    basis: OrthonormalBasis,
    index_tuples: Sequence[Sequence[int]],
    n: int,
    reps: int,
    master_seed: int,
    workers: int = 1,
) -> dict[tuple[int, ...], MomentEstimate]:
    """Monte Carlo means of ``prod_j S_n(i_j)`` for several tuples from shared replications."""
    tuples = [tuple(t) for t in index_tuples]
    for t in tuples:
        if len(t) == 0 or len(t) % 2:
            raise ValueError(f"index tuple {t} must have even positive length")
    if reps < 100:
        raise ValueError("need at least 100 replications")
    indices = sorted({i for t in tuples for i in t})

    def job(start: int, stop: int) -> np.ndarray:
        pts = process.sample_batch(replication_seeds(master_seed, process.id, start, stop), n)
        sums = dict(zip(indices, partial_sums(basis, pts, indices)))
        out = np.ones((len(tuples), stop - start))
        for row, t in enumerate(tuples):
            for i in t:
                out[row] *= sums[i]
        return out

    products = np.concatenate(run_chunked(job, reps, workers), axis=1)
    result = {}
    for row, t in enumerate(tuples):
        vals = products[row].tolist()
        mean = math.fsum(vals) / reps
        var = math.fsum((v - mean) ** 2 for v in vals) / (reps - 1)
        result[t] = MomentEstimate(mean, math.sqrt(var / reps))
    return result


def estimate_mixed_moment(
    process: MixingProcess,
    basis: OrthonormalBasis,
    indices: Sequence[int],
    n: int,
    reps: int,
    master_seed: int,
    workers: int = 1,
) -> MomentEstimate:
    """Monte Carlo mean and standard error of ``S_n(i_1)...S_n(i_2k)``."""
    return estimate_mixed_moments(process, basis, [indices], n, reps, master_seed, workers)[
        tuple(indices)
    ]


def _crossing(func: Callable[[float], float], level: float, lo: float, hi: float) -> float:
    """Smallest x in ``[lo, hi]`` (to relative 1e-12) where a nonincreasing ``func`` is <= level."""
    while func(hi) > level:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise ValueError("bound never falls below the requested level")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if func(mid) > level:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


def resolvable_grid(
    bound: Callable[[np.ndarray], np.ndarray],
    reps: int,
    count: int = 20,
    upper: float = 1.0,
    spacing: str = "geometric",
    start: float = 1e-3,
) -> np.ndarray:
    """Grid spanning the band where ``clopper_pearson_upper(0, reps) <= bound < upper``.

    Below the lower edge a bound cannot be refuted and cannot be checked
    either: a zero count already has an upper limit above it.
    """
    scalar = lambda x: float(np.asarray(bound(np.array([x])))[0])
    floor = float(clopper_pearson_upper(0, reps))
    x_lo = _crossing(scalar, np.nextafter(upper, 0.0), start, start)
    x_lo = x_lo * (1 + 1e-9)
    x_hi = _crossing(scalar, floor, x_lo, x_lo)
    x_hi = x_hi * (1 - 1e-9)
    # nudge inside the band so that bound(x_hi) >= floor
    while scalar(x_hi) < floor:
        x_hi = x_lo + 0.999 * (x_hi - x_lo)
    if spacing == "geometric":
        return np.geomspace(x_lo, x_hi, count)
    if spacing == "linear":
        return np.linspace(x_lo, x_hi, count)
    raise ValueError("spacing must be 'geometric' or 'linear'")
