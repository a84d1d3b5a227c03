"""U- and V-statistics: naive O(n^m) sums and the orthogonal-series path.

The series path needs only the normalized partial sums
``S_n(i) = n^{-1/2} sum_j e_i(x_j)`` and, for U-statistics, the mixed power
sums ``S_n(i_1..i_k) = n^{-k/2} sum_j e_{i_1}(x_j)...e_{i_k}(x_j)``. The
off-diagonal sum is recovered from those by Moebius inversion on the lattice
of set partitions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from .basis import OrthonormalBasis
from .kernels import CoefficientTensor, Kernel

NAIVE_MAX_N = 200
NAIVE_MAX_M = 4


@dataclass(frozen=True)
class Sample:
    points: np.ndarray
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


def _points(sample) -> np.ndarray:
    return sample.points if isinstance(sample, Sample) else np.asarray(sample)


def _check_naive(n: int, m: int, max_n: int, max_m: int) -> None:
    if m > max_m or n > max_n:
        raise ValueError(
            f"naive evaluation capped at m <= {max_m}, n <= {max_n} (got m={m}, n={n})"
        )


def _index_grid(n: int, m: int) -> np.ndarray:
    return np.indices((n,) * m).reshape(m, -1)


def _distinct_mask(idx: np.ndarray) -> np.ndarray:
    m = idx.shape[0]
    mask = np.ones(idx.shape[1], dtype=bool)
    for a in range(m):
        for b in range(a + 1, m):
            mask &= idx[a] != idx[b]
    return mask


def _kernel_sum(kernel: Kernel, x: np.ndarray, distinct: bool) -> float:
    n, m = len(x), kernel.order
    idx = _index_grid(n, m)
    if distinct:
        idx = idx[:, _distinct_mask(idx)]
    if idx.shape[1] == 0:
        return 0.0
    values = kernel(*(x[row] for row in idx))
    return math.fsum(np.ravel(values).tolist())


def v_statistic_naive(
    kernel: Kernel, sample, max_n: int = NAIVE_MAX_N, max_m: int = NAIVE_MAX_M
) -> float:
    """``n^{-m/2} sum_{j_1..j_m} f(x_{j_1}, ..., x_{j_m})`` over all index tuples."""
    x = _points(sample)
    n, m = len(x), kernel.order
    if n == 0:
        raise ValueError("V-statistic needs at least one observation")
    _check_naive(n, m, max_n, max_m)
    return _kernel_sum(kernel, x, distinct=False) / n ** (m / 2)


def u_statistic_naive(
    kernel: Kernel, sample, max_n: int = NAIVE_MAX_N, max_m: int = NAIVE_MAX_M
) -> float:
    """Same normalization as the V-statistic, pairwise-distinct tuples only."""
    x = _points(sample)
    n, m = len(x), kernel.order
    if n < m:
        return 0.0
    _check_naive(n, m, max_n, max_m)
    return _kernel_sum(kernel, x, distinct=True) / n ** (m / 2)


def u_hoeffding_normalized(
    kernel: Kernel, sample, max_n: int = NAIVE_MAX_N, max_m: int = NAIVE_MAX_M
) -> float:
    """Average of ``f`` over pairwise-distinct tuples, factor ``(n-m)!/n!``."""
    x = _points(sample)
    n, m = len(x), kernel.order
    if n < m:
        raise ValueError(f"need n >= m (got n={n}, m={m})")
    _check_naive(n, m, max_n, max_m)
    count = math.perm(n, m)
    return _kernel_sum(kernel, x, distinct=True) / count


def _row_sums(values: np.ndarray) -> np.ndarray:
    """Correctly rounded sums along the last axis."""
    values = np.asarray(values, dtype=float)
    flat = values.reshape(-1, values.shape[-1])
    out = np.array([math.fsum(row) for row in flat.tolist()])
    return out.reshape(values.shape[:-1])


def s_n(index: int, basis: OrthonormalBasis, sample) -> float:
    """Normalized partial sum ``n^{-1/2} sum_j e_index(x_j)``."""
    x = _points(sample)
    n = len(x)
    if n == 0:
        raise ValueError("S_n needs at least one observation")
    if index == 0:
        warnings.warn("index 0 is not part of a canonical representation", stacklevel=2)
    vals = np.broadcast_to(basis.evaluate(index, x), x.shape)
    return math.fsum(vals.tolist()) / math.sqrt(n)


def partial_sums(basis: OrthonormalBasis, points: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    """``S_n(i)`` for each index; ``points`` may carry leading batch axes.

    Returns an array of shape ``(len(indices),) + points.shape[:-1]``.
    """
    pts = np.asarray(points)
    n = pts.shape[-1]
    vals = basis.evaluate_many(indices, pts)
    return _row_sums(vals) / math.sqrt(n)


def mixed_power_sum(indices: Sequence[int], basis: OrthonormalBasis, sample) -> float:
    """``n^{-k/2} sum_j prod_l e_{i_l}(x_j)`` for ``indices = (i_1..i_k)``."""
    x = _points(sample)
    n, k = len(x), len(indices)
    if k < 1 or n < 1:
        raise ValueError("need k >= 1 and n >= 1")
    return float(_mixed_power_sums(basis, x, [tuple(indices)])[tuple(indices)])


def _mixed_power_sums(
    basis: OrthonormalBasis, points: np.ndarray, blocks: Sequence[tuple[int, ...]]
) -> dict[tuple[int, ...], np.ndarray]:
    pts = np.asarray(points)
    n = pts.shape[-1]
    singles = sorted({i for b in blocks for i in b})
    vals = dict(zip(singles, basis.evaluate_many(singles, pts)))
    out = {}
    for block in blocks:
        key = tuple(sorted(block))
        if key in out:
            out[tuple(block)] = out[key]
            continue
        prod = np.ones(pts.shape)
        for i in key:
            prod = prod * vals[i]
        out[key] = _row_sums(prod) / n ** (len(key) / 2)
        out[tuple(block)] = out[key]
    return out


def v_statistic_series(tensor: CoefficientTensor, basis: OrthonormalBasis, sample) -> float:
    """``sum f_i S_n(i_1)...S_n(i_m)`` using cached partial sums."""
    x = _points(sample)
    if len(x) == 0:
        raise ValueError("V-statistic needs at least one observation")
    return float(v_series_batch(tensor, basis, x))


def v_series_batch(tensor: CoefficientTensor, basis: OrthonormalBasis, points) -> np.ndarray:
    """Vectorized V-statistic over leading batch axes of ``points``."""
    pts = np.asarray(points)
    batch = pts.shape[:-1]
    if len(tensor) == 0:
        return np.zeros(batch)
    indices = tensor.distinct_indices()
    sums = dict(zip(indices, partial_sums(basis, pts, indices)))
    terms = []
    for idx, value in tensor:
        term = np.full(batch, value)
        for i in idx:
            term = term * sums[i]
        terms.append(term)
    return _row_sums(np.stack(terms, axis=-1))


@lru_cache(maxsize=16)
def set_partitions(m: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All set partitions of ``{0, ..., m-1}``; blocks are sorted tuples."""

    def rec(items: list[int]) -> Iterator[list[list[int]]]:
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for part in rec(rest):
            yield [[first]] + part
            for j in range(len(part)):
                yield part[:j] + [[first] + part[j]] + part[j + 1 :]

    return tuple(
        tuple(sorted(tuple(sorted(b)) for b in part)) for part in rec(list(range(m)))
    )


def moebius_weight(partition: Sequence[Sequence[int]]) -> int:
    """``prod_B (-1)^{|B|-1} (|B|-1)!`` (Moebius function from the finest partition)."""
    w = 1
    for block in partition:
        w *= (-1) ** (len(block) - 1) * math.factorial(len(block) - 1)
    return w


def offdiagonal_sum(indices: Sequence[int], basis: OrthonormalBasis, sample) -> float:
    """``n^{-m/2} sum_{j_1 != ... != j_m} prod_k e_{i_k}(x_{j_k})``."""
    tensor = CoefficientTensor(len(indices), {tuple(indices): 1.0})
    return u_statistic_series(tensor, basis, sample)


def u_statistic_series(tensor: CoefficientTensor, basis: OrthonormalBasis, sample) -> float:
    """U-statistic through mixed power sums and set-partition inclusion-exclusion."""
    x = _points(sample)
    if len(x) < tensor.order:
        return 0.0
    return float(u_series_batch(tensor, basis, x))


def u_series_batch(tensor: CoefficientTensor, basis: OrthonormalBasis, points) -> np.ndarray:
    pts = np.asarray(points)
    batch = pts.shape[:-1]
    m = tensor.order
    if len(tensor) == 0 or pts.shape[-1] < m:
        return np.zeros(batch)
    partitions = [(moebius_weight(p), p) for p in set_partitions(m)]
    blocks = {
        tuple(idx[k] for k in block) for idx, _ in tensor for _, p in partitions for block in p
    }
    mps = _mixed_power_sums(basis, pts, sorted(blocks))
    terms = []
    for idx, value in tensor:
        for weight, part in partitions:
            term = np.full(batch, value * weight, dtype=float)
            for block in part:
                term = term * mps[tuple(idx[k] for k in block)]
            terms.append(term)
    return _row_sums(np.stack(terms, axis=-1))
