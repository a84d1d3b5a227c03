"""Kernels, their coefficient tensors, and canonicality.

A kernel of order ``m`` is a function of ``m`` state-space points. When it is
built from a finitely supported :class:`CoefficientTensor` over a basis whose
``e_0`` is the constant, every conditional mean vanishes and the kernel is
canonical by construction.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Optional

import numpy as np

from .basis import Measure, OrthonormalBasis

DROP_THRESHOLD = 1e-12
CONDITIONAL_NODES = 128

Index = tuple[int, ...]


class CoefficientTensor:
    """Finitely supported map ``(i_1, ..., i_m) -> f_{i_1...i_m}``.

    Indices start at 1; index 0 would pair with the constant basis function
    and break canonicality. Entries equal to zero are not stored. Iteration
    is in lexicographic index order.
    """

    __slots__ = ("_order", "_entries")

    def __init__(self, order: int, entries: Mapping[Iterable[int], float] | None = None):
        if order < 1:
            raise ValueError("tensor order must be positive")
        clean: dict[Index, float] = {}
        for idx, value in (entries or {}).items():
            key = tuple(int(i) for i in idx)
            if len(key) != order:
                raise ValueError(f"index {key} does not have length {order}")
            if min(key) < 1:
                raise ValueError(f"index {key} contains 0; canonical tensors use indices >= 1")
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"non-finite coefficient at {key}")
            if value != 0.0:
                clean[key] = clean.get(key, 0.0) + value
        self._order = order
        self._entries = MappingProxyType(dict(sorted(clean.items())))

    @property
    def order(self) -> int:
        return self._order

    @property
    def entries(self) -> Mapping[Index, float]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientTensor):
            return NotImplemented
        return self._order == other._order and dict(self._entries) == dict(other._entries)

    def __repr__(self) -> str:
        return f"CoefficientTensor(order={self._order}, entries={dict(self._entries)!r})"

    def distinct_indices(self) -> list[int]:
        return sorted({i for idx in self._entries for i in idx})

    def max_index(self) -> int:
        return max(self.distinct_indices(), default=0)

    def scaled(self, factor: float) -> "CoefficientTensor":
        return CoefficientTensor(self._order, {k: factor * v for k, v in self._entries.items()})

    def to_json(self) -> str:
        return json.dumps([{"index": list(k), "value": v} for k, v in self._entries.items()])

    @classmethod
    def from_json(cls, data: str | list | dict, order: Optional[int] = None) -> "CoefficientTensor":
        """Parse ``[{"index": [...], "value": x}, ...]``.

        An object ``{"order": m, "entries": [...]}`` is also accepted so that an
        empty tensor keeps its order.
        """
        if isinstance(data, str):
            data = json.loads(data)
        if isinstance(data, dict):
            order = data.get("order", order)
            data = data["entries"]
        entries = {tuple(item["index"]): item["value"] for item in data}
        if order is None:
            if not entries:
                raise ValueError("order is required for an empty tensor")
            order = len(next(iter(entries)))
        return cls(order, entries)


def coefficient_norm(tensor: CoefficientTensor, p: float) -> float:
    """``sum |f_i|^p`` over nonzero entries, ``0 < p <= 1``."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    return math.fsum(abs(v) ** p for _, v in tensor)


@dataclass(frozen=True)
class Kernel:
    """Function of ``order`` points, vectorized over broadcastable arrays."""

    order: int
    evaluator: Callable[..., np.ndarray]
    measure: Measure
    tensor: Optional[CoefficientTensor] = None
    basis: Optional[OrthonormalBasis] = field(default=None, repr=False)
    name: str = "kernel"

    def __call__(self, *points):
        if len(points) != self.order:
            raise TypeError(f"kernel of order {self.order} called with {len(points)} points")
        arrays = [np.asarray(p) for p in points]
        out = self.evaluator(*arrays)
        shape = np.broadcast_shapes(*(a.shape for a in arrays))
        return np.broadcast_to(np.asarray(out, dtype=float), shape)

    def __mul__(self, factor: float) -> "Kernel":
        factor = float(factor)
        tensor = self.tensor.scaled(factor) if self.tensor is not None else None
        return Kernel(
            self.order,
            lambda *ts: factor * self.evaluator(*ts),
            self.measure,
            tensor,
            self.basis,
            f"{factor}*{self.name}",
        )

    __rmul__ = __mul__

    def __add__(self, other: "Kernel") -> "Kernel":
        if other.order != self.order or other.measure != self.measure:
            raise ValueError("kernels must share order and measure")
        return Kernel(
            self.order,
            lambda *ts: self.evaluator(*ts) + other.evaluator(*ts),
            self.measure,
            None,
            None,
            f"({self.name}+{other.name})",
        )


def kernel_from_function(
    func: Callable[..., np.ndarray], order: int, measure: Measure, name: str = "kernel"
) -> Kernel:
    return Kernel(order, func, measure, None, None, name)


def kernel_from_coefficients(tensor: CoefficientTensor, basis: OrthonormalBasis) -> Kernel:
    """Exact finite series ``sum f_i e_{i_1}(t_1)...e_{i_m}(t_m)``."""
    for idx, _ in tensor:
        if min(idx) < 1:
            raise ValueError(f"index {idx} contains 0")
        for i in idx:
            basis.check_index(i)
    entries = list(tensor)
    m = tensor.order

    def evaluator(*ts):
        shape = np.broadcast_shapes(*(np.shape(t) for t in ts))
        total = np.zeros(shape)
        cache: dict[tuple[int, int], np.ndarray] = {}
        for idx, value in entries:
            term = np.full(shape, value)
            for slot, i in enumerate(idx):
                key = (slot, i)
                if key not in cache:
                    cache[key] = basis.evaluate(i, ts[slot])
                term = term * cache[key]
            total = total + term
        return total

    return Kernel(m, evaluator, basis.measure, tensor, basis, "series")


def _default_nodes(order: int) -> int:
    return {1: 4096, 2: 256, 3: 64}.get(order, 32)


def coefficients_from_kernel(
    kernel: Kernel,
    basis: OrthonormalBasis,
    max_index: int,
    nodes: Optional[int] = None,
    drop: float = DROP_THRESHOLD,
) -> CoefficientTensor:
    """Project onto ``e_{i_1} x ... x e_{i_m}`` for ``1 <= i_k <= max_index``.

    Uses tensor-product quadrature of the basis measure; coefficients with
    magnitude below ``drop`` are discarded.
    """
    if kernel.measure != basis.measure:
        raise ValueError("kernel measure does not match the basis measure")
    basis.check_index(max_index)
    m = kernel.order
    points, weights = basis.measure.quadrature(nodes or _default_nodes(m))
    q = len(points)
    grids = [points.reshape((1,) * k + (q,) + (1,) * (m - k - 1)) for k in range(m)]
    values = np.asarray(kernel(*grids), dtype=float)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("kernel produced non-finite values on the quadrature grid")
    proj = basis.evaluate_many(range(1, max_index + 1), points) * weights
    coeffs = values
    for _ in range(m):
        # contract the leading axis; the new axis goes to the back
        coeffs = np.tensordot(coeffs, proj, axes=([0], [1]))
    entries = {}
    for pos in zip(*np.nonzero(np.abs(coeffs) >= drop)):
        entries[tuple(int(p) + 1 for p in pos)] = float(coeffs[pos])
    return CoefficientTensor(m, entries)


def _conditional_mean(
    kernel: Kernel, slots: tuple[int, ...], free: list[np.ndarray], nodes: Optional[int]
) -> np.ndarray:
    """``E`` over the coordinates in ``slots`` with the others fixed at ``free``.

    ``free`` holds arrays for the remaining slots in increasing slot order,
    all broadcastable to a common shape.
    """
    m = kernel.order
    points, weights = kernel.measure.quadrature(nodes or CONDITIONAL_NODES)
    q = len(points)
    base = np.broadcast_shapes(*(np.shape(f) for f in free)) if free else ()
    s = len(slots)
    slot_pos = {slot: j for j, slot in enumerate(slots)}
    args = []
    it = iter(free)
    for k in range(m):
        if k in slot_pos:
            j = slot_pos[k]
            args.append(points.reshape((1,) * len(base) + (1,) * j + (q,) + (1,) * (s - j - 1)))
        else:
            arr = np.broadcast_to(np.asarray(next(it)), base)
            args.append(arr.reshape(base + (1,) * s))
    values = np.asarray(kernel(*args), dtype=float)
    for _ in range(s):
        values = values @ weights
    return values


def canonicality_defect(
    kernel: Kernel, grid: Optional[np.ndarray] = None, nodes: Optional[int] = None
) -> float:
    """``max_k max_grid |E_{X*_k} f|`` with the other coordinates on ``grid``."""
    m = kernel.order
    g = np.asarray(kernel.measure.grid() if grid is None else grid)
    worst = 0.0
    for k in range(m):
        free = [
            g.reshape((1,) * j + (g.size,) + (1,) * (m - 2 - j)) for j in range(m - 1)
        ]
        cm = _conditional_mean(kernel, (k,), free, nodes)
        if not np.all(np.isfinite(cm)):
            raise FloatingPointError("non-finite conditional expectation")
        worst = max(worst, float(np.max(np.abs(cm))))
    return worst


def hoeffding_project(kernel: Kernel, nodes: Optional[int] = None) -> Kernel:
    """Top-order projection ``prod_k (I - E_k) f``.

    Expands by inclusion-exclusion over subsets ``S`` of the coordinates:
    ``sum_S (-1)^{|S|} E_S f``. The full-subset term is a constant computed
    once.
    """
    m = kernel.order
    subsets = [
        s for r in range(m + 1) for s in itertools.combinations(range(m), r)
    ]
    full = tuple(range(m))
    constant = float(_conditional_mean(kernel, full, [], nodes))
    if not math.isfinite(constant):
        raise FloatingPointError("non-finite kernel mean")

    def evaluator(*ts):
        shape = np.broadcast_shapes(*(np.shape(t) for t in ts))
        total = np.zeros(shape)
        for s in subsets:
            sign = -1.0 if len(s) % 2 else 1.0
            if s == ():
                term = kernel(*ts)
            elif s == full:
                term = constant
            else:
                free = [ts[k] for k in range(m) if k not in s]
                term = _conditional_mean(kernel, s, free, nodes)
            total = total + sign * term
        if not np.all(np.isfinite(total)):
            raise FloatingPointError("non-finite value in projected kernel")
        return total

    return Kernel(m, evaluator, kernel.measure, None, None, f"proj({kernel.name})")


def kernel_mean(kernel: Kernel, nodes: Optional[int] = None) -> float:
    """``E f(X*_1, ..., X*_m)`` under the product measure."""
    return float(_conditional_mean(kernel, tuple(range(kernel.order)), [], nodes))


EXPLICIT_KERNELS: dict[str, tuple[int, Callable[..., np.ndarray]]] = {
    "product": (2, lambda s, t: s * t),
    "exp_sum": (2, lambda s, t: np.exp(s + t)),
    "cos_diff": (2, lambda s, t: 2.0 * np.cos(2.0 * math.pi * (s - t))),
}


def named_kernel(name: str, measure: Measure) -> Kernel:
    try:
        order, func = EXPLICIT_KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; known: {sorted(EXPLICIT_KERNELS)}") from None
    return kernel_from_function(func, order, measure, name)
