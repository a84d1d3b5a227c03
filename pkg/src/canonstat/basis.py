"""Uniformly bounded orthonormal bases containing the constant function.

Two state spaces are supported:

* the unit interval with the uniform law, using the real trigonometric system;
* a finite alphabet ``{0, ..., d-1}`` with a strictly positive probability
  vector, using Gram-Schmidt on the indicator functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

SQRT2 = math.sqrt(2.0)

DEFAULT_NODES = 4096
GAUSS_ORDER = 8


@lru_cache(maxsize=32)
def _composite_gauss_legendre(nodes: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    if nodes < order or nodes % order:
        order = 1 if nodes < order else math.gcd(nodes, order)
    panels = nodes // order
    x, w = np.polynomial.legendre.leggauss(order)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    left = np.arange(panels) / panels
    points = (left[:, None] + x[None, :] / panels).ravel()
    weights = np.tile(w / panels, panels)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


@dataclass(frozen=True)
class UniformMeasure:
    """Uniform distribution on [0, 1]."""

    name: str = "uniform01"

    def quadrature(self, nodes: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
        """Composite Gauss-Legendre rule with ``nodes`` points (8 per panel)."""
        return _composite_gauss_legendre(nodes or DEFAULT_NODES, GAUSS_ORDER)

    def grid(self, size: int = 64) -> np.ndarray:
        return np.linspace(0.0, 1.0, size)

    def sample_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, dtype=float)

    def contains(self, points) -> bool:
        pts = np.asarray(points, dtype=float)
        return bool(np.all((pts >= 0.0) & (pts <= 1.0)))

    def to_dict(self) -> dict:
        return {"kind": "uniform01"}


@dataclass(frozen=True)
class FiniteMeasure:
    """Probability vector on the alphabet ``{0, ..., d-1}``."""

    probabilities: tuple[float, ...]
    name: str = "finite"

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("alphabet size must be at least 2")
        if not np.all(np.isfinite(p)) or np.any(p <= 0.0):
            raise ValueError("all probabilities must be strictly positive")
        if abs(math.fsum(p.tolist()) - 1.0) > 1e-12:
            raise ValueError(
                f"probabilities must sum to 1 within 1e-12 (got {math.fsum(p.tolist())!r})"
            )
        object.__setattr__(self, "probabilities", tuple(float(v) for v in p))

    @property
    def size(self) -> int:
        return len(self.probabilities)

    def quadrature(self, nodes: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
        return np.arange(self.size), np.asarray(self.probabilities)

    def grid(self, size: int = 64) -> np.ndarray:
        return np.arange(self.size)

    def sample_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        cum = np.cumsum(self.probabilities)
        idx = np.searchsorted(cum, np.asarray(u), side="right")
        return np.minimum(idx, self.size - 1)

    def contains(self, points) -> bool:
        pts = np.asarray(points)
        if pts.size == 0:
            return True
        return bool(np.all((pts == np.round(pts)) & (pts >= 0) & (pts < self.size)))

    def to_dict(self) -> dict:
        return {"kind": "finite", "probabilities": list(self.probabilities)}


Measure = UniformMeasure | FiniteMeasure


@dataclass(frozen=True)
class OrthonormalBasis:
    """Indexed family ``e_0 = 1, e_1, e_2, ...`` orthonormal in L2(measure).

    ``function(i, t)`` must accept a scalar index and an array of points and
    return an array of the same shape. ``bound`` is the uniform bound
    ``sup_{i,t} |e_i(t)|`` over the usable indices.
    """

    function: Callable[[int, np.ndarray], np.ndarray]
    bound: float
    measure: Measure
    max_index: Optional[int] = None
    name: str = "custom"
    values: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def evaluate(self, index: int, points) -> np.ndarray | float:
        if index < 0:
            raise ValueError("basis index must be nonnegative")
        if self.max_index is not None and index > self.max_index:
            raise ValueError(f"index {index} exceeds max usable index {self.max_index}")
        pts = np.asarray(points)
        out = self.function(int(index), pts)
        if np.ndim(out) == 0:
            return float(out)
        return out

    def evaluate_many(self, indices: Sequence[int], points) -> np.ndarray:
        """Matrix of values with shape ``(len(indices),) + points.shape``."""
        pts = np.asarray(points)
        return np.stack([np.broadcast_to(self.evaluate(i, pts), pts.shape) for i in indices])

    def check_index(self, index: int) -> None:
        if self.max_index is not None and index > self.max_index:
            raise ValueError(f"index {index} exceeds max usable index {self.max_index}")

    def to_dict(self) -> dict:
        if self.values is None:
            return {"kind": self.name, "bound": self.bound}
        return {
            "kind": "finite",
            "probabilities": list(self.measure.probabilities),
            "values": self.values.tolist(),
        }


def _trig(index: int, t: np.ndarray) -> np.ndarray:
    if index == 0:
        return np.ones(np.shape(t))
    k = (index + 1) // 2
    arg = 2.0 * math.pi * k * np.asarray(t, dtype=float)
    if index % 2:
        return SQRT2 * np.cos(arg)
    return SQRT2 * np.sin(arg)


def make_trig_basis() -> OrthonormalBasis:
    """Real Fourier basis on [0, 1]: 1, sqrt2 cos(2 pi k t), sqrt2 sin(2 pi k t)."""
    return OrthonormalBasis(
        function=_trig, bound=SQRT2, measure=UniformMeasure(), max_index=None, name="trig"
    )


def _finite_from_values(values: np.ndarray, measure: FiniteMeasure) -> OrthonormalBasis:
    values = np.array(values, dtype=float)
    values.setflags(write=False)

    def table(index: int, t: np.ndarray) -> np.ndarray:
        pts = np.asarray(t)
        return values[index][pts.astype(np.intp)]

    return OrthonormalBasis(
        function=table,
        bound=float(np.max(np.abs(values))),
        measure=measure,
        max_index=values.shape[0] - 1,
        name="finite",
        values=values,
    )


def make_finite_basis(probabilities: Sequence[float]) -> OrthonormalBasis:
    """Gram-Schmidt basis of L2 on a finite alphabet.

    Starts from the constant function followed by the indicators of
    ``0, 1, ..., d-2`` (the last indicator is linearly dependent). Each
    function is flipped so its first nonzero value is positive.
    """
    measure = FiniteMeasure(tuple(probabilities))
    p = np.asarray(measure.probabilities)
    d = p.size
    candidates = [np.ones(d)] + [np.eye(d)[x] for x in range(d - 1)]
    # e_0 is exactly the constant; normalizing by sqrt(sum p) could perturb it by an ulp
    basis: list[np.ndarray] = [candidates.pop(0)]
    for v in candidates:
        w = v.astype(float).copy()
        # two passes of modified Gram-Schmidt keep the Gram defect at rounding level
        for _ in range(2):
            for e in basis:
                w -= np.dot(p * w, e) * e
        norm = math.sqrt(float(np.dot(p * w, w)))
        w /= norm
        nz = np.flatnonzero(np.abs(w) > 1e-14)
        if nz.size and w[nz[0]] < 0:
            w = -w
        basis.append(w)
    return _finite_from_values(np.vstack(basis), measure)


def finite_basis_to_json(basis: OrthonormalBasis) -> str:
    if basis.values is None:
        raise ValueError("only finite-alphabet bases serialize to a value matrix")
    return json.dumps(basis.to_dict())


def finite_basis_from_json(text: str | dict) -> OrthonormalBasis:
    data = json.loads(text) if isinstance(text, str) else text
    measure = FiniteMeasure(tuple(data["probabilities"]))
    values = np.asarray(data["values"], dtype=float)
    if values.shape != (measure.size, measure.size):
        raise ValueError(f"value matrix must be {measure.size}x{measure.size}")
    return _finite_from_values(values, measure)


@dataclass(frozen=True)
class DefectReport:
    defect: float
    tolerance: float
    max_index: int
    passed: bool
    message: str = ""


def gram_matrix(basis: OrthonormalBasis, max_index: int, nodes: Optional[int] = None) -> np.ndarray:
    points, weights = basis.measure.quadrature(nodes)
    vals = basis.evaluate_many(range(max_index + 1), points)
    return (vals * weights) @ vals.T


def check_orthonormality(
    basis: OrthonormalBasis, max_index: int, tolerance: float, nodes: Optional[int] = None
) -> DefectReport:
    """Maximal deviation of the Gram matrix of ``e_0..e_max_index`` from identity."""
    if max_index < 1:
        raise ValueError("max_index must be positive")
    basis.check_index(max_index)
    with np.errstate(all="ignore"):
        gram = gram_matrix(basis, max_index, nodes)
    if not np.all(np.isfinite(gram)):
        return DefectReport(math.inf, tolerance, max_index, False, "non-finite quadrature values")
    defect = float(np.max(np.abs(gram - np.eye(max_index + 1))))
    return DefectReport(defect, tolerance, max_index, defect <= tolerance)


def mean_defect(basis: OrthonormalBasis, max_index: int, nodes: Optional[int] = None) -> float:
    """``max_{1<=i<=max_index} |E e_i(X)|``; zero for a valid basis."""
    points, weights = basis.measure.quadrature(nodes)
    vals = basis.evaluate_many(range(1, max_index + 1), points)
    return float(np.max(np.abs(vals @ weights)))


def scaled_basis(basis: OrthonormalBasis, index: int, factor: float) -> OrthonormalBasis:
    """Copy of ``basis`` with a single element multiplied by ``factor``."""

    def function(i: int, t: np.ndarray) -> np.ndarray:
        out = basis.function(i, t)
        return out * factor if i == index else out

    return OrthonormalBasis(
        function=function,
        bound=basis.bound * max(1.0, abs(factor)),
        measure=basis.measure,
        max_index=basis.max_index,
        name=f"{basis.name}-scaled",
    )
