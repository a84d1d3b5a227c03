"""Stationary phi-mixing processes with known mixing coefficients.

Every process turns a row of i.i.d. uniforms into a sample through a fixed
transform, so ``sample(seed, n)`` is bit-reproducible and is a prefix of
``sample(seed, n')`` for ``n' > n``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import comb

from .basis import FiniteMeasure, Measure, UniformMeasure
from .kernels import CoefficientTensor, coefficient_norm
from .seeding import uniforms
from .stats import Sample

PHI_TOL = 1e-15
MAX_PHI_TERMS = 1_000_000
MAX_ATOMS = 10_000


@dataclass(frozen=True)
class MixingProcess:
    """Immutable descriptor of a stationary sequence.

    ``transform`` maps an array of uniforms with shape
    ``(batch, extra_uniforms + uniforms_per_step * n)`` to samples of shape
    ``(batch, n)``.
    """

    id: str
    kind: str
    law: Measure
    phi: Callable[[int], float]
    phi_kind: str
    ac_satisfied: bool
    ac_note: str
    transform: Callable[[np.ndarray, int], np.ndarray] = field(repr=False)
    uniforms_per_step: int = 1
    extra_uniforms: int = 0
    zero_beyond: Optional[int] = None
    params: dict = field(default_factory=dict, compare=False)
    phi_tail: Optional[Callable[[int, bool], float]] = field(default=None, repr=False)

    def phi_upper(self, k: int) -> float:
        if k < 1:
            raise ValueError("mixing lag must be positive")
        if self.zero_beyond is not None and k > self.zero_beyond:
            return 0.0
        return float(self.phi(k))

    def uniforms_needed(self, n: int) -> int:
        return self.extra_uniforms + self.uniforms_per_step * n

    def sample_batch(self, seeds: Sequence[int], n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("sample size must be positive")
        count = self.uniforms_needed(n)
        u = np.stack([uniforms(int(s), count) for s in seeds]) if len(seeds) else np.empty((0, count))
        return self.transform(u, n)

    def sample(self, seed: int, n: int) -> Sample:
        points = self.sample_batch([seed], n)[0]
        return Sample(points, {"process": self.id, "seed": int(seed)})


def iid_process(law: Measure, process_id: Optional[str] = None) -> MixingProcess:
    """Independent copies of a single draw from ``law``."""

    def transform(u: np.ndarray, n: int) -> np.ndarray:
        return law.sample_from_uniforms(u[:, :n])

    return MixingProcess(
        id=process_id or f"iid-{law.name}",
        kind="iid",
        law=law,
        phi=lambda k: 0.0,
        phi_kind="exact",
        ac_satisfied=True,
        ac_note="independent coordinates: joint law equals the product law",
        transform=transform,
        zero_beyond=0,
        params={"law": law.to_dict()},
    )


def irwin_hall_cdf(x: np.ndarray, terms: int) -> np.ndarray:
    """CDF of a sum of ``terms`` independent uniforms on [0, 1]."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for j in range(terms + 1):
        total += (-1) ** j * comb(terms, j) * np.clip(x - j, 0.0, None) ** terms
    return np.clip(total / math.factorial(terms), 0.0, 1.0)


def _irwin_hall(window: np.ndarray) -> np.ndarray:
    return irwin_hall_cdf(window.sum(axis=-1), window.shape[-1])


def _frac_sum(window: np.ndarray) -> np.ndarray:
    return np.mod(window.sum(axis=-1), 1.0)


# (driver alphabet size or None for uniform drivers, map, marginal law factory, AC note)
WINDOW_MAPS: dict[str, tuple] = {
    "irwin_hall": (
        None,
        _irwin_hall,
        lambda d: UniformMeasure(),
        "window sums of distinct indices have a joint density (full-rank linear map of "
        "uniform drivers) and the Irwin-Hall CDF is smooth and strictly increasing",
    ),
    "frac_sum": (
        None,
        _frac_sum,
        lambda d: UniformMeasure(),
        "each coordinate is a uniform shift modulo 1 of a fresh driver, so the joint "
        "law has a density (in fact it is the product law)",
    ),
    "mod_sum": (
        "alphabet",
        None,
        lambda d: FiniteMeasure(tuple([1.0 / d] * d)),
        "finite alphabet with every tuple of positive probability under the product law",
    ),
}


def m_dependent_process(
    window: int,
    map_name: str = "irwin_hall",
    alphabet: int = 2,
    process_id: Optional[str] = None,
) -> MixingProcess:
    """``X_j = g(xi_j, ..., xi_{j+window})`` from i.i.d. drivers.

    ``irwin_hall`` pushes the window sum through its own CDF (uniform
    marginal, genuinely dependent). ``frac_sum`` takes the sum modulo 1; its
    marginals are uniform but the coordinates turn out independent.
    ``mod_sum`` works on the alphabet ``{0..alphabet-1}`` with uniform
    drivers.
    """
    if window < 1:
        raise ValueError("window must be positive")
    try:
        driver, func, law_factory, note = WINDOW_MAPS[map_name]
    except KeyError:
        raise ValueError(f"unknown map {map_name!r}; known: {sorted(WINDOW_MAPS)}") from None
    law = law_factory(alphabet)
    width = window + 1

    def transform(u: np.ndarray, n: int) -> np.ndarray:
        xi = u[:, : n + window]
        if driver == "alphabet":
            xi = np.minimum(np.floor(xi * alphabet), alphabet - 1).astype(np.int64)
            win = np.lib.stride_tricks.sliding_window_view(xi, width, axis=1)
            return np.mod(win.sum(axis=-1), alphabet)
        win = np.lib.stride_tricks.sliding_window_view(xi, width, axis=1)
        return func(win)

    return MixingProcess(
        id=process_id or f"mdep{window}-{map_name}",
        kind="m_dependent",
        law=law,
        phi=lambda k: 1.0 if k <= window else 0.0,
        phi_kind="upper-bound",
        ac_satisfied=True,
        ac_note=note,
        transform=transform,
        extra_uniforms=window,
        zero_beyond=window,
        params={"window": window, "map": map_name, "alphabet": alphabet},
    )


def _bool_power(A: np.ndarray, k: int) -> np.ndarray:
    result = np.eye(A.shape[0], dtype=bool)
    while k:
        if k & 1:
            result = (result.astype(np.int64) @ A.astype(np.int64)) > 0
        A = (A.astype(np.int64) @ A.astype(np.int64)) > 0
        k >>= 1
    return result


def classify_chain(P: np.ndarray) -> str:
    """``"ok"`` for an irreducible aperiodic chain, else ``"reducible"``/``"periodic"``."""
    d = P.shape[0]
    support = P > 0
    if not _bool_power(np.eye(d, dtype=bool) | support, d - 1).all():
        return "reducible"
    # Wielandt: a primitive matrix has P^k > 0 for k = (d-1)^2 + 1
    return "ok" if _bool_power(support, (d - 1) ** 2 + 1).all() else "periodic"


def validate_transition(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
        raise ValueError("transition matrix must be square with at least 2 states")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
        raise ValueError("transition matrix rows must be probability vectors")
    status = classify_chain(P)
    if status != "ok":
        raise ValueError(f"transition matrix is {status}; need an irreducible aperiodic chain")
    return P


def stationary_distribution(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    d = P.shape[0]
    A = np.vstack((P.T - np.eye(d), np.ones((1, d))))
    b = np.zeros(d + 1)
    b[-1] = 1.0
    pi = np.linalg.lstsq(A, b, rcond=None)[0]
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _tv_rows(Pk: np.ndarray, pi: np.ndarray) -> np.ndarray:
    return 0.5 * np.abs(Pk - pi).sum(axis=1)


def phi_markov_exact(P, k: int) -> float:
    """``max_x TV(P^k(x, .), pi)``, the phi coefficient of the stationary chain."""
    P = validate_transition(P)
    if k < 1:
        raise ValueError("lag must be positive")
    pi = stationary_distribution(P)
    return float(_tv_rows(np.linalg.matrix_power(P, k), pi).max())


def phi_brute_force(
    P, k: int, past_horizon: int, future_horizon: int, exhaustive: Optional[bool] = None
) -> float:
    """Supremum of ``|P(AB) - P(A)P(B)| / P(A)`` over cylinder events.

    ``A`` ranges over unions of atoms of ``(X_1..X_p)``, ``B`` over unions of
    atoms of ``(X_{p+k}..X_{p+k+q-1})``. For fixed ``A`` the best ``B`` is the
    set of future atoms where the conditional law exceeds the marginal, so the
    inner supremum is a total-variation distance. With ``exhaustive`` every
    nonempty union of past atoms is enumerated; otherwise single atoms are
    used, which is exact because ``P(B | A)`` is a convex combination of
    ``P(B | a)`` over the atoms ``a`` of ``A``.
    """
    P = validate_transition(P)
    d = P.shape[0]
    if k < 1 or past_horizon < 1 or future_horizon < 1:
        raise ValueError("lag and horizons must be positive")
    n_past, n_future = d**past_horizon, d**future_horizon
    if n_past > MAX_ATOMS or n_future > MAX_ATOMS:
        raise ValueError(f"horizon too large: {n_past} past / {n_future} future atoms")
    pi = stationary_distribution(P)
    Pk = np.linalg.matrix_power(P, k)

    def path_prob(paths: np.ndarray) -> np.ndarray:
        prob = np.ones(len(paths))
        for a, b in zip(paths.T[:-1], paths.T[1:]):
            prob *= P[a, b]
        return prob

    past = np.array(list(itertools.product(range(d), repeat=past_horizon)))
    future = np.array(list(itertools.product(range(d), repeat=future_horizon)))
    p_past = pi[past[:, 0]] * path_prob(past)
    tail = path_prob(future)
    p_future = pi[future[:, 0]] * tail
    cond = Pk[past[:, -1]][:, future[:, 0]] * tail  # P(b | a), rows = past atoms

    if exhaustive is None:
        exhaustive = n_past <= 16 and (2**n_past) * n_future <= 5_000_000
    if not exhaustive:
        return float(np.clip(cond - p_future, 0.0, None).sum(axis=1).max())
    masks = (np.arange(1, 2**n_past)[:, None] >> np.arange(n_past)[None, :]) & 1
    weights = masks * p_past
    p_a = weights.sum(axis=1)
    cond_a = (weights @ cond) / p_a[:, None]
    return float(np.clip(cond_a - p_future, 0.0, None).sum(axis=1).max())


def markov_process(P, process_id: Optional[str] = None) -> MixingProcess:
    """Stationary finite-state chain started from its stationary law."""
    P = validate_transition(P)
    d = P.shape[0]
    pi = stationary_distribution(P)
    law = FiniteMeasure(tuple((pi / math.fsum(pi.tolist())).tolist()))
    cum = np.cumsum(P, axis=1)[:, :-1]
    pi_cum = np.cumsum(pi)[:-1]
    powers: list[np.ndarray] = [np.eye(d)]

    def power(k: int) -> np.ndarray:
        while len(powers) <= k:
            powers.append(powers[-1] @ P)
        return powers[k]

    def phi(k: int) -> float:
        return float(_tv_rows(power(k), pi).max())

    def dbar(k: int) -> float:
        Pk = power(k)
        return float(max(0.5 * np.abs(Pk[x] - Pk[y]).sum() for x in range(d) for y in range(d)))

    def tail(K: int, sqrt: bool) -> float:
        # phi(k) <= dbar(k) and dbar is submultiplicative, so phi(k) <= dbar(K)^floor(k/K)
        rho = dbar(K)
        if rho >= 1.0:
            return math.inf
        r = math.sqrt(rho) if sqrt else rho
        return K * r / (1.0 - r)

    def transform(u: np.ndarray, n: int) -> np.ndarray:
        out = np.empty((u.shape[0], n), dtype=np.int64)
        out[:, 0] = np.searchsorted(pi_cum, u[:, 0], side="right")
        for t in range(1, n):
            out[:, t] = (u[:, t, None] >= cum[out[:, t - 1]]).sum(axis=1)
        return out

    ac_ok = bool(np.all(pi > 0))
    return MixingProcess(
        id=process_id or f"markov{d}",
        kind="markov",
        law=law,
        phi=phi,
        phi_kind="exact",
        ac_satisfied=ac_ok,
        ac_note="finite alphabet with all stationary probabilities positive: joint law "
        "is dominated by the product law",
        transform=transform,
        zero_beyond=None,
        params={"transition": P.tolist()},
        phi_tail=tail,
    )


def mapped_process(
    parent: MixingProcess, func: Callable[[np.ndarray], np.ndarray], law: Measure, process_id: str
) -> MixingProcess:
    """Process ``g(X_j)``; the parent's mixing coefficients carry over unchanged."""

    def transform(u: np.ndarray, n: int) -> np.ndarray:
        return func(parent.transform(u, n))

    return MixingProcess(
        id=process_id,
        kind=f"mapped:{parent.kind}",
        law=law,
        phi=parent.phi,
        phi_kind=parent.phi_kind,
        ac_satisfied=parent.ac_satisfied,
        ac_note=f"inherited from {parent.id}: {parent.ac_note}",
        transform=transform,
        uniforms_per_step=parent.uniforms_per_step,
        extra_uniforms=parent.extra_uniforms,
        zero_beyond=parent.zero_beyond,
        params={"parent": parent.id, **parent.params},
        phi_tail=parent.phi_tail,
    )


def dithered_markov_process(P, process_id: Optional[str] = None) -> MixingProcess:
    """``Y_j = (X_j + V_j) / d`` with ``V_j`` i.i.d. uniform, ``X`` a chain with uniform ``pi``.

    ``(X_j, V_j)`` is again a stationary Markov chain whose k-step laws differ
    from stationarity only through ``X``, so ``Y`` inherits the chain's phi.
    The marginal of ``Y`` is uniform on [0, 1] exactly when ``pi`` is uniform.
    """
    chain = markov_process(P)
    d = chain.law.size
    if max(abs(p - 1.0 / d) for p in chain.law.probabilities) > 1e-12:
        raise ValueError("dithering to a uniform marginal needs a uniform stationary law")

    def transform(u: np.ndarray, n: int) -> np.ndarray:
        pairs = u[:, : 2 * n].reshape(u.shape[0], n, 2)
        x = chain.transform(np.ascontiguousarray(pairs[:, :, 0]), n)
        return (x + pairs[:, :, 1]) / d

    return MixingProcess(
        id=process_id or f"dithered-markov{d}",
        kind="dithered_markov",
        law=UniformMeasure(),
        phi=chain.phi,
        phi_kind=chain.phi_kind,
        ac_satisfied=True,
        ac_note="joint law of distinct coordinates has a density: a chain-weighted mixture "
        "of products of uniform cells",
        transform=transform,
        uniforms_per_step=2,
        params={"transition": chain.params["transition"], "dithered": True},
        phi_tail=chain.phi_tail,
    )


@dataclass(frozen=True)
class PhiProfile:
    """Mixing coefficients plus certified aggregates ``sum phi`` and ``sum sqrt(phi)``."""

    phi: Callable[[int], float]
    sum_phi: float
    sum_sqrt_phi: float
    terms: int
    tail_phi: float
    tail_sqrt_phi: float
    zero_beyond: Optional[int] = None
    label: str = ""

    @property
    def phi_effective(self) -> float:
        """``1 + sum_{k>=1} phi(k)``, i.e. the lag-0 term ``phi(0) := 1`` included."""
        return 1.0 + self.sum_phi

    def values(self, count: int) -> np.ndarray:
        return np.array([self.phi(k) for k in range(1, count + 1)])


def phi_profile(
    phi: Callable[[int], float] | MixingProcess,
    zero_beyond: Optional[int] = None,
    tail: Optional[Callable[[int, bool], float]] = None,
    tol: float = PHI_TOL,
    max_terms: int = MAX_PHI_TERMS,
    label: str = "",
) -> PhiProfile:
    """Sum ``phi`` and ``sqrt(phi)`` up to the first lag with ``phi < tol``.

    The remainder is bounded by ``tail(K, sqrt)`` when given, else by a
    geometric majorant fitted to the last two values.
    """
    if isinstance(phi, MixingProcess):
        proc = phi
        return phi_profile(
            proc.phi_upper, proc.zero_beyond, proc.phi_tail, tol, max_terms, label or proc.id
        )
    if zero_beyond is not None:
        vals = [float(phi(k)) for k in range(1, zero_beyond + 1)]
        return PhiProfile(
            lambda k, _f=phi, _z=zero_beyond: float(_f(k)) if k <= _z else 0.0,
            math.fsum(vals),
            math.fsum(math.sqrt(v) for v in vals),
            zero_beyond,
            0.0,
            0.0,
            zero_beyond,
            label,
        )
    vals: list[float] = []
    for k in range(1, max_terms + 1):
        v = float(phi(k))
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"phi({k}) = {v} is outside [0, 1]")
        vals.append(v)
        if v < tol:
            break
    else:
        raise ValueError(f"phi did not fall below {tol} within {max_terms} lags; treated as divergent")
    K = len(vals)
    if vals[-1] == 0.0 and tail is None:
        tail_phi = tail_sqrt = 0.0
    elif tail is not None:
        tail_phi, tail_sqrt = tail(K, False), tail(K, True)
    else:
        prev = vals[-2] if K >= 2 else 1.0
        ratio = vals[-1] / prev if prev > 0 else 0.0
        if ratio >= 1.0:
            raise ValueError("phi tail is not geometrically decreasing")
        tail_phi = vals[-1] * ratio / (1.0 - ratio)
        sr = math.sqrt(ratio)
        tail_sqrt = math.sqrt(vals[-1]) * sr / (1.0 - sr)
    if not (math.isfinite(tail_phi) and math.isfinite(tail_sqrt)):
        raise ValueError("could not certify the phi tail")
    return PhiProfile(
        phi,
        math.fsum(vals) + tail_phi,
        math.fsum(math.sqrt(v) for v in vals) + tail_sqrt,
        K,
        tail_phi,
        tail_sqrt,
        None,
        label,
    )


@dataclass(frozen=True)
class ConditionReport:
    which: str
    passed: bool
    aggregates: dict
    witness: Optional[int] = None
    message: str = ""


def minimal_c0(profile_phi: Callable[[int], float], c1: float, upto: int) -> float:
    return max((profile_phi(k) * math.exp(c1 * k * k) for k in range(1, upto + 1)), default=0.0)


def check_condition(
    process: MixingProcess,
    tensor: CoefficientTensor,
    which: str,
    c0: Optional[float] = None,
    c1: float = 1.0,
    epsilon: Optional[float] = None,
) -> ConditionReport:
    """Check the kernel/mixing hypotheses ``A`` (Gaussian phi decay) or ``B``."""
    which = which.upper()
    if which == "A":
        if c1 <= 0:
            raise ValueError("c1 must be positive")
        abs_sum = coefficient_norm(tensor, 1.0)
        if c0 is None:
            c0 = minimal_c0(process.phi_upper, c1, process.zero_beyond or 1)
        aggregates = {"sum_abs_f": abs_sum, "c0": c0, "c1": c1}
        k = 1
        while True:
            lhs = process.phi_upper(k)
            rhs = c0 * math.exp(-c1 * k * k) if c1 * k * k < 745 else 0.0
            if lhs > rhs * (1 + 1e-12):
                return ConditionReport(
                    "A", False, aggregates, k,
                    f"phi({k}) = {lhs:.6g} exceeds c0*exp(-c1*k^2) = {rhs:.6g}",
                )
            if lhs < PHI_TOL and rhs < PHI_TOL:
                break
            k += 1
        aggregates["checked_lags"] = k
        return ConditionReport("A", math.isfinite(abs_sum), aggregates, None, "condition A holds")
    if which == "B":
        if epsilon is None or not 0.0 < epsilon < 1.0:
            raise ValueError("condition B needs epsilon in (0, 1)")
        cnorm = coefficient_norm(tensor, 1.0 - epsilon)
        try:
            prof = phi_profile(process)
        except ValueError as exc:
            return ConditionReport("B", False, {"c": cnorm, "epsilon": epsilon}, None, str(exc))
        aggregates = {
            "c": cnorm,
            "epsilon": epsilon,
            "sum_phi": prof.sum_phi,
            "sum_sqrt_phi": prof.sum_sqrt_phi,
            "terms": prof.terms,
            "tail_phi": prof.tail_phi,
            "tail_sqrt_phi": prof.tail_sqrt_phi,
        }
        return ConditionReport("B", True, aggregates, None, "condition B holds")
    raise ValueError(f"unknown condition {which!r}")
