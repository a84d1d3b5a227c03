"""Exponential tail bounds for canonical U/V-statistics and their constants.

Every constant that enters a :class:`BoundCertificate` is recorded in its
``trace`` together with the formula it came from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaincc, gammaln

from .kernels import CoefficientTensor, coefficient_norm
from .mixing import PhiProfile
from .stats import set_partitions

E_1E = math.exp(1.0 / math.e)
N_SEARCH_MAX = 1_000_000
SERIES_REL_TOL = 1e-15


@dataclass(frozen=True)
class TraceEntry:
    name: str
    value: float
    source: str

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "source": self.source}


def _entry(name: str, value: float, source: str) -> TraceEntry:
    return TraceEntry(name, float(value), source)


def b_of_f(
    tensor: CoefficientTensor, C: float, condition: str, epsilon: Optional[float] = None
) -> float:
    """Kernel scale ``B(f)`` of the exponent ``x^{2/m} / B(f)``.

    Condition A: ``(C^m sum|f|)^{2/m}``.
    Condition B: ``C^2 (sum|f|^{1-eps})^{2/(m(1-eps))}``.
    """
    if len(tensor) == 0:
        raise ValueError("B(f) is undefined for the zero kernel")
    m = tensor.order
    condition = condition.upper()
    if condition == "A":
        return (C**m * coefficient_norm(tensor, 1.0)) ** (2.0 / m)
    if condition == "B":
        if epsilon is None or not 0.0 < epsilon < 1.0:
            raise ValueError("condition B needs epsilon in (0, 1)")
        c = coefficient_norm(tensor, 1.0 - epsilon)
        return C**2 * c ** (2.0 / (m * (1.0 - epsilon)))
    raise ValueError(f"unknown condition {condition!r}")


def exponent_scale(x, m: int, Bf: float) -> np.ndarray:
    return np.asarray(x, dtype=float) ** (2.0 / m) / Bf


@lru_cache(maxsize=1)
def gamma_power_constant() -> tuple[float, float]:
    """``c3 = sup_{t>0} Gamma(t) / t^{t-4}`` and the maximizer.

    The ratio tends to 0 at both ends, so a log grid on (0, 50] followed by a
    bounded local search finds the supremum.
    """

    def log_ratio(t):
        return gammaln(t) - (t - 4.0) * np.log(t)

    grid = np.logspace(-4, math.log10(50.0), 4000)
    vals = log_ratio(grid)
    j = int(np.argmax(vals))
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    res = minimize_scalar(lambda t: -log_ratio(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    t_star = float(res.x)
    return float(math.exp(max(log_ratio(t_star), vals[j]))), t_star


@dataclass(frozen=True)
class Lemma1Constants:
    c2: float
    c3: float
    c_tilde: float
    trace: tuple[TraceEntry, ...]


def lemma1_constants(
    profile: PhiProfile,
    m: int = 1,
    max_order: Optional[int] = None,
    c0: Optional[float] = None,
    c1: Optional[float] = None,
) -> Lemma1Constants:
    """Constants of the mixed-moment bound ``|E S_n(i_1)...S_n(i_2mN)| <= (c~ C^2 mN)^{mN}``.

    ``c2 = max(1, 4 sum sqrt(phi), envelope)`` where the envelope is
    ``max_{2<=d<=max_order} c0 c3 / c1^{(d-1)/2}`` under Gaussian decay
    ``phi(k) <= c0 exp(-c1 k^2)``. Without such constants (only possible when
    ``phi`` has no finite support) the envelope is replaced by the quantity it
    majorizes, ``2 sum_k sqrt(phi(k)) k^{d-2} / d^{d/2-4}``, summed numerically.
    ``c~ = 8 c2``.
    """
    if not math.isfinite(profile.sum_sqrt_phi):
        raise ValueError("sum of sqrt(phi) diverges")
    D = max(2, max_order if max_order is not None else 2 * m)
    trace = []
    c3, t_star = gamma_power_constant()
    trace.append(_entry("c3", c3, f"sup_t Gamma(t)/t^(t-4), attained near t={t_star:.6f}"))
    first = 4.0 * profile.sum_sqrt_phi
    trace.append(_entry("4*sum_sqrt_phi", first, "4 * sum_{i>=1} phi(i)^(1/2), certified tail"))
    if c1 is None and c0 is None and profile.zero_beyond is not None:
        c1 = 1.0
    if c1 is not None:
        if c1 <= 0:
            raise ValueError("c1 must be positive")
        if c0 is None:
            upto = profile.zero_beyond if profile.zero_beyond is not None else profile.terms
            c0 = max((profile.phi(k) * math.exp(c1 * k * k) for k in range(1, upto + 1)),
                     default=0.0)
            trace.append(_entry("c0", c0, "minimal c0 with phi(k) <= c0*exp(-c1*k^2)"))
        else:
            trace.append(_entry("c0", c0, "supplied Gaussian-decay constant"))
        trace.append(_entry("c1", c1, "Gaussian-decay rate"))
        envelope = max(c0 * c3 / c1 ** ((d - 1) / 2.0) for d in range(2, D + 1))
        trace.append(_entry("envelope", envelope,
                            f"max_(2<=d<={D}) c0*c3/c1^((d-1)/2)"))
    else:
        kmax = 8 * profile.terms
        k = np.arange(1, kmax + 1, dtype=float)
        root = np.sqrt(profile.values(kmax))
        envelope = max(
            2.0 * math.fsum((root * k ** (d - 2)).tolist()) / d ** (d / 2.0 - 4.0)
            for d in range(2, D + 1)
        )
        trace.append(_entry("envelope", envelope,
                            f"max_(2<=d<={D}) 2*sum_k phi(k)^(1/2) k^(d-2) / d^(d/2-4), "
                            f"summed to k={kmax}"))
    c2 = max(1.0, first, envelope)
    trace.append(_entry("c2", c2, "max(1, 4*sum_sqrt_phi, envelope)"))
    c_tilde = 8.0 * c2
    trace.append(_entry("c_tilde", c_tilde, "8 * c2"))
    return Lemma1Constants(c2, c3, c_tilde, tuple(trace))


def lemma1_moment_bound(m: int, N: int, C: float, c_tilde: float) -> float:
    """``(c~ C^2 m N)^{mN}``."""
    if N < 1 or int(N) != N:
        raise ValueError("N must be a positive integer")
    return (c_tilde * C * C * m * N) ** (m * N)


def tail_bound_A(x, m: int, Bf: float, c_tilde: float, keep_e: bool = True):
    """``min(1, exp(-x^{2/m} / (e c~ B(f))))``.

    The optimized moment bound has exponent ``-x^{2/m}/(e c~ B(f))``;
    ``keep_e=False`` drops the factor ``e`` and gives the sharper displayed
    form.
    """
    scale = math.e * c_tilde if keep_e else c_tilde
    out = np.minimum(1.0, np.exp(-exponent_scale(x, m, Bf) / scale))
    return float(out) if np.ndim(out) == 0 else out


def tail_bound_A_integer(x, m: int, Bf: float, c_tilde: float, n_max: int = N_SEARCH_MAX):
    """Moment bound minimized over integer moment orders ``1 <= N <= n_max``.

    ``P(|V|>x) <= (sum|f| C^m)^{2N} (c~ m N)^{mN} / x^{2N}`` with
    ``sum|f| C^m = B(f)^{m/2}``. Returns ``(bound, N*)``.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    N = np.arange(1, n_max + 1, dtype=float)
    log_base = (m / 2.0) * math.log(Bf)
    base = 2.0 * N * log_base + m * N * np.log(c_tilde * m * N)
    bounds, orders = [], []
    for xv in xs:
        if xv <= 0:
            bounds.append(1.0)
            orders.append(0)
            continue
        logs = base - 2.0 * N * math.log(xv)
        j = int(np.argmin(logs))
        bounds.append(min(1.0, math.exp(min(logs[j], 0.0))))
        orders.append(j + 1)
    if np.ndim(x) == 0:
        return bounds[0], orders[0]
    return np.array(bounds), np.array(orders)


def k_of_x(x, m: int, epsilon: float, c_norm: float, C: float, phi_sum: float):
    """``K(x) = x^{2/m} / (16 e C^2 phi c^{2/(m(1-eps))})`` and ``gamma = 2eps/(m(1-eps))``."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    denom = 16.0 * math.e * C * C * phi_sum * c_norm ** (2.0 / (m * (1.0 - epsilon)))
    K = np.asarray(x, dtype=float) ** (2.0 / m) / denom
    gamma = 2.0 * epsilon / (m * (1.0 - epsilon))
    return (float(K) if np.ndim(K) == 0 else K), gamma


def _integral_tail(K: float, gamma: float, start: float) -> float:
    """``int_start^inf exp(-K t^gamma) dt``."""
    s = 1.0 / gamma
    z = K * start**gamma
    q = gammaincc(s, z)
    if q == 0.0:
        return 0.0
    return math.exp(gammaln(s) + math.log(q) - s * math.log(K)) / gamma


def stretched_series(K: float, gamma: float, cap: Optional[float] = None) -> float:
    """Certified upper value of ``sum_{i>=1} exp(-K i^gamma)``.

    Terms are added until the integral majorant of the remainder drops below
    ``1e-15`` of the partial sum; the remainder bound is then added. If
    ``cap`` is given and the integral minorant already exceeds it, ``inf`` is
    returned without summing.
    """
    if K <= 0:
        return math.inf
    if cap is not None and _integral_tail(K, gamma, 1.0) >= cap:
        return math.inf
    total = 0.0
    start = 1
    size = 64
    while True:
        i = np.arange(start, start + size, dtype=float)
        terms = np.exp(-K * i**gamma)
        total = math.fsum([total, *terms.tolist()])
        start += size
        remainder = _integral_tail(K, gamma, start - 1.0)
        if total == 0.0 or remainder <= SERIES_REL_TOL * total:
            return total + remainder
        if cap is not None and total >= cap:
            return math.inf
        size = min(size * 2, 1 << 20)


def closed_form_majorant(K: float, gamma: float) -> float:
    """Closed-form majorant of the series, valid when ``gamma K >= 1``.

    ``2 e^{-K}`` for ``gamma >= 1``; ``(l + 2) e^{-K}`` with
    ``l = floor(1/gamma - 1) + 1`` otherwise.
    """
    if gamma * K < 1.0:
        raise ValueError("closed form requires gamma*K >= 1")
    if gamma >= 1.0:
        return 2.0 * math.exp(-K)
    l = math.floor(1.0 / gamma - 1.0) + 1
    return (l + 2) * math.exp(-K)


def series_prefactor(gamma: float) -> int:
    """Multiplier of ``e^{-K}`` in :func:`closed_form_majorant`."""
    return 2 if gamma >= 1.0 else math.floor(1.0 / gamma - 1.0) + 3


def tail_bound_B(x, m: int, epsilon: float, c_norm: float, C: float, phi_sum: float):
    """``min(1, m e^{1/e} sum_{i>=1} exp(-K(x) i^gamma))``."""
    K, gamma = k_of_x(x, m, epsilon, c_norm, C, phi_sum)
    Ks = np.atleast_1d(K)
    cap = 1.0 / (m * E_1E)
    out = np.array([
        min(1.0, m * E_1E * stretched_series(float(k), gamma, cap)) if k > 0 else 1.0
        for k in Ks
    ])
    return float(out[0]) if np.ndim(K) == 0 else out


def tail_bound_B_closed(x, m: int, epsilon: float, c_norm: float, C: float, phi_sum: float):
    """``m e^{1/e} (l+2) e^{-K(x)}`` where ``gamma K(x) >= 1``; ``nan`` elsewhere."""
    K, gamma = k_of_x(x, m, epsilon, c_norm, C, phi_sum)
    Ks = np.atleast_1d(K)
    out = np.array([
        m * E_1E * closed_form_majorant(float(k), gamma) if gamma * k >= 1.0 else math.nan
        for k in Ks
    ])
    return float(out[0]) if np.ndim(K) == 0 else out


def remark2_threshold(m: int, epsilon: float, c_norm: float, C: float, phi_sum: float) -> float:
    """Smallest ``x`` with ``x^{2/m} >= 8 m (1-eps) e C^2 phi c^{2/(m(1-eps))} / eps``."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    rhs = (8.0 * m * (1.0 - epsilon) * math.e * C * C * phi_sum
           * c_norm ** (2.0 / (m * (1.0 - epsilon))) / epsilon)
    return rhs ** (m / 2.0)


def _phi_values(phi, count: int) -> np.ndarray:
    if isinstance(phi, PhiProfile):
        return phi.values(count)
    if callable(phi):
        return np.array([float(phi(k)) for k in range(1, count + 1)])
    vals = np.asarray(phi, dtype=float)
    if vals.size < count:
        vals = np.concatenate([vals, np.zeros(count - vals.size)])
    return vals[:count]


def dedecker_variance_term(n: int, phi) -> float:
    """``D_n = n phi(0) + sum_{k=1}^{n-1} (n-k) phi(k)`` with ``phi(0) := 1``."""
    vals = _phi_values(phi, n - 1)
    k = np.arange(1, n, dtype=float)
    return math.fsum([float(n), *((n - k) * vals).tolist()])


def dedecker_bound(t, n: int, C: float, phi):
    """``min(1, e^{1/e} exp(-t^2 / (16 C^2 e D_n)))`` for ``|sum Y_i - n E Y| > t``."""
    if n < 2:
        raise ValueError("need n >= 2")
    ts = np.asarray(t, dtype=float)
    if np.any(ts <= 0):
        raise ValueError("t must be positive")
    Dn = dedecker_variance_term(n, phi)
    out = np.minimum(1.0, E_1E * np.exp(-ts**2 / (16.0 * C * C * math.e * Dn)))
    return float(out) if np.ndim(out) == 0 else out


def hoeffding_1963_bound(t, n: int, m: int, a: float, b: float):
    """``exp(-2 [n/m] t^2 / (b-a)^2)`` for nondegenerate bounded U-statistics."""
    if b <= a:
        raise ValueError("need b > a")
    if n < m:
        raise ValueError("need n >= m")
    k = n // m
    ts = np.asarray(t, dtype=float)
    out = np.exp(-2.0 * k * ts**2 / (b - a) ** 2)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class RegimeCheck:
    """Large-``n`` requirement for the U-statistic bound under condition B."""

    ok: bool
    worst_margin: float
    min_n: Optional[int]


def u_regime_check(
    x: float, n: int, tensor: CoefficientTensor, C: float, epsilon: float, n_limit: int = 1 << 40
) -> RegimeCheck:
    """Whether each diagonal block exponent is dominated by the single-sum one.

    For every nonzero coefficient the level ``a = x |f|^{-eps} / (c K_m)``
    (``K_m`` = number of set partitions of ``m``) and every block size
    ``k >= 2`` must satisfy
    ``(a^{k/m} - C^k n^{1-k/2})^2 n^{k-1} >= C^{2(k-1)} a^{2/m}`` with
    ``a^{k/m} > C^k n^{1-k/2}``.
    """
    m = tensor.order
    c = coefficient_norm(tensor, 1.0 - epsilon)
    Km = len(set_partitions(m))

    def margin(nn: float) -> float:
        worst = math.inf
        for _, f in tensor:
            a = x * abs(f) ** (-epsilon) / (c * Km)
            for k in range(2, m + 1):
                level = a ** (k / m) - C**k * nn ** (1.0 - k / 2.0)
                if level <= 0:
                    return -math.inf
                lhs = level**2 * nn ** (k - 1)
                worst = min(worst, math.log(lhs) - math.log(C ** (2 * (k - 1)) * a ** (2.0 / m)))
        return worst

    here = margin(float(n))
    if here >= 0:
        return RegimeCheck(True, here, n)
    nn = max(n, 1)
    while nn < n_limit and margin(float(nn)) < 0:
        nn *= 2
    if nn >= n_limit:
        return RegimeCheck(False, here, None)
    lo, hi = nn // 2, nn
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (lo, mid) if margin(float(mid)) >= 0 else (mid, hi)
    return RegimeCheck(False, here, hi)


@dataclass
class BoundCertificate:
    condition: str
    m: int
    Bf: float
    C1: float
    C2: float
    c_tilde: Optional[float] = None
    epsilon: Optional[float] = None
    c_norm: Optional[float] = None
    phi_aggregates: dict = field(default_factory=dict)
    x0: float = 0.0
    trace: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def bound(self, x):
        """Tail bound evaluated on ``x`` (statistic scale)."""
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.condition == "A":
            out = tail_bound_A(x, self.m, self.Bf, self.c_tilde)
        elif self.condition == "B":
            out = tail_bound_B(x, self.m, self.epsilon, self.c_norm, p["C"],
                               self.phi_aggregates["phi_effective"])
        elif self.condition == "dedecker":
            t = np.maximum(x, np.finfo(float).tiny) * math.sqrt(p["n"])
            out = dedecker_bound(t, p["n"], p["C_sum"], p["phi_values"])
        elif self.condition == "hoeffding1963":
            out = hoeffding_1963_bound(x, p["n"], self.m, p["a"], p["b"])
        else:
            raise ValueError(f"unknown condition {self.condition!r}")
        cap = min(self.C1, 1.0)
        return np.minimum(out, cap) if np.ndim(out) else min(float(out), cap)

    def exponent(self, x):
        """``C2 x^{2/m} / B(f)`` (the rate in ``C1 exp(-rate)``)."""
        return self.C2 * exponent_scale(x, self.m, self.Bf)

    def to_dict(self) -> dict:
        params = {k: v for k, v in self.params.items() if k != "phi_values"}
        return {
            "condition": self.condition,
            "m": self.m,
            "Bf": self.Bf,
            "C1": self.C1,
            "C2": self.C2,
            "c_tilde": self.c_tilde,
            "epsilon": self.epsilon,
            "c_norm": self.c_norm,
            "phi_aggregates": self.phi_aggregates,
            "x0": self.x0,
            "params": params,
            "trace": [t.to_dict() for t in self.trace],
        }


def _phi_aggregates(profile: PhiProfile) -> tuple[dict, list]:
    agg = {
        "sum_phi": profile.sum_phi,
        "sum_sqrt_phi": profile.sum_sqrt_phi,
        "phi_effective": profile.phi_effective,
        "terms": profile.terms,
    }
    trace = [
        _entry("sum_phi", profile.sum_phi,
               f"sum_(k=1..{profile.terms}) phi(k) + certified tail {profile.tail_phi:.3g}"),
        _entry("sum_sqrt_phi", profile.sum_sqrt_phi,
               f"sum_(k=1..{profile.terms}) phi(k)^(1/2) + certified tail "
               f"{profile.tail_sqrt_phi:.3g}"),
        _entry("phi_effective", profile.phi_effective,
               "1 + sum_(k>=1) phi(k), lag-0 term phi(0) := 1 included"),
    ]
    return agg, trace


def certificate_A(
    tensor: CoefficientTensor,
    C: float,
    profile: PhiProfile,
    c0: Optional[float] = None,
    c1: Optional[float] = None,
    max_order: Optional[int] = None,
) -> BoundCertificate:
    m = tensor.order
    Bf = b_of_f(tensor, C, "A")
    trace = [
        _entry("C", C, "uniform bound of the basis"),
        _entry("sum_abs_f", coefficient_norm(tensor, 1.0), "sum |f_i|"),
        _entry("Bf", Bf, "B(f) = (C^m * sum|f_i|)^(2/m)"),
    ]
    agg, ptrace = _phi_aggregates(profile)
    trace += ptrace
    lem = lemma1_constants(profile, m=m, max_order=max_order, c0=c0, c1=c1)
    trace += list(lem.trace)
    C2 = 1.0 / (math.e * lem.c_tilde)
    trace.append(_entry("C1", 1.0, "C1 = 1 under Gaussian phi decay"))
    trace.append(_entry("C2", C2, "1/(e*c_tilde): optimized moment exponent, factor e retained"))
    trace.append(_entry("C2_displayed", 1.0 / lem.c_tilde, "1/c_tilde: form without the factor e"))
    trace.append(_entry("x0", 0.0, "bound holds for all x >= 0"))
    return BoundCertificate("A", m, Bf, 1.0, C2, lem.c_tilde, None, None, agg, 0.0, trace,
                            {"C": C, "c2": lem.c2, "c3": lem.c3})


def certificate_B(
    tensor: CoefficientTensor, C: float, profile: PhiProfile, epsilon: float
) -> BoundCertificate:
    m = tensor.order
    Bf = b_of_f(tensor, C, "B", epsilon)
    c = coefficient_norm(tensor, 1.0 - epsilon)
    agg, ptrace = _phi_aggregates(profile)
    phi = profile.phi_effective
    gamma = 2.0 * epsilon / (m * (1.0 - epsilon))
    prefactor = series_prefactor(gamma)
    C1 = m * E_1E * prefactor
    C2 = 1.0 / (16.0 * math.e * phi)
    x0 = remark2_threshold(m, epsilon, c, C, phi)
    trace = [
        _entry("C", C, "uniform bound of the basis"),
        _entry("epsilon", epsilon, "coefficient power 1 - epsilon"),
        _entry("c_norm", c, "c = sum |f_i|^(1-epsilon)"),
        _entry("Bf", Bf, "B(f) = C^2 * c^(2/(m(1-epsilon)))"),
        *ptrace,
        _entry("gamma", gamma, "gamma = 2 epsilon / (m (1-epsilon))"),
        _entry("series_prefactor", prefactor,
               "2 if gamma >= 1 else floor(1/gamma - 1) + 3, valid when gamma*K(x) >= 1"),
        _entry("C1", C1, "m * e^(1/e) * series_prefactor (reconstructed; valid for x >= x0)"),
        _entry("C2", C2, "1/(16 e phi_effective), since K(x) = C2 x^(2/m) / B(f)"),
        _entry("x0", x0, "x^(2/m) >= 8 m (1-eps) e C^2 phi c^(2/(m(1-eps))) / eps"),
    ]
    return BoundCertificate("B", m, Bf, C1, C2, None, epsilon, c, agg, x0, trace, {"C": C})


def certificate_dedecker(
    tensor: CoefficientTensor, C: float, profile: PhiProfile, n: int
) -> BoundCertificate:
    """Bound for the first-order statistic ``sum_i f_i S_n(i)`` (``m = 1``).

    ``sum_i f_i e_i(X_j)`` is bounded by ``C sum|f_i|``, so the sum over ``j``
    falls under the bounded-summand inequality with that constant.
    """
    if tensor.order != 1:
        raise ValueError("the bounded-sum inequality applies to order-1 tensors")
    if n < 2:
        raise ValueError("need n >= 2")
    C_sum = C * coefficient_norm(tensor, 1.0)
    agg, ptrace = _phi_aggregates(profile)
    phi_values = profile.values(n - 1)
    Dn = dedecker_variance_term(n, phi_values)
    C2 = 1.0 / (16.0 * math.e * (Dn / n))
    Bf = C_sum**2
    trace = [
        _entry("C_sum", C_sum, "C * sum |f_i| bounds each summand"),
        *ptrace,
        _entry("D_n", Dn, "n*phi(0) + sum_(k=1..n-1) (n-k) phi(k), phi(0) := 1"),
        _entry("C1", E_1E, "e^(1/e)"),
        _entry("C2", C2, "n / (16 e D_n) in units of x^2 / C_sum^2"),
    ]
    agg = {**agg, "D_n": Dn}
    return BoundCertificate("dedecker", 1, Bf, E_1E, C2, None, None, None, agg, 0.0, trace,
                            {"C": C, "C_sum": C_sum, "n": n, "phi_values": phi_values})


def certificate_hoeffding(n: int, m: int, a: float, b: float) -> BoundCertificate:
    k = n // m
    C2 = 2.0 * k / (b - a) ** 2
    trace = [
        _entry("k", k, "floor(n/m)"),
        _entry("C2", C2, "2 k / (b-a)^2 applied to t^2"),
    ]
    return BoundCertificate("hoeffding1963", m, 1.0, 1.0, C2, None, None, None, {}, 0.0, trace,
                            {"n": n, "a": a, "b": b})
