"""Acceptance criteria, each at its stated size and tolerance.

Run standalone (``python tests/test_acceptance.py``) for a summary, or through
pytest, which prints the same PASS/FAIL line for every criterion.
"""

from __future__ import annotations

import math
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from canonstat.basis import UniformMeasure, make_finite_basis, make_trig_basis
from canonstat.bounds import (
    b_of_f,
    certificate_A,
    certificate_B,
    certificate_dedecker,
    certificate_hoeffding,
    exponent_scale,
    hoeffding_1963_bound,
    lemma1_constants,
    lemma1_moment_bound,
    remark2_threshold,
    tail_bound_A,
    tail_bound_B,
)
from canonstat.cli import run_cli
from canonstat.kernels import (
    CoefficientTensor,
    canonicality_defect,
    hoeffding_project,
    kernel_from_coefficients,
    kernel_mean,
    named_kernel,
)
from canonstat.mc import (
    estimate_mixed_moments,
    resolvable_grid,
    run_hoeffding_experiment,
    run_tail_experiment,
    verify_envelope,
)
from canonstat.mixing import (
    dithered_markov_process,
    iid_process,
    m_dependent_process,
    markov_process,
    phi_brute_force,
    phi_markov_exact,
    phi_profile,
)
from canonstat.stats import (
    u_statistic_naive,
    u_statistic_series,
    v_statistic_naive,
    v_statistic_series,
)

ROOT = Path(__file__).resolve().parents[1]
LAZY = [[0.75, 0.25], [0.25, 0.75]]
THREE = [[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]]
SQ2 = math.sqrt(2.0)
DIAG2 = CoefficientTensor(2, {(1, 1): 1.0, (2, 2): 1.0})
# grids stay inside [zero-count CP limit, 0.99] of the bound; see resolvable_grid
GRID_TOP = 0.99


def shipped_processes():
    """Every shipped process with a basis of its marginal law and the usable index range."""
    trig = make_trig_basis()
    out = []
    for proc in (
        iid_process(UniformMeasure()),
        m_dependent_process(2),
        m_dependent_process(2, "frac_sum"),
        dithered_markov_process(LAZY),
    ):
        out.append((proc, trig, 6))
    for proc in (
        m_dependent_process(1, "mod_sum", alphabet=3),
        markov_process(LAZY),
        markov_process(THREE),
    ):
        basis = make_finite_basis(proc.law.probabilities)
        out.append((proc, basis, basis.max_index))
    return out


def random_tensor(rng, order, max_index):
    count = int(rng.integers(1, 11))
    entries = {
        tuple(int(i) for i in rng.integers(1, max_index + 1, size=order)): float(rng.uniform(-2, 2))
        for _ in range(count)
    }
    return CoefficientTensor(order, entries)


def criterion_1():
    rng = np.random.default_rng(1001)
    worst, cases = 0.0, 0
    procs = shipped_processes()
    for t in range(50):
        m = int(rng.integers(1, 4))
        for proc, basis, top in procs:
            tensor = random_tensor(rng, m, top)
            kernel = kernel_from_coefficients(tensor, basis)
            for n in (5, 20, 50):
                x = proc.sample(int(rng.integers(2**63)), n)
                naive = v_statistic_naive(kernel, x)
                err = abs(v_statistic_series(tensor, basis, x) - naive) / (1 + abs(naive))
                worst = max(worst, err)
                cases += 1
    return worst <= 1e-9, f"{cases} cases over {len(procs)} processes, max scaled error {worst:.2e}"


def criterion_2():
    rng = np.random.default_rng(1002)
    trig = make_trig_basis()
    proc = m_dependent_process(2)
    worst = 0.0
    for t in range(50):
        m = 2 + t % 2
        tensor = random_tensor(rng, m, 6)
        kernel = kernel_from_coefficients(tensor, trig)
        n = int(rng.integers(1, 16))
        x = proc.sample(int(rng.integers(2**63)), n)
        naive = u_statistic_naive(kernel, x)
        err = abs(u_statistic_series(tensor, trig, x) - naive) / (1 + abs(naive))
        worst = max(worst, err)
    return worst <= 1e-9, f"50 tensors, m in {{2,3}}, n <= 15, max scaled error {worst:.2e}"


def criterion_3():
    U = UniformMeasure()
    g = np.linspace(0.0, 1.0, 64)
    S, T = g[:, None], g[None, :]
    details, ok = [], True
    for name in ("product", "exp_sum"):
        proj = hoeffding_project(named_kernel(name, U))
        defect = canonicality_defect(proj, grid=g)
        twice = hoeffding_project(proj)
        idem = float(np.max(np.abs(twice(S, T) - proj(S, T))))
        ok &= defect <= 1e-8 and idem <= 1e-9
        details.append(f"{name}: defect {defect:.1e}, idempotence {idem:.1e}")
    return ok, "; ".join(details)


def _envelope(process, basis, cert, n, reps, seed, count=20):
    grid = resolvable_grid(cert.bound, reps, count, upper=GRID_TOP)
    curve = run_tail_experiment(process, DIAG2, basis, "V", n, reps, grid, seed)
    report = verify_envelope(curve, cert)
    return report, grid


def criterion_4():
    trig = make_trig_basis()
    proc = m_dependent_process(2)
    cert = certificate_A(DIAG2, trig.bound, phi_profile(proc))
    report, grid = _envelope(proc, trig, cert, 500, 20_000, 20240611)
    check = np.allclose(cert.bound(grid), tail_bound_A(grid, 2, 4.0, cert.c_tilde), rtol=1e-14)
    return (report.passed and check and len(grid) == 20,
            f"{len(report.violations)} violations on x in [{grid[0]:.3g}, {grid[-1]:.3g}], "
            f"max estimate/bound {report.max_ratio:.3g}")


def criterion_5():
    trig = make_trig_basis()
    proc = dithered_markov_process(LAZY)
    prof = phi_profile(proc)
    cert = certificate_B(DIAG2, trig.bound, prof, 0.5)
    report, grid = _envelope(proc, trig, cert, 500, 20_000, 20240612)
    direct = tail_bound_B(grid, 2, 0.5, 2.0, SQ2, prof.phi_effective)
    x0 = remark2_threshold(2, 0.5, 2.0, SQ2, 1.0)
    x0_ok = abs(x0 - 128 * math.e) <= 1e-9 * 128 * math.e
    ok = report.passed and x0_ok and np.allclose(cert.bound(grid), direct, rtol=1e-14)
    return ok, (f"{len(report.violations)} violations on x in [{grid[0]:.4g}, {grid[-1]:.4g}], "
                f"max estimate/bound {report.max_ratio:.3g}; x0 = {x0:.10g} (128e)")


def criterion_6():
    proc = markov_process(LAZY)
    basis = make_finite_basis(proc.law.probabilities)
    n, reps = 1000, 100_000
    t1 = CoefficientTensor(1, {(1,): 1.0})
    cert = certificate_dedecker(t1, basis.bound, phi_profile(proc), n)
    grid = resolvable_grid(cert.bound, reps, 24, upper=GRID_TOP)
    curve = run_tail_experiment(proc, t1, basis, "V", n, reps, grid, 20240613)
    report = verify_envelope(curve, cert)
    return report.passed, (f"{len(report.violations)} violations on t/sqrt(n) in "
                           f"[{grid[0]:.3g}, {grid[-1]:.3g}], max estimate/bound "
                           f"{report.max_ratio:.3g}, D_n = {cert.phi_aggregates['D_n']:.6g}")


def criterion_7():
    proc = iid_process(UniformMeasure())
    kernel = named_kernel("product", UniformMeasure())
    n, reps = 100, 100_000
    cert = certificate_hoeffding(n, 2, 0.0, 1.0)
    grid = resolvable_grid(cert.bound, reps, 20, upper=GRID_TOP)
    curve = run_hoeffding_experiment(kernel, proc, n, reps, grid, 20240614, kernel_mean(kernel))
    report = verify_envelope(curve, cert)
    same = np.allclose(cert.bound(grid), np.exp(-2 * 50 * grid**2), rtol=1e-14)
    spot = hoeffding_1963_bound(0.1, 100, 1, 0.0, 1.0)
    spot_ok = abs(spot - math.exp(-2)) <= 1e-9
    return report.passed and same and spot_ok, (
        f"{len(report.violations)} violations on t in [{grid[0]:.3g}, {grid[-1]:.3g}], "
        f"max estimate/bound {report.max_ratio:.3g}; spot value {spot:.8f}"
    )


def _moment_cases(process, basis, indices, n, reps, seed):
    tuples = [t for L in (2, 4, 6) for t in _tuples(indices, L)]
    est = estimate_mixed_moments(process, basis, tuples, n, reps, seed)
    lem = lemma1_constants(phi_profile(process), m=1, max_order=6)
    worst = -math.inf
    fails = 0
    for t, e in est.items():
        mN = len(t) // 2
        bound = lemma1_moment_bound(mN, 1, basis.bound, lem.c_tilde)
        slack = abs(e.estimate) - (bound + 3 * e.std_error)
        worst = max(worst, abs(e.estimate) / bound)
        fails += slack > 0
    return len(tuples), fails, worst


def _tuples(indices, length):
    import itertools

    return list(itertools.product(indices, repeat=length))


def criterion_8():
    trig = make_trig_basis()
    chain3 = markov_process(THREE)
    chain2 = markov_process(LAZY)
    runs = [
        ("m-dependent", m_dependent_process(2), trig, (1, 2)),
        ("3-state chain", chain3, make_finite_basis(chain3.law.probabilities), (1, 2)),
        ("2-state chain", chain2, make_finite_basis(chain2.law.probabilities), (1,)),
    ]
    parts, ok = [], True
    for j, (label, proc, basis, idx) in enumerate(runs):
        cases, fails, worst = _moment_cases(proc, basis, idx, 200, 10_000, 20240615 + j)
        ok &= fails == 0
        parts.append(f"{label}: {cases} tuples, {fails} failures, max |est|/bound {worst:.2e}")
    return ok, "; ".join(parts)


def criterion_9():
    worst = 0.0
    x = np.array([0.5, 7.0, 300.0, 1e4])
    for m, tensor in ((2, DIAG2), (1, CoefficientTensor(1, {(1,): 0.7, (3,): -1.1})),
                      (3, CoefficientTensor(3, {(1, 2, 3): 1.5, (2, 2, 1): -0.4}))):
        for cond, eps in (("A", None), ("B", 0.5)):
            base = exponent_scale(x, m, b_of_f(tensor, SQ2, cond, eps))
            for lam in (0.1, 3.0, 10.0):
                scaled = exponent_scale(lam * x, m, b_of_f(tensor.scaled(lam), SQ2, cond, eps))
                worst = max(worst, float(np.max(np.abs(scaled - base) / base)))
    return worst <= 1e-12, f"max relative change {worst:.1e} over m in {{1,2,3}}, both conditions"


def criterion_10():
    worst = 0.0
    for P in (LAZY, THREE):
        for k in (1, 2, 3):
            exact = phi_markov_exact(P, k)
            for p in (1, 2, 3):
                for q in (1, 2, 3):
                    worst = max(worst, abs(phi_brute_force(P, k, p, q) - exact))
    phi1 = phi_markov_exact(LAZY, 1)
    return worst <= 1e-12 and phi1 == 0.25, f"max |exact - brute| {worst:.1e}; phi(1) = {phi1!r}"


def criterion_11():
    tmp = Path(tempfile.mkdtemp())
    try:
        shutil.copy(ROOT / "configs" / "diag2.json", tmp)
        shutil.copy(ROOT / "configs" / "mdep_A.toml", tmp)
        cfg = str(tmp / "mdep_A.toml")
        codes = [run_cli(["verify", "--config", cfg, "--out", str(tmp / f"w{w}"), "--workers", str(w)])
                 for w in (1, 3)]
        codes.append(run_cli(["verify", "--config", cfg, "--out", str(tmp / "again")]))
        first = (tmp / "w1" / "curve.csv").read_bytes()
        same = all((tmp / d / "curve.csv").read_bytes() == first for d in ("w3", "again"))
        same_cert = (tmp / "w1" / "certificate.json").read_bytes() == (
            tmp / "w3" / "certificate.json").read_bytes()
        ok = same and same_cert and codes == [0, 0, 0]
        return ok, f"exit codes {codes}; CSV identical across 1/3 workers and rerun: {same}"
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


CRITERIA = {
    1: ("series/naive V-equivalence", criterion_1),
    2: ("diagonal decomposition U series = naive", criterion_2),
    3: ("canonicality of the Hoeffding projection", criterion_3),
    4: ("condition-A envelope, 2-dependent sequence", criterion_4),
    5: ("condition-B envelope, lazy 2-state chain", criterion_5),
    6: ("bounded-sum envelope, 2-state chain", criterion_6),
    7: ("classical Hoeffding envelope, s*t kernel", criterion_7),
    8: ("mixed-moment bound", criterion_8),
    9: ("scale invariance of the exponent", criterion_9),
    10: ("phi-coefficient oracle", criterion_10),
    11: ("reproducibility across worker counts", criterion_11),
}


def run_criterion(number: int) -> tuple[bool, str]:
    name, func = CRITERIA[number]
    start = time.perf_counter()
    ok, detail = func()
    elapsed = time.perf_counter() - start
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {detail} ({elapsed:.1f}s)"
    return ok, line


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = run_criterion(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(k) for k in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
