import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma as gamma_fn

from canonstat.bounds import (
    E_1E,
    b_of_f,
    certificate_A,
    certificate_B,
    certificate_dedecker,
    certificate_hoeffding,
    closed_form_majorant,
    dedecker_bound,
    dedecker_variance_term,
    exponent_scale,
    gamma_power_constant,
    hoeffding_1963_bound,
    k_of_x,
    lemma1_constants,
    lemma1_moment_bound,
    remark2_threshold,
    stretched_series,
    tail_bound_A,
    tail_bound_A_integer,
    tail_bound_B,
    tail_bound_B_closed,
    u_regime_check,
)
from canonstat.kernels import CoefficientTensor
from canonstat.mixing import m_dependent_process, markov_process, phi_profile

from conftest import LAZY

SQ2 = math.sqrt(2)


def test_b_of_f_examples(diag2):
    assert b_of_f(diag2, SQ2, "A") == pytest.approx(4.0)
    assert b_of_f(diag2, SQ2, "B", 0.5) == pytest.approx(8.0)
    with pytest.raises(ValueError):
        b_of_f(CoefficientTensor(2, {}), SQ2, "A")


@given(st.floats(0.05, 20.0), st.sampled_from(["A", "B"]), st.integers(1, 3))
def test_b_of_f_homogeneity(lam, cond, m):
    t = CoefficientTensor(m, {(1,) * m: 1.0, (2,) * m: -0.7})
    eps = 0.4 if cond == "B" else None
    ratio = b_of_f(t.scaled(lam), SQ2, cond, eps) / b_of_f(t, SQ2, cond, eps)
    assert ratio == pytest.approx(lam ** (2 / m), rel=1e-12)


def test_c3_against_brute_grid():
    c3, t_star = gamma_power_constant()
    t = np.linspace(0.01, 50, 2_000_001)
    brute = np.max(gamma_fn(t) / t ** (t - 4))
    assert 0 < c3 < math.inf
    assert c3 >= brute * (1 - 1e-12)
    assert c3 == pytest.approx(brute, rel=1e-8)
    assert gamma_fn(t_star) / t_star ** (t_star - 4) == pytest.approx(c3, rel=1e-12)


def test_lemma1_constants_and_moment():
    prof = phi_profile(m_dependent_process(2))
    lem = lemma1_constants(prof, m=2)
    c3 = gamma_power_constant()[0]
    c0 = math.exp(4.0)
    assert lem.c2 == pytest.approx(max(1.0, 8.0, c0 * c3), rel=1e-12)
    assert lem.c_tilde == 8 * lem.c2
    names = {t.name for t in lem.trace}
    assert {"c3", "c2", "c_tilde", "envelope", "c0", "c1"} <= names
    assert lemma1_moment_bound(1, 1, 1.0, 8.0) == 8.0
    with pytest.raises(ValueError):
        lemma1_moment_bound(1, 0, 1.0, 8.0)


def test_lemma1_envelope_for_markov_is_direct_sum():
    prof = phi_profile(markov_process(LAZY))
    lem = lemma1_constants(prof, m=1, max_order=2)
    k = np.arange(1, 8 * prof.terms + 1)
    direct = 2 * np.sum(np.sqrt(0.5 ** (k + 1))) / 2 ** (1 - 4)
    # phi(k) near 1e-16 carries rounding noise that the square root amplifies
    assert lem.c2 >= direct * (1 - 1e-12)
    assert lem.c2 == pytest.approx(max(4 * prof.sum_sqrt_phi, direct), rel=1e-5)


def test_tail_bound_A_cases():
    assert tail_bound_A(0.0, 2, 4.0, 100.0) == 1.0
    x = np.array([10.0, 1e4, 1e5])
    ct = 500.0
    np.testing.assert_allclose(tail_bound_A(x, 2, 4.0, ct), np.exp(-x / (4 * math.e * ct)))
    assert np.all(tail_bound_A(x, 2, 4.0, ct, keep_e=False) <= tail_bound_A(x, 2, 4.0, ct))


def test_integer_variant_is_valid_moment_bound():
    # compare with an independent brute evaluation of the Chebyshev-moment bound
    m, Bf, ct, x = 2, 4.0, 50.0, 5e4
    bound, N = tail_bound_A_integer(x, m, Bf, ct, n_max=10_000)
    brute = min(
        math.exp(min(0.0, 2 * n * math.log(Bf ** (m / 2)) + m * n * math.log(ct * m * n)
                     - 2 * n * math.log(x)))
        for n in range(1, 400)
    )
    assert bound == pytest.approx(brute, rel=1e-9)
    assert N >= 1


def test_k_of_x_worked_values():
    K, g = k_of_x(1000.0, 2, 0.5, 2.0, SQ2, 1.0)
    assert K == pytest.approx(1000 / (128 * math.e), rel=1e-14)
    assert g == 1.0
    K2, _ = k_of_x(1000.0, 2, 0.5, 2.0, SQ2, 2.0)
    assert K2 == pytest.approx(K / 2, rel=1e-14)


def test_remark2_threshold():
    assert remark2_threshold(2, 0.5, 2.0, SQ2, 1.0) == pytest.approx(128 * math.e, rel=1e-9)


def test_stretched_series_geometric():
    K = 1.3
    exact = math.exp(-K) / (1 - math.exp(-K))
    assert stretched_series(K, 1.0) == pytest.approx(exact, rel=1e-13)
    assert stretched_series(K, 1.0) >= exact
    brute = math.fsum(math.exp(-0.7 * i**0.5) for i in range(1, 400_000))
    assert stretched_series(0.7, 0.5) == pytest.approx(brute, rel=1e-10)


@given(st.floats(0.1, 0.9), st.floats(1.0, 60.0))
def test_series_below_closed_form(eps, K_scale):
    gamma = 2 * eps / (1 - eps) / 2
    K = (K_scale + 1e-9) / gamma
    assert stretched_series(K, gamma) <= closed_form_majorant(K, gamma) * (1 + 1e-12)


def test_closed_form_domain():
    with pytest.raises(ValueError):
        closed_form_majorant(0.5, 1.0)


def test_tail_bound_B_cap_and_monotone():
    x = np.linspace(0, 5000, 60)
    vals = tail_bound_B(x, 2, 0.5, 2.0, SQ2, 1.5)
    assert vals[0] == 1.0
    assert np.all(np.diff(vals) <= 0)
    closed = tail_bound_B_closed(x, 2, 0.5, 2.0, SQ2, 1.5)
    ok = ~np.isnan(closed)
    assert np.all(vals[ok] <= np.minimum(1, closed[ok]) + 1e-15)


def test_dedecker_forms():
    assert dedecker_variance_term(10, np.zeros(9)) == 10.0
    assert dedecker_variance_term(3, [0.5, 0.25]) == 3 + 2 * 0.5 + 0.25
    t = 40.0
    assert dedecker_bound(t, 100, 1.0, np.zeros(99)) == pytest.approx(
        min(1.0, E_1E * math.exp(-t * t / (16 * math.e * 100)))
    )
    with pytest.raises(ValueError):
        dedecker_bound(0.0, 100, 1.0, np.zeros(99))
    with pytest.raises(ValueError):
        dedecker_bound(1.0, 1, 1.0, [])


def test_hoeffding_spot_value():
    assert hoeffding_1963_bound(0.1, 100, 1, 0.0, 1.0) == pytest.approx(math.exp(-2), abs=1e-9)
    assert hoeffding_1963_bound(0.0, 100, 2, 0.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        hoeffding_1963_bound(0.1, 100, 1, 1.0, 1.0)


def test_certificates_trace_complete(diag2):
    prof = phi_profile(markov_process(LAZY))
    certs = [
        certificate_A(diag2, SQ2, phi_profile(m_dependent_process(2))),
        certificate_B(diag2, SQ2, prof, 0.5),
        certificate_dedecker(CoefficientTensor(1, {(1,): 1.0}), 1.0, prof, 100),
        certificate_hoeffding(100, 2, 0.0, 1.0),
    ]
    for cert in certs:
        d = cert.to_dict()
        names = {t["name"] for t in d["trace"]}
        assert "C2" in names
        for key in ("Bf", "C1", "C2", "c_tilde", "x0"):
            if d[key] not in (None, 0.0, 1.0):
                assert key in names or key.lower() in names, (cert.condition, key)
        x = np.linspace(0, 1e5 if cert.condition == "A" else 3000, 40)
        x[0] = 1e-9
        vals = cert.bound(x)
        assert np.all(vals <= 1.0) and np.all(np.diff(vals) <= 0)


def test_certificate_B_constants(diag2):
    prof = phi_profile(markov_process(LAZY))
    cert = certificate_B(diag2, SQ2, prof, 0.5)
    assert cert.Bf == pytest.approx(8.0)
    assert cert.C2 == pytest.approx(1 / (16 * math.e * 1.5), rel=1e-12)
    assert cert.C1 == pytest.approx(2 * E_1E * 2)
    assert cert.x0 == pytest.approx(128 * math.e * 1.5, rel=1e-12)


def test_exponent_scale_invariance(diag2):
    for lam in (0.1, 3.0, 10.0):
        for cond, eps in (("A", None), ("B", 0.5)):
            base = exponent_scale(70.0, 2, b_of_f(diag2, SQ2, cond, eps))
            scaled = exponent_scale(70.0 * lam, 2, b_of_f(diag2.scaled(lam), SQ2, cond, eps))
            assert scaled == pytest.approx(base, rel=1e-12)


def test_u_regime_check(diag2):
    small = u_regime_check(1e4, 10, diag2, SQ2, 0.5)
    big = u_regime_check(1e4, 10**6, diag2, SQ2, 0.5)
    assert big.ok
    assert small.min_n is None or small.min_n <= 10**6
