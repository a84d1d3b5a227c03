import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from canonstat.basis import UniformMeasure, make_finite_basis
from canonstat.kernels import CoefficientTensor, kernel_from_coefficients, kernel_from_function
from canonstat.stats import (
    Sample,
    mixed_power_sum,
    moebius_weight,
    offdiagonal_sum,
    partial_sums,
    s_n,
    set_partitions,
    u_hoeffding_normalized,
    u_series_batch,
    u_statistic_naive,
    u_statistic_series,
    v_series_batch,
    v_statistic_naive,
    v_statistic_series,
)

from conftest import random_tensor

U = UniformMeasure()
F = kernel_from_function(lambda s, t: 10 * s + t, 2, U)


def test_v_small_cases():
    assert v_statistic_naive(F, [0.3]) == pytest.approx(3.3)
    x1, x2 = 0.2, 0.7
    expect = (F(x1, x1) + F(x1, x2) + F(x2, x1) + F(x2, x2)) / 2
    assert v_statistic_naive(F, [x1, x2]) == pytest.approx(float(expect))
    zero = kernel_from_function(lambda s, t: 0 * s * t, 2, U)
    assert v_statistic_naive(zero, np.random.default_rng(0).random(9)) == 0.0
    with pytest.raises(ValueError):
        v_statistic_naive(F, [])


def test_u_small_cases():
    x1, x2 = 0.2, 0.7
    assert u_statistic_naive(F, [x1, x2]) == pytest.approx(float(F(x1, x2) + F(x2, x1)) / 2)
    assert u_statistic_naive(F, [x1]) == 0.0
    g = kernel_from_function(lambda s: s**2, 1, U)
    x = np.random.default_rng(1).random(7)
    assert u_statistic_naive(g, x) == v_statistic_naive(g, x)


def test_naive_caps():
    x = np.zeros(201)
    g = kernel_from_function(lambda s: s, 1, U)
    with pytest.raises(ValueError):
        v_statistic_naive(g, x)
    h = kernel_from_function(lambda a, b, c, d, e: a, 5, U)
    with pytest.raises(ValueError):
        v_statistic_naive(h, x[:3])


def test_hoeffding_normalized():
    g = kernel_from_function(lambda s: 3 * s, 1, U)
    x = np.array([0.1, 0.4, 0.4])
    assert u_hoeffding_normalized(g, x) == pytest.approx(0.9)
    one = kernel_from_function(lambda s, t: np.ones_like(s * t), 2, U)
    assert u_hoeffding_normalized(one, x) == 1.0
    with pytest.raises(ValueError):
        u_hoeffding_normalized(one, x[:1])


def test_s_n_cases(trig):
    coin = make_finite_basis([0.5, 0.5])
    assert s_n(1, coin, [0, 0, 1, 1]) == 0.0
    with pytest.warns(UserWarning):
        assert s_n(0, trig, np.zeros(9)) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        s_n(1, trig, [])


def test_mixed_power_sums(trig):
    coin = make_finite_basis([0.5, 0.5])
    x = np.array([0, 1, 1, 0, 1])
    assert mixed_power_sum((1,), coin, x) == pytest.approx(s_n(1, coin, x))
    assert mixed_power_sum((1, 1), coin, x) == pytest.approx(1.0)
    y = np.random.default_rng(3).random(12)
    direct = np.sum(trig.evaluate(1, y) * trig.evaluate(2, y) * trig.evaluate(2, y)) / 12**1.5
    assert mixed_power_sum((1, 2, 2), trig, y) == pytest.approx(direct, abs=1e-15)


def test_series_trivial_cases(trig):
    x = np.random.default_rng(4).random(11)
    t1 = CoefficientTensor(1, {(1,): 1.0})
    assert v_statistic_series(t1, trig, x) == pytest.approx(s_n(1, trig, x), abs=1e-15)
    assert v_statistic_series(CoefficientTensor(2, {}), trig, x) == 0.0
    assert u_statistic_series(CoefficientTensor(3, {(1, 1, 1): 1.0}), trig, x[:2]) == 0.0


def test_set_partition_counts():
    assert [len(set_partitions(m)) for m in range(1, 6)] == [1, 2, 5, 15, 52]
    assert moebius_weight(((0, 1, 2),)) == 2
    assert moebius_weight(((0, 1), (2,))) == -1


@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 18))
def test_series_equals_naive(seed, m, n):
    rng = np.random.default_rng(seed)
    basis = pytest.importorskip("canonstat.basis").make_trig_basis()
    tensor = random_tensor(rng, m, 5)
    x = rng.random(n)
    kernel = kernel_from_coefficients(tensor, basis)
    v_naive = v_statistic_naive(kernel, x)
    u_naive = u_statistic_naive(kernel, x)
    assert abs(v_statistic_series(tensor, basis, x) - v_naive) <= 1e-9 * (1 + abs(v_naive))
    assert abs(u_statistic_series(tensor, basis, x) - u_naive) <= 1e-9 * (1 + abs(u_naive))


def test_offdiagonal_sum_pairs(trig):
    x = np.random.default_rng(8).random(10)
    a, b = trig.evaluate(1, x), trig.evaluate(3, x)
    direct = (np.sum(a) * np.sum(b) - np.sum(a * b)) / 10
    assert offdiagonal_sum((1, 3), trig, x) == pytest.approx(direct, abs=1e-13)


def test_batches_match_single(trig, diag2):
    pts = np.random.default_rng(9).random((4, 30))
    vb = v_series_batch(diag2, trig, pts)
    ub = u_series_batch(diag2, trig, pts)
    for j in range(4):
        assert vb[j] == v_statistic_series(diag2, trig, pts[j])
        assert ub[j] == u_statistic_series(diag2, trig, pts[j])
    assert partial_sums(trig, pts, [1, 2]).shape == (2, 4)


def test_sample_is_readonly():
    s = Sample(np.arange(3.0))
    with pytest.raises(ValueError):
        s.points[0] = 1.0
    assert len(s) == 3
