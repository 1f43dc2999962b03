import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from multislln.conditions import (
    ConditionError,
    CovarianceSpec,
    brunk_prohorov_a,
    check_alpha_condition,
    check_eq4,
    check_equal_moment_condition,
    covariance_series,
    eq4_terms,
    three_series,
    verify_truncation_bounds,
)
from multislln.distributions import DistributionSpec as D
from multislln.lattice import prefix_sums
from multislln.normalization import NormalizationSpec as N
from multislln.series import Verdict

from conftest import brute_increment, brute_prefix

ZETA2_SQ = float(mpmath.zeta(2) ** 2)
CONV, DIV = Verdict.CONVERGES, Verdict.DIVERGES


def _bp_oracle(moments, q):
    # direct 2^r-term increment of |n|^{q-1} * brute-force prefix sums
    cum = brute_prefix(moments)
    size = np.ones(moments.shape, dtype=np.int64)
    for idx in np.ndindex(moments.shape):
        size[idx] = math.prod(i + 1 for i in idx)
    return brute_increment(size ** (q - 1) * cum)


# Brunk-Prohorov coefficients

def test_bp_identical_moments_example():
    a = brunk_prohorov_a(np.full((2, 3), 3, dtype=np.int64), 2)
    assert a[1, 2] == 45


def test_bp_q1_returns_moments(rng):
    m = rng.integers(0, 20, size=(4, 5))
    np.testing.assert_array_equal(brunk_prohorov_a(m, 1), m)


def test_bp_one_dimensional_examples():
    m = np.array([1, 2, 3], dtype=np.int64)
    assert brunk_prohorov_a(m, 2)[2] == 3 * 6 - 2 * 3
    assert brunk_prohorov_a(m, 3)[2] == 9 * 6 - 4 * 3


@settings(max_examples=60)
@given(st.integers(1, 4), hnp.arrays(np.int64, st.integers(1, 12), elements=st.integers(0, 50)))
def test_bp_one_dimensional_formula(q, m):
    a = brunk_prohorov_a(m, q)
    cum = np.cumsum(m)
    for n in range(1, len(m) + 1):
        prev = (n - 1) ** (q - 1) * cum[n - 2] if n > 1 else 0
        assert a[n - 1] == n ** (q - 1) * cum[n - 1] - prev


@pytest.mark.parametrize("q", [1, 2, 3])
def test_bp_matches_brute_oracle(q, rng):
    m = rng.integers(0, 30, size=(3, 4, 2))
    np.testing.assert_array_equal(brunk_prohorov_a(m, q), _bp_oracle(m, q))


@pytest.mark.parametrize("q,shape,mu", [(2, (5, 5), 3), (3, (4, 3, 2), 7), (1, (6,), 1)])
def test_bp_closed_form_and_telescoping(q, shape, mu):
    a = brunk_prohorov_a(np.full(shape, mu, dtype=np.int64), q)
    closed = np.full(shape, mu, dtype=np.int64)
    size = np.ones(shape, dtype=np.int64)
    for idx in np.ndindex(shape):
        n = [i + 1 for i in idx]
        closed[idx] *= math.prod(k**q - (k - 1) ** q for k in n)
        size[idx] = math.prod(n)
    np.testing.assert_array_equal(a, closed)
    np.testing.assert_array_equal(prefix_sums(a), mu * size**q)


def test_bp_rejects_bad_input():
    with pytest.raises(ConditionError):
        brunk_prohorov_a(np.ones(3), 0)
    with pytest.raises(ConditionError):
        brunk_prohorov_a(-np.ones(3), 2)


def test_bp_large_values_switch_to_float():
    m = np.full((40, 40), 10**10, dtype=np.int64)
    a = brunk_prohorov_a(m, 3)
    assert a.dtype.kind == "f"
    assert a[39, 39] == pytest.approx(1e10 * (40**3 - 39**3) ** 2, rel=1e-12)


# Eq4 and identical moments

def test_eq4_reduces_to_zeta2_squared():
    rep = check_eq4(1, N.product(), mu=1.0, r=2)
    assert rep.verdict is CONV
    assert rep.total_lower <= ZETA2_SQ <= rep.total_upper


def test_eq4_q2_threshold():
    assert check_eq4(2, N.power_log(0.5, 0.35), mu=1.0, r=2).verdict is CONV
    assert check_eq4(2, N.power_log(0.5, 0.25), mu=1.0, r=2).verdict is DIV


def test_eq4_field_terms_match_identical():
    box = (6, 7)
    t1 = eq4_terms(2, N.power_log(0.5, 0.4), box, mu=3.0)
    t2 = eq4_terms(2, N.power_log(0.5, 0.4), box, moments=np.full(box, 3.0))
    np.testing.assert_allclose(t1, t2, rtol=1e-14)


def test_eq4_field_without_envelope_is_inconclusive():
    rep = check_eq4(2, N.product(), moments=np.ones((20, 20)))
    assert rep.verdict is Verdict.INCONCLUSIVE


def test_equal_moment_examples():
    rep = check_equal_moment_condition(1, N.product(), r=2)
    assert rep.verdict is CONV
    assert rep.total_upper - rep.total_lower <= 1e-4
    assert rep.total_lower <= ZETA2_SQ <= rep.total_upper
    assert check_equal_moment_condition(1, N.power_log(0.5, 0.6), r=2).verdict is CONV
    assert check_equal_moment_condition(1, N.power_log(0.5, 0.5), r=2).verdict is DIV
    rep = check_equal_moment_condition(3, N.product(), r=1)
    assert rep.verdict is CONV
    assert rep.total_lower <= float(mpmath.zeta(4)) <= rep.total_upper


def test_equal_moment_rejects_max_normalization():
    n1, n2 = np.meshgrid(np.arange(1, 5), np.arange(1, 5), indexing="ij")
    rep = check_equal_moment_condition(1, N.tabulated(np.maximum(n1, n2)), box=(4, 4))
    assert rep.verdict is Verdict.INCONCLUSIVE
    with pytest.raises(ConditionError):
        check_equal_moment_condition(1, N.power_log(0, 0), r=2)


# alpha condition

def test_alpha_examples():
    assert check_alpha_condition(2, N.product(), r=2).verdict is CONV
    assert check_alpha_condition(1, N.product(), r=1).verdict is DIV
    rep = check_alpha_condition(2, N.product(), r=2, moment_exponent=0.5)
    assert rep.verdict is CONV
    oracle = float(mpmath.zeta(1.5) ** 2)
    assert rep.total_lower <= oracle <= rep.total_upper
    with pytest.raises(ConditionError):
        check_alpha_condition(2.5, N.product(), r=1)


# three series

def test_three_series_normal_product():
    ts = three_series(D.normal(0, 1), N.product(), r=2)
    assert ts.truncated_mean.partial_sum == 0.0 and ts.truncated_mean.tail_upper == 0.0
    assert ts.truncated_mean.verdict is CONV
    assert ts.tail_probability.verdict is CONV
    assert ts.truncated_variance.verdict is CONV
    assert ts.truncated_variance.total_upper <= ZETA2_SQ


def test_three_series_slow_normalization_diverges():
    assert three_series(D.normal(0, 1), N.power_log(0.25, 0), r=2).truncated_variance.verdict is DIV


def test_three_series_asymmetric_second_series():
    dist = D.discrete([-1.0, 2.0], [2 / 3, 1 / 3])
    ts = three_series(dist, N.product(), box=(64, 64))
    assert ts.truncated_mean.partial_sum > 0
    assert ts.truncated_mean.verdict is CONV


def test_three_series_requires_centered():
    with pytest.raises(ConditionError):
        three_series(D.normal(1, 1), N.product(), r=2)


# covariance

def test_covariance_examples():
    assert covariance_series(CovarianceSpec("white"), r=2).total_upper == 0.0
    rep = covariance_series(CovarianceSpec("geometric", rho=0.6), r=2)
    assert rep.verdict is CONV
    assert covariance_series(CovarianceSpec("constant"), r=1).verdict is CONV


def test_covariance_geometric_bracket_oracle():
    rep = covariance_series(CovarianceSpec("geometric", rho=0.6), box=(8, 8))
    m = np.arange(1, 2000, dtype=np.float64)
    axis = math.fsum(0.6**m * np.maximum(np.log(m), 1) ** 2 / m**2)
    assert rep.total_lower <= axis**2 <= rep.total_upper


def test_moving_average_lags():
    w = np.array([[1.0, 0.5], [0.25, 0.0]])
    cov = CovarianceSpec("moving_average", weights=w)
    assert cov.r0 == pytest.approx(1 + 0.25 + 0.0625)
    table = cov.lag_table()
    assert table[1, 1] == pytest.approx(1 * 0.0)
    assert table[0, 1] == pytest.approx(1 * 0.5 + 0.25 * 0.0)
    assert table[1, 0] == pytest.approx(1 * 0.25 + 0.5 * 0.0)
    rep = covariance_series(cov, box=(4, 4))
    assert rep.verdict is CONV and rep.tail_upper == 0.0


def test_covariance_rejects_impossible():
    bad = CovarianceSpec("callable", var=1.0, func=lambda a, b: 2.0 + 0 * a * b)
    with pytest.raises(ConditionError):
        covariance_series(bad, box=(3, 3))


# truncation inequalities

def test_truncation_examples():
    rep = verify_truncation_bounds(D.normal(0, 1), 2, 2)
    assert rep.tail[0] == pytest.approx(0.0455002638963584, rel=1e-12)
    assert rep.tail[1] == pytest.approx(0.25, rel=1e-15)
    rep = verify_truncation_bounds(D.two_point(1.0), 1.5, 0.5)
    assert rep.tail == (1.0, pytest.approx(0.5**-1.5))
    assert rep.truncated_mean[0] == 0.0


@pytest.mark.parametrize("dist,alpha,b", list(itertools.product(
    [D.normal(0, 1), D.two_point(1.0), D.uniform(-1, 1), D.discrete([-1, 2], [2 / 3, 1 / 3])],
    [1, 1.25, 1.5, 2], [0.5, 1, 2, 10])))
def test_truncation_sweep(dist, alpha, b):
    assert verify_truncation_bounds(dist, alpha, b).holds
