import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kbv.bounds import (
    LOG_1_5,
    BoundParams,
    beta_threshold,
    chernoff_poisson_tail,
    exact_poisson_tail,
    largest_odd_at_most,
    le_bound,
    lemma_bonf_bound,
    lemma_high_bound,
    lemma_many_bound,
    poisson_tail_interval,
    rough_bound,
    theorem1_bound,
    truncation_remainder_bound,
)
from kbv.errors import PreconditionError
from kbv.primes import GammaSet, gamma_first_k, gamma_window


def test_le_bound_is_conservative():
    assert le_bound(Fraction(1, 2), 0.5000001)
    assert not le_bound(Fraction(1, 2), 0.5)
    assert le_bound(Fraction(10**9), math.inf)


def test_theorem1_example():
    g = gamma_window(10**6, 2, 29)
    b = theorem1_bound(BoundParams(1, 1, 1, 10**6, g))
    assert b.c == pytest.approx(1 / 24)
    assert b.branch == "rho_log_rho"
    assert b.exponent_arg == pytest.approx(6 * math.log(6), rel=1e-12)
    assert b.value == pytest.approx(11 * math.exp(-6 * math.log(6) / 24), rel=1e-12)
    assert b.value == pytest.approx(7.031, rel=1e-3)
    assert b.vacuous
    assert b.cardinality_ok


def test_theorem1_leading_constant():
    g = gamma_first_k(10**6, 10)
    b1 = theorem1_bound(BoundParams(1, 1, 0.5, 10**6, g))
    b3 = theorem1_bound(BoundParams(1, 3, 0.5, 10**6, g))
    assert b1.value / math.exp(-b1.c * b1.exponent_arg) == pytest.approx(11)
    assert b3.value / b1.value == pytest.approx(19 / 11)
    assert b1.c == pytest.approx(0.5 / 18)


def test_theorem1_log_n_branch():
    g = gamma_first_k(10**4, 4)
    b = theorem1_bound(BoundParams(1, 1, 1, 10**4, g))
    assert b.branch == "log_n"
    assert b.exponent_arg == pytest.approx(math.log(10**4))


def test_theorem1_flags():
    g = gamma_first_k(1000, 5)
    b = theorem1_bound(BoundParams(1, 1, 1, 1000, g))
    assert "|Gamma| < e^2" in b.warnings
    big = gamma_first_k(200, 40)
    b = theorem1_bound(BoundParams(1, 1, 1, 200, big))
    assert not b.cardinality_ok


def test_theorem1_monotone_in_n():
    g = gamma_first_k(10**3, 10)
    values = [theorem1_bound(BoundParams(1, 1, 1, n, GammaSet(n, g.primes))).value
              for n in (10**3, 10**4, 10**5, 10**6, 10**7, 10**8, 10**9)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_params_validation():
    g = gamma_first_k(100, 3)
    with pytest.raises(PreconditionError):
        BoundParams(1, 1, 1, 100, g, delta=0.4)
    with pytest.raises(PreconditionError):
        BoundParams(1, 0.5, 1, 100, g)
    with pytest.raises(PreconditionError):
        BoundParams(0, 1, 1, 100, g)
    assert BoundParams(1, 1, 1, 100, g).delta == 0.25
    with pytest.raises(PreconditionError):
        theorem1_bound(BoundParams(1, 1, 1, 100, GammaSet(100, (2,))))


def test_lemma_many_examples():
    e = math.e
    assert lemma_many_bound(1, 1, 1, e) == pytest.approx(3 * math.exp(e / 2), rel=1e-12)
    assert lemma_many_bound(1, 1, 1, e) == pytest.approx(11.66, rel=2e-3)
    # delta = e kills the middle term
    rho = 5.0
    assert lemma_many_bound(e, 1, 1, rho) == pytest.approx(3 * math.exp(-(e / 2) * rho * math.log(rho)))
    assert lemma_many_bound(1, 1, 7, e) / lemma_many_bound(1, 1, 1, e) == pytest.approx(3)


def test_lemma_high_examples():
    e = math.e
    h = lemma_high_bound(1, 1, 1, e)
    assert h.beta == pytest.approx(e / LOG_1_5, rel=1e-12)
    assert h.beta == pytest.approx(6.704, abs=1e-3)
    expo = -e / 2 + 5 * LOG_1_5 * e + 1
    assert expo == pytest.approx(5.1529, abs=2e-3)
    assert h.value == pytest.approx(3 * math.exp(expo), rel=1e-12)
    assert lemma_high_bound(1, 1, 3, e).value / h.value == pytest.approx(5 / 3)


def test_lemma_bonf_examples():
    g = gamma_first_k(10**6, 10)
    b = lemma_bonf_bound(BoundParams(1, 1, 1, 10**6, g, delta=0.25))
    assert b.c == pytest.approx(1 / 16)
    assert largest_odd_at_most(5.7) == 5
    assert largest_odd_at_most(7.0) == 7
    assert largest_odd_at_most(0.9) is None


def test_truncation_bound():
    g = gamma_first_k(10**6, 10)
    params = BoundParams(1, 1, 1, 10**6, g, delta=0.3)
    tb = truncation_remainder_bound(1, params)
    alpha, beta = params.alpha, params.beta
    assert math.sqrt(beta * 10) > alpha
    assert tb.case == "else"
    tau = g.tau_float
    assert tb.first == pytest.approx(3 * (math.e * tau) * alpha * (2 * math.e) ** (2 * tau))
    tail = alpha * (math.e**2 * beta * 10 / alpha**2) ** alpha
    assert tb.count_displayed == pytest.approx(4 * 10**2 / 10**6 * tail)
    # with t = 1 both readings coincide
    assert tb.as_displayed == pytest.approx(tb.as_derived)
    half = truncation_remainder_bound(1, BoundParams(0.5, 1, 1, 10**6, g, delta=0.1))
    assert half.count_derived > half.count_displayed
    with pytest.raises(PreconditionError):
        truncation_remainder_bound(2, params)


def test_case_selector_example():
    # beta = 6.7, |Gamma| = 10, alpha = 2.7
    assert math.sqrt(6.7 * 10) > 2.7


def test_rough_bound_examples():
    assert rough_bound(math.e, 2, 1) == pytest.approx(16 / math.e)
    assert rough_bound(100, 0, 1) == pytest.approx(math.log(100) / 100)
    grid = [10**k for k in range(2, 9)]
    vals = [rough_bound(n, math.ceil(math.log(n)), 1) for n in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    with pytest.raises(PreconditionError):
        rough_bound(10, 1, 0)


def test_chernoff_examples():
    assert exact_poisson_tail(1, 2) == pytest.approx(math.e - 2, rel=1e-12)
    assert chernoff_poisson_tail(1, 2) == pytest.approx(1.84726, abs=1e-5)
    assert chernoff_poisson_tail(0.5, 5) == pytest.approx((math.e / 10) ** 5)
    assert chernoff_poisson_tail(0.5, 5) >= exact_poisson_tail(Fraction(1, 2), 5)
    with pytest.raises(PreconditionError):
        chernoff_poisson_tail(1, 1)


@pytest.mark.parametrize("lam", [Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2)])
def test_chernoff_dominates_exact_tail(lam):
    start = math.ceil(lam)
    for x in range(start + 1, start + 11):
        lo, hi = poisson_tail_interval(lam, x)
        assert lo <= hi
        assert le_bound(hi, chernoff_poisson_tail(float(lam), x))


@given(st.fractions(min_value=Fraction(1, 50), max_value=5, max_denominator=50), st.integers(0, 30))
def test_tail_interval_is_tight(lam, x):
    lo, hi = poisson_tail_interval(lam, x)
    assert 0 < lo <= hi
    assert (hi - lo) <= lo * Fraction(1, 10**40)


def test_beta_threshold_formula():
    assert beta_threshold(0.5, 1, 10) == pytest.approx(2 * 0.5 / (2 * LOG_1_5) * 10 * math.log(10))
