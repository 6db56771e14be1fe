import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from caucus.stats import (
    InsufficientDataError,
    accuracy_base_rate,
    binomial_tail,
    byte_histogram_chi2,
    expected_grind_trials,
    fairness_statistic,
    monobit,
    monobit_z,
)

from oracles import binom_tail, chi2_df2_pvalue


def test_uniform_counts():
    assert fairness_statistic([100] * 10, [0.1] * 10) == (0.0, 1.0)


def test_two_categories():
    chi2, p = fairness_statistic([600, 400], [0.5, 0.5])
    assert chi2 == pytest.approx(40.0)
    # df=1 survival function is erfc(sqrt(x/2))
    assert p == pytest.approx(math.erfc(math.sqrt(20.0)), rel=1e-9)


def test_three_category_boundary():
    # counts chosen so chi2 is exactly 5.991 around E=1000: (x^2 + y^2 + (x+y)^2)/1000
    counts = [1000 + 45, 1000 - 60, 1000 + 15]
    chi2, p = fairness_statistic(counts, [1 / 3] * 3)
    assert chi2 == pytest.approx((45**2 + 60**2 + 15**2) / 1000)
    assert p == pytest.approx(chi2_df2_pvalue(chi2), rel=1e-9)
    assert chi2_df2_pvalue(5.991) == pytest.approx(0.05, abs=1e-4)


def test_fairness_errors():
    with pytest.raises(InsufficientDataError):
        fairness_statistic([10, 10], [0.5, 0.5])
    with pytest.raises(ValueError):
        fairness_statistic([300, 300], [0.6, 0.6])
    with pytest.raises(ValueError):
        fairness_statistic([600], [1.0])


def test_binomial_tail_grinding_case():
    # rnd_max=32, p=1/4, k=11: exact rational oracle summing the upper tail
    alpha = binomial_tail(32, Fraction(1, 4), 11)
    assert alpha == pytest.approx(float(binom_tail(32, Fraction(1, 4), 11)), rel=1e-12)
    assert 0.08 < alpha < 0.081
    assert expected_grind_trials(alpha) == pytest.approx(1 / alpha)
    assert expected_grind_trials(0.0) == math.inf


@given(st.integers(1, 40), st.integers(1, 9), st.integers(-1, 45))
def test_binomial_tail_property(n, denom, k):
    p = Fraction(1, denom + 1)
    assert binomial_tail(n, p, k) == pytest.approx(float(binom_tail(n, p, k)), abs=1e-12)


def test_monobit():
    assert monobit([b"\xff\x00", b"\x0f"]) == (12, 24)
    assert monobit_z([b"\xf0"]) == 0.0


def test_byte_histogram_flat():
    chi2, p = byte_histogram_chi2([bytes(range(256))] * 4)
    assert chi2 == 0.0 and p == 1.0
    with pytest.raises(InsufficientDataError):
        byte_histogram_chi2([])


def test_accuracy_base_rate():
    truths = [True] * 25 + [False] * 75
    acc, base, sigma = accuracy_base_rate([False] * 100, truths)
    assert acc == base == 0.75
    acc, base, _ = accuracy_base_rate(truths, truths)
    assert acc == 1.0 and base == pytest.approx(0.25**2 + 0.75**2)
    with pytest.raises(InsufficientDataError):
        accuracy_base_rate([], [])
