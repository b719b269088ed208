import math

import pytest
from hypothesis import given, settings, strategies as st

from zigzag_engine.binom import (
    SumSpec,
    beta_coefficients,
    binom_exact,
    check_all,
    check_congruence_lemma,
    check_sum_proposition,
    decompose,
    grid_values,
    kummer_carries,
    residue_class_sum,
    val_binom,
)
from zigzag_engine.report import PreconditionError


def test_exact_values():
    assert binom_exact(11, 3) == 165
    assert binom_exact(23, 7) == 245157
    assert val_binom(5, 23, 7) == 0
    assert val_binom(5, 11, 4) == 1


def test_out_of_range_binomial_warns():
    with pytest.warns(UserWarning):
        assert binom_exact(3, 5) == 0


def test_cubic_class_sums_at_eleven():
    assert residue_class_sum(SumSpec(5, 11, 3, 0)) == 495
    assert residue_class_sum(SumSpec(5, 11, 3, 1)) == 2805


def test_cubic_class_constant_sum_anchor():
    # direct summation against the closed form, mod 125
    assert 495 % 125 == 120
    rep = check_sum_proposition(5, 11, "P3.4", 1)
    assert rep.passed
    assert any("agree" in n for n in rep.notes)


def test_cubic_class_linear_sum_anchor():
    assert 2805 % 25 == 5 == (-220) % 25
    assert check_sum_proposition(5, 11, "P3.4", 2).passed


def test_decompose():
    assert decompose(5, 23, 3) == (1, 1)
    assert decompose(7, 99, 3) == (16, 0)
    with pytest.raises(PreconditionError):
        decompose(5, 10, 3)


@pytest.mark.parametrize("p, r", [(5, 11), (5, 23)])
def test_high_power_lemma(p, r):
    assert check_congruence_lemma(p, r, "L3.1").passed


def test_lemma_precondition():
    with pytest.raises(PreconditionError):
        check_congruence_lemma(5, 10, "L3.1")


def test_quadratic_class_cubic_sum_anchor():
    r = 3 + 2 * 6 * 7
    rep = check_sum_proposition(7, r, "P3.8", 4)
    assert rep.passed
    # independent recomputation
    js = [j for j in range(3, r) if (j - 2) % 6 == 0]
    lhs = sum(math.comb(j, 3) * math.comb(r, j) for j in js)
    rhs_num = math.comb(r, 3)
    assert (lhs * 6 - rhs_num) % 7**2 == 0


def test_beta_family():
    fam, rep = beta_coefficients(5, 23)
    assert rep.passed
    assert 2 in fam.beta and 10 in fam.beta
    assert all((j - 2) % 4 == 0 for j in fam.beta)
    with pytest.raises(PreconditionError):
        beta_coefficients(5, 11)


@pytest.mark.parametrize("p, r", [(5, 11), (5, 23), (5, 43), (7, 15), (7, 99), (11, 33)])
def test_all_identities(p, r):
    reps = check_all(p, r)
    assert reps
    bad = [rep.claim for rep in reps if not rep.passed]
    assert not bad


def test_grid_values():
    assert grid_values(5, 3, [1, 2], [0, 1]) == [7, 11, 23, 43]


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([2, 3, 5, 7, 11]), st.integers(0, 400), st.integers(0, 400))
def test_kummer_matches_exact_valuation(p, n, k):
    if k > n:
        n, k = k, n
    assert kummer_carries(p, n, k) == val_binom(p, n, k)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([5, 7]), st.integers(1, 4), st.integers(0, 1))
def test_sum_props_hold_on_grid(p, n, t):
    r = 3 + n * (p - 1) * p**t
    for part in range(1, 6):
        assert check_sum_proposition(p, r, "P3.4", part).passed
