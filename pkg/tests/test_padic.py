from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from zigzag_engine.padic import (
    INFINITY,
    ExtScalar,
    PrecisionError,
    format_scalar,
    parse_scalar,
    teichmuller,
    teichmuller_int,
    valuation,
    vp,
)

K = 24


def E(p, n):
    return ExtScalar.from_int(p, n, K)


def test_uniformizer_squares_to_p():
    pi = ExtScalar.uniformizer(5, K)
    assert pi * pi == E(5, 5)


def test_inverse_of_p_has_negative_valuation():
    inv = E(5, 5).inverse()
    assert inv.vpi == -2
    assert valuation(inv) == -1
    assert inv * E(5, 5) == E(5, 1)


def test_five_pi_squared():
    x = E(5, 5) * ExtScalar.uniformizer(5, K)
    assert x * x == E(5, 125)
    assert valuation(x) == Fraction(3, 2)


def test_valuations_of_integers():
    assert vp(250, 5) == 3
    assert vp(7, 5) == 0
    assert valuation(E(5, 250)) == 3
    assert valuation(ExtScalar.exact_zero(5)) == INFINITY


def test_inexact_zero_has_no_valuation():
    x = E(5, 1)
    y = x - x
    with pytest.raises(PrecisionError):
        valuation(y)


def test_teichmuller_anchor_mod_25():
    assert teichmuller_int(2, 5, 2) == 7
    assert pow(7, 4, 25) == 1


@pytest.mark.parametrize("p", [5, 7, 11])
def test_teichmuller_lifts_sum_to_zero(p):
    # the nonzero lifts are the (p-1)-st roots of unity
    n = 6
    mod = p**n
    lifts = [teichmuller_int(a, p, n) for a in range(1, p)]
    assert sum(lifts) % mod == 0
    for k in range(1, p - 1):
        assert sum(pow(x, k, mod) for x in lifts) % mod == 0
    assert sum(pow(x, p - 1, mod) for x in lifts) % mod == (p - 1) % mod


def test_residue_rules():
    assert E(5, 7).residue() == 2
    assert ExtScalar.uniformizer(5, K).residue() == 0
    with pytest.raises(Exception):
        E(5, 5).inverse().residue()


def test_fraction_embedding():
    third = ExtScalar.from_fraction(5, Fraction(1, 3), K)
    assert third * E(5, 3) == E(5, 1)


@pytest.mark.parametrize(
    "text, vpi, digits",
    [
        ("5*pi", 3, (1,)),
        ("pi^3 * (1 + 2*pi)", 3, (1, 2)),
        ("2+pi", 0, (2, 1)),
        ("3*p", 2, (3,)),
    ],
)
def test_parse_scalar(text, vpi, digits):
    a = parse_scalar(text, 5, K)
    assert a.vpi == vpi
    assert tuple(a.digits[: len(digits)]) == digits
    assert parse_scalar(format_scalar(a), 5, K) == a


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_scalar("x+1", 5, K)


units = st.tuples(st.integers(1, 4), st.lists(st.integers(0, 4), max_size=8))


def _scalar(vpi, digits):
    lead, rest = digits
    return ExtScalar.from_digits(5, vpi, (lead, *rest))


scalars = st.builds(_scalar, st.integers(0, 4), units)


@settings(max_examples=150, deadline=None)
@given(scalars, scalars, scalars)
def test_ring_axioms(a, b, c):
    # equal up to the precision both sides carry
    assert (a + b - (b + a)).is_zero()
    assert (a * b - b * a).is_zero()
    assert ((a * b) * c - a * (b * c)).is_zero()
    assert (a * (b + c) - (a * b + a * c)).is_zero()


@settings(max_examples=100, deadline=None)
@given(scalars)
def test_inverse(a):
    assert valuation(a.inverse()) == -valuation(a)
    assert (a * a.inverse()).residue() == 1


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([5, 7, 11]), st.integers(1, 100), st.integers(1, 100))
def test_teichmuller_multiplicative(p, x, y):
    x, y = x % p or 1, y % p or 1
    n = 8
    lhs = teichmuller_int(x * y % p, p, n)
    rhs = teichmuller_int(x, p, n) * teichmuller_int(y, p, n) % p**n
    assert lhs == rhs
    assert teichmuller(x, p, 2 * n).residue() == x


@settings(max_examples=100, deadline=None)
@given(st.integers(-(10**12), 10**12).filter(bool), st.sampled_from([5, 7]))
def test_integer_valuation_matches_embedding(n, p):
    assert valuation(ExtScalar.from_int(p, n, 80)) == vp(n, p)
