import random
from math import comb
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from zigzag_engine.hecke import (
    ALPHA,
    ORIGIN,
    IntFunction,
    TreeFunction,
    TreeVertex,
    big_o_compare,
    canonicalize,
    coset_normalize,
    fp_function,
    g0,
    g1,
    hecke_apply,
    hecke_poly,
    mat_mul,
    radius,
    reduce_and_project,
    vertex_matrix,
)
from zigzag_engine.padic import ExtScalar, teichmuller_int
from zigzag_engine.symmod import build_Q


def random_k(rng, p, size=10**6):
    while True:
        k = tuple(rng.randrange(-size, size) for _ in range(4))
        if (k[0] * k[3] - k[1] * k[2]) % p:
            return k


def random_vertex(rng, p, depth):
    side = rng.randrange(2)
    return TreeVertex(side, depth, tuple(rng.randrange(p) for _ in range(depth)))


def scaled(g, s):
    return tuple(x * s for x in g)


def test_centre_normalizes_to_origin():
    v, k = canonicalize((5, 0, 0, 5), 5, 4)
    assert v == ORIGIN
    assert k == (1, 0, 0, 1)


def test_step_in_then_alpha_lands_on_origin():
    p, n = 5, 4
    mu = teichmuller_int(3, p, n)
    g = mat_mul(vertex_matrix(g0(3), p, n), (1, 0, 0, p))
    v, k = canonicalize(g, p, n)
    assert v == ORIGIN
    assert k == (1, mu, 0, 1)


def test_radius():
    assert radius(ORIGIN) == 0
    assert radius(ALPHA) == 1
    assert radius(g0(1, 2)) == 2
    assert radius(g1(1, 2)) == 3


@pytest.mark.parametrize("p", [5, 7])
@pytest.mark.parametrize("n", [1, 3, 20])
def test_coset_round_trip(p, n):
    rng = random.Random(p * 100 + n)
    for depth in range(6):
        for _ in range(20):
            v = random_vertex(rng, p, depth)
            k = random_k(rng, p)
            s = rng.randrange(-3, 4)
            g = scaled(mat_mul(vertex_matrix(v, p, n), k), Fraction(p) ** s)
            w, h = canonicalize(g, p, n)
            assert w == v
            back = mat_mul(vertex_matrix(w, p, n), h)
            ratio = {Fraction(a) / Fraction(b) for a, b in zip(back, g) if b}
            assert len(ratio) == 1


def test_coset_normalize_moves_polynomial():
    p, n, r = 5, 3, 4
    v, q = coset_normalize((0, 1, 1, 0), {0: 1}, p, r, n)
    assert v == ORIGIN
    assert q == {r: 1}


def test_hecke_on_origin_monomial():
    p, r, n = 5, 7, 4
    f = IntFunction(p, r, n, 0, {ORIGIN: {r: 1}})
    Tf = f.hecke("T")
    assert Tf.data[ALPHA] == {r: 1}
    mod = p**n
    for lam in range(p):
        tl = teichmuller_int(lam, p, n)
        # (-[lam] X + p Y)^r
        want = {}
        for j in range(r + 1):
            c = comb(r, j) * (-tl) ** (r - j) * p**j % mod
            if c:
                want[j] = c
        assert Tf.data.get(g0(lam), {}) == want


def test_inward_step_of_first_child():
    p, r, n = 5, 7, 4
    f = IntFunction(p, r, n, 0, {g0(0): {r: 1}})
    assert f.hecke("T-") == IntFunction(p, r, n, 0, {ORIGIN: {r: 1}})


def test_hecke_apply_dispatch():
    f = IntFunction(5, 3, 2, 0, {ORIGIN: {0: 1}})
    assert hecke_apply(f, "T+") == f.hecke("T+")
    with pytest.raises(ValueError):
        f.hecke("T*")


@pytest.mark.parametrize("v", [ORIGIN, ALPHA, g0(1), g0(2, 3), g1(1), g1(0, 4)])
def test_support_geometry(v):
    p = 5
    f = IntFunction(p, 4, 3, 0, {v: {0: 1, 4: 1}})
    plus = f.hecke("T+", fast=False).support()
    minus = f.hecke("T-", fast=False).support()
    nb = plus | minus
    assert len(nb) == p + 1
    rad = radius(v)
    inward = [w for w in nb if radius(w) == rad - 1]
    outward = [w for w in nb if radius(w) == rad + 1]
    if v == ORIGIN:
        assert len(outward) == p + 1
    else:
        assert len(inward) == 1 and len(outward) == p
    if v.side == 0:
        assert all(radius(w) == rad + 1 for w in plus)
    else:
        assert all(radius(w) == rad + 1 for w in minus)


def test_big_o_compare():
    p, r, n = 5, 7, 8
    f = TreeFunction.term(p, r, n, ORIGIN, {r: 1}, ExtScalar.from_int(p, p * p, 2 * n))
    zero = TreeFunction.zero(p, r, n)
    assert big_o_compare(f, zero, 2).passed
    rep = big_o_compare(f, zero, Fraction(5, 2))
    assert not rep.passed
    assert rep.witness["monomial"] == "X^0Y^7"


def test_reduce_and_project_anchor():
    p, r, n = 5, 23, 6
    qb = build_Q(p, r)
    f = TreeFunction.from_terms(p, r, n, [(ORIGIN, {3: 1}), (g0(2), {2: 1})])
    img = reduce_and_project(f, "J1", qb)
    assert img == fp_function(p, p - 4, 3, [(ORIGIN, {0: 1})])
    img3 = reduce_and_project(TreeFunction.from_terms(p, r, n, [(ALPHA, {2: 1})]), "J3", qb)
    assert img3 == fp_function(p, p - 2, 2, [(ALPHA, {0: (2 - r) % p})])


def test_hecke_poly_matches_iteration():
    f = fp_function(5, 1, 3, [(ORIGIN, {0: 1})])
    lhs = hecke_poly(f, [1, 2, 1])
    rhs = f + f.hecke().scale(2) + f.hecke().hecke()
    assert lhs == rhs


def test_mod_p_deep_vertices():
    p = 7
    f = fp_function(p, 3, 2, [(g0(1, 2, 3, 4, 5, 6), {0: 1, 3: 2}), (g1(6, 5, 4, 3, 2), {1: 1})])
    assert f.hecke("T", fast=True) == f.hecke("T", fast=False)


terms_st = st.lists(
    st.tuples(
        st.integers(0, 1),
        st.lists(st.integers(0, 4), max_size=4),
        st.dictionaries(st.integers(0, 5), st.integers(1, 10**6), min_size=1, max_size=3),
    ),
    min_size=1,
    max_size=3,
)


def build(terms, n=3):
    f = IntFunction(5, 5, n, 0, {})
    for side, digits, poly in terms:
        f.add_term(TreeVertex(side, len(digits), tuple(digits)), poly)
    return f


@settings(max_examples=60, deadline=None)
@given(terms_st, terms_st, st.integers(1, 200))
def test_hecke_linear(a, b, c):
    f, g = build(a), build(b)
    for which in ("T", "T+", "T-"):
        assert (f + g.scale(c)).hecke(which) == f.hecke(which) + g.hecke(which).scale(c)


@settings(max_examples=60, deadline=None)
@given(terms_st)
def test_hecke_splits_and_fast_path_agrees(a):
    f = build(a)
    assert f.hecke("T") == f.hecke("T+", fast=False) + f.hecke("T-", fast=False)
    assert f.hecke("T+") == f.hecke("T+", fast=False)
    assert f.hecke("T-") == f.hecke("T-", fast=False)


@settings(max_examples=60, deadline=None)
@given(terms_st)
def test_tree_function_hecke_matches_integer_route(a):
    f = build(a, n=4)
    F = TreeFunction.from_terms(5, 5, 4, [(v, q) for v, q in f.data.items()])
    TF = F.hecke("T")
    Tf = f.hecke("T")
    for v, q in Tf.data.items():
        for j, c in q.items():
            assert (TF.coefficient(v, j) - ExtScalar.from_int(5, c, 8)).is_zero()
