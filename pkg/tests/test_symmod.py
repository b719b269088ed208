import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zigzag_engine.symmod import (
    GammaElement,
    NotInSubmodule,
    SymPoly,
    build_Q,
    gamma_act,
    generators,
    jh_factors,
    nullspace,
    project_JH,
    project_vector,
    q_structure_report,
    rank,
    rep_matrix,
    rref,
    solve_in_span,
    sym_matrix,
    theta,
    theta_factor,
    theta_times,
)


def mono(p, r, j, c=1):
    return SymPoly.monomial(p, r, j, c)


def test_identity_acts_trivially():
    P = SymPoly(5, (1, 2, 3, 4))
    assert gamma_act(GammaElement(5, 1, 0, 0, 1), P) == P


def test_swap_reverses_coefficients():
    P = SymPoly(5, (1, 2, 3, 4))
    assert gamma_act(GammaElement(5, 0, 1, 1, 0), P).coeffs == (4, 3, 2, 1)


def test_scalar_matrix_multiplies_by_power():
    P = SymPoly(7, (1, 2, 3))
    assert gamma_act(GammaElement(7, 3, 0, 0, 3), P) == P.scale(9)


def test_theta_transforms_by_determinant():
    p = 5
    th = theta(p)
    for g in generators(p):
        assert gamma_act(g, th) == th.scale(g.det())


def test_theta_factor():
    p = 5
    Q = SymPoly(p, (1, 0, 2))
    assert theta_factor(theta(p) * Q) == Q
    assert theta_factor(mono(p, 8, 0)) is None


def test_linear_algebra_helpers():
    p = 5
    a = np.array([[1, 2, 3], [2, 4, 6], [0, 1, 1]], dtype=np.int64)
    assert rank(a, p) == 2
    ns = nullspace(a, p)
    assert ns.shape[0] == 1
    assert not np.any(a @ ns[0] % p)
    red, piv = rref(a, p)
    assert piv == [0, 1]
    coeffs = solve_in_span(a, np.array([3, 6, 9]), p)
    assert coeffs is not None
    assert np.array_equal(coeffs @ a % p, np.array([3, 6, 9]) % p)
    assert solve_in_span(a[:1], np.array([0, 1, 0]), p) is None


def test_jh_factors():
    f = jh_factors(5)
    assert (f["J1"].m, f["J1"].twist) == (1, 3)
    assert (f["J2"].m, f["J2"].twist) == (1, 1)
    assert (f["J3"].m, f["J3"].twist) == (3, 2)


@pytest.mark.parametrize("p, r, dim, case", [(5, 11, 6, 1), (5, 23, 8, 2), (7, 33, 10, 1), (7, 45, 12, 2)])
def test_dimension_and_case(p, r, dim, case):
    qb = build_Q(p, r)
    assert qb.dim == dim
    assert qb.case == case


def test_small_weight_structure():
    rep = q_structure_report(5, 11)
    assert rep.passed
    assert rep.params["split"] is True
    assert rep.params["jh"] == ["J1", "J3"]


def test_large_weight_structure():
    rep = q_structure_report(5, 23)
    assert rep.passed
    assert rep.params["dim_Q"] == 8
    assert rep.params["checks"]["V*/V** non-split"]


@pytest.mark.parametrize("p, r", [(5, 23), (7, 45)])
def test_generator_anchors(p, r):
    qb = build_Q(p, r)
    got = project_JH(mono(p, r, 3), "J1", qb)
    assert got.coeffs == (1,) + (0,) * (p - 4)
    th = theta_times(p, r, {0: 1})
    assert project_vector(th, "J2", qb).tolist() == [1, 0]
    assert not project_vector(th, "J3", qb).any()
    th2 = theta_times(p, r, {1: 1})
    assert project_vector(th2, "J3", qb).tolist() == [1] + [0] * (p - 2)
    want = [0] * (p - 1)
    want[0] = (2 - r) % p
    assert project_JH(mono(p, r, 2), "J3", qb).coeffs == tuple(want)


def test_j3_undefined_off_submodule():
    qb = build_Q(5, 23)
    with pytest.raises(NotInSubmodule):
        project_vector(mono(5, 23, 3).vector(), "J3", qb)


def _restrict(sub, act, p):
    """Matrix of act on the row space of sub, in the coordinates of sub."""
    return np.array([solve_in_span(sub, row @ act % p, p) for row in sub], dtype=np.int64)


@pytest.mark.parametrize("p, r", [(5, 11), (5, 23), (7, 45)])
def test_maps_are_equivariant(p, r):
    qb = build_Q(p, r)
    f = jh_factors(p)
    for g in generators(p):
        qa = qb.q_action(g)
        tgt = {k: rep_matrix(p, f[k].m, f[k].twist, g) for k in f}
        M1 = qb.maps["J1"]
        assert np.array_equal(qa @ M1 % p, M1 @ tgt["J1"] % p)
        vs = _restrict(qb.vstar, qa, p)
        M3 = qb.maps["J3"]
        assert np.array_equal(vs @ M3 % p, M3 @ tgt["J3"] % p)
        if qb.case == 2:
            sub = np.array([solve_in_span(qb.vstar, v, p) for v in qb.j2_sub], dtype=np.int64)
            s2 = _restrict(sub, vs, p)
            M2 = qb.maps["J2"]
            assert np.array_equal(s2 @ M2 % p, M2 @ tgt["J2"] % p)


group = st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 4), st.integers(0, 4)).filter(
    lambda e: (e[0] * e[3] - e[1] * e[2]) % 5
)
polys = st.lists(st.integers(0, 4), min_size=8, max_size=8).map(lambda c: SymPoly(5, tuple(c)))


@settings(max_examples=100, deadline=None)
@given(group, group, polys)
def test_action_is_a_left_action(e1, e2, P):
    g, h = GammaElement(5, *e1), GammaElement(5, *e2)
    assert gamma_act(g @ h, P) == gamma_act(g, gamma_act(h, P))


@settings(max_examples=100, deadline=None)
@given(group, polys, polys)
def test_action_is_linear(e, P, Q):
    g = GammaElement(5, *e)
    assert gamma_act(g, P + Q) == gamma_act(g, P) + gamma_act(g, Q)
    m = sym_matrix(5, 7, g.entries)
    assert np.array_equal(P.vector() @ m % 5, np.array(gamma_act(g, P).coeffs))
