from fractions import Fraction

import pytest

from conftest import regime_instance
from zigzag_engine.hecke import ORIGIN, g0
from zigzag_engine.lemma_verify import (
    BLOCK_IDS,
    PROP_IDS,
    REGIMES,
    Instance,
    ball,
    block_precondition,
    build_block,
    lambda_tilde,
    lemma62_bounded_search,
    prop_precondition,
    scan_ap,
    unproven_regime,
    verify_section_prop,
    verify_telescoping,
)
from zigzag_engine.padic import ExtScalar
from zigzag_engine.report import PreconditionError

PARAM_BLOCKS = {"chi_prime", "psi", "psi_prime"}
WEIGHTS = [(5, 23), (5, 103), (7, 45)]


def applicable_blocks(inst):
    out = []
    for b in BLOCK_IDS:
        try:
            block_precondition(b, inst)
        except PreconditionError:
            continue
        out.append(b)
    return out


def test_instance_constants():
    inst = Instance.from_digits(5, 23, (1,))
    assert inst.t == 1
    assert inst.tau == Fraction(5, 2)
    assert inst.tau_tilde == Fraction(3, 2)
    assert inst.case == 2


@pytest.mark.parametrize(
    "p, r, ap",
    [
        (3, 11, (3, 1)),  # p too small
        (5, 22, (3, 1)),  # wrong congruence class
        (5, 7, (3, 1)),  # weight too small
        (5, 23, (2, 1)),  # slope 1, not 3/2
    ],
)
def test_instance_preconditions(p, r, ap):
    vpi, lead = ap
    with pytest.raises(PreconditionError):
        Instance(p, r, ExtScalar.from_digits(p, vpi, (lead,) + (0,) * 60))


def test_scan_hits_each_regime():
    for name, want in REGIMES.items():
        inst = regime_instance(5, 23, name)
        assert inst is not None and want(inst)
        assert inst.ap.vpi == 3


def test_small_weight_only_has_one_regime():
    assert regime_instance(5, 11, "tau=t+1/2").tau == Fraction(1, 2)
    assert scan_ap(5, 11, REGIMES["tau=t"]) is None


def test_half_step_window_is_empty():
    # tau lies in (1/2)Z, so t < tau < t + 1/2 never occurs
    for name in REGIMES:
        assert not unproven_regime(regime_instance(5, 23, name))


def test_chi_block_shapes():
    small = regime_instance(5, 11, "tau=t+1/2")
    assert build_block("chi", small).support() == {ORIGIN}
    big = regime_instance(5, 23, "tau>t+1")
    assert build_block("chi", big).support() == {ORIGIN, g0(0)}


def test_psi_support_is_a_chain():
    inst = regime_instance(5, 23, "tau=t+1")
    f = build_block("psi", inst, param=2)
    assert f.support() == {g0(2), g0(2, 0)}


def test_block_precondition():
    inst = regime_instance(5, 23, "tau>t+1")
    with pytest.raises(PreconditionError):
        verify_telescoping("phi", inst)
    with pytest.raises(PreconditionError):
        verify_telescoping("psi", inst, param=0)


@pytest.mark.parametrize("p, r", WEIGHTS)
@pytest.mark.parametrize("regime", list(REGIMES))
def test_telescoping_blocks(p, r, regime):
    inst = regime_instance(p, r, regime)
    assert inst is not None
    blocks = applicable_blocks(inst)
    assert blocks
    for b in blocks:
        params = [1, p - 1] if b in PARAM_BLOCKS else [None]
        for a in params:
            rep = verify_telescoping(b, inst, param=a)
            assert rep.passed, (b, a, rep.witness)
            assert rep.margin >= 0


def test_each_block_is_exercised():
    seen = set()
    for regime in REGIMES:
        seen.update(applicable_blocks(regime_instance(5, 23, regime)))
    assert seen == set(BLOCK_IDS)


def test_chi_bound_needs_positive_t():
    # with t = 0 the -a_p [1, Y^r] leftover has valuation 3/2 < 2
    inst = regime_instance(5, 11, "tau=t+1/2")
    rep = verify_telescoping("chi", inst)
    assert not rep.passed
    assert rep.witness["monomial"] == "X^0Y^11"
    assert rep.witness["vertex"] == [0, 0, []]
    assert rep.witness["valuation"] == Fraction(3, 2)


@pytest.mark.parametrize("block, regime", [("chi", "tau=t"), ("phi", "tau<t"), ("xi", "tau>t+1"), ("psi", "tau=t+1")])
def test_bounds_are_sharp(block, regime):
    inst = regime_instance(5, 23, regime)
    rep = verify_telescoping(block, inst, param=1)
    assert rep.passed and rep.margin == 0
    probe = verify_telescoping(block, inst, param=1, bound=rep.required + Fraction(1, 2))
    assert not probe.passed


@pytest.mark.parametrize("r", [23, 43, 103])
@pytest.mark.parametrize("regime", list(REGIMES))
def test_section_props(r, regime):
    inst = regime_instance(5, r, regime)
    ran = 0
    for pid in PROP_IDS:
        try:
            prop_precondition(pid, inst)
        except PreconditionError:
            continue
        rep = verify_section_prop(pid, inst)
        assert rep.passed, (pid, rep.witness)
        ran += 1
    assert ran


def test_first_section_prop_constant():
    inst = regime_instance(5, 23, "tau=t")
    assert lambda_tilde(inst) != 0
    rep = verify_section_prop("F1", inst)
    assert rep.passed


def test_third_section_prop_d_bar():
    hi = verify_section_prop("F3_ge_t1", regime_instance(5, 23, "tau>t+1"))
    eq = verify_section_prop("F3_ge_t1", regime_instance(5, 23, "tau=t+1"))
    assert hi.params["d_bar"] == 0
    assert eq.params["d_bar"] != 0


def test_ball_sizes():
    assert len(ball(5, 0)) == 1
    assert len(ball(5, 1)) == 7
    assert len(ball(5, 2)) == 7 + 6 * 5


@pytest.mark.parametrize("p", [5, 7])
@pytest.mark.parametrize("R", [0, 1, 2, 3])
def test_bounded_search_finds_nothing(p, R):
    rep = lemma62_bounded_search(p, R)
    assert rep.passed
    assert rep.params["rank"] == rep.params["unknowns"]


@pytest.mark.parametrize("p", [5, 7])
def test_bounded_search_control(p):
    rep = lemma62_bounded_search(p, 1, control=True)
    assert rep.passed
    assert rep.witness["solution"]
