from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact import verify
from artifact.axis1 import axis1_mechanism, revenue_formula
from artifact.axis3 import axis3_mechanism
from artifact.bundling import bundling_mechanism
from artifact.model import (
    Axis1Setting,
    Axis3Setting,
    BundlingSetting,
    HierarchyRule,
    InterimMechanism,
    ValuePair,
    enumerate_types,
)
from artifact.verify import (
    GUARD_ENV,
    GuardError,
    check_bic,
    check_bir,
    crosscheck_axes,
    expost_allocate,
    expost_shares,
    interim_from_expost,
    lp_optimal_revenue,
    lp_solution_violations,
    mc_simulate,
)

V = ValuePair(1, 2)
a, b = F(1), F(2)
half = F(1, 2)


def test_axis1_is_bic_ir():
    m = axis1_mechanism(Axis1Setting(2, 2, V, half)).interim
    ts = m.typespace
    assert check_bic(m, ts) is None and check_bir(m, ts) is None


def test_shifted_payment_gives_witness():
    m = axis1_mechanism(Axis1Setting(2, 2, V, half)).interim
    ts = m.typespace
    pay = [dict(p) for p in m.pay]
    pay[0][(b, b)] -= F(1, 10)
    pay[0][(a, a)] += F(1, 10)
    broken = InterimMechanism(ts, m.pi, pay)
    # no misreport gains here; the bottom type pays for nothing
    assert check_bic(broken, ts) is None
    w = check_bir(broken, ts)
    assert (w.agent, w.true_type, w.report, w.gain) == (0, (a, a), None, F(1, 10))


def test_bic_witness_gain_is_exact():
    m = axis1_mechanism(Axis1Setting(2, 2, V, half)).interim
    ts = m.typespace
    pay = [dict(p) for p in m.pay]
    pay[1][(b, b)] += F(1, 1000)
    broken = InterimMechanism(ts, m.pi, pay)
    w = check_bic(broken, ts)
    assert w.agent == 1 and w.true_type == (b, b)
    assert w.gain == broken.utility(1, w.true_type, w.report) - broken.utility(1, w.true_type, w.true_type) > 0


def test_single_type_agents_vacuous():
    s = BundlingSetting.build(1, [[3]], [[1]])
    mech = bundling_mechanism(s)
    assert check_bic(mech.interim, mech.interim.typespace) is None
    assert lp_optimal_revenue(mech.interim.typespace).objective == 4


def test_surplus_violation():
    m = axis1_mechanism(Axis1Setting(1, 1, V, half)).interim
    pay = [dict(m.pay[0])]
    pay[0][(b,)] = 3
    w = check_bir(InterimMechanism(m.typespace, m.pi, pay), m.typespace)
    assert w.report is None and w.gain == 1


def test_r1_zero_utilities():
    m = axis3_mechanism(Axis3Setting.build(2, V, F(1, 5), F(1, 5))).interim
    assert {m.utility(0, t, t) for t in m.typespace.types[0]} == {0}


def _rule(scores, coin=1):
    return HierarchyRule([{t: s} for t, s in scores], (F(coin),))


def test_expost_rules():
    t = (F(1),)
    assert expost_shares(_rule([(t, (F(-1),))] * 2), [t, t]) == [{}]
    assert expost_shares(_rule([(t, (F(2),))] * 2), [t, t]) == [{0: half, 1: half}]
    assert expost_shares(_rule([(t, (F(0),))] * 3, F(1, 3)), [t] * 3) == [{i: F(1, 9) for i in range(3)}]


def test_expost_tie_distribution():
    t = (F(1),)
    hier = _rule([(t, (F(2),))] * 2)
    rng = np.random.default_rng(7)
    wins = [expost_allocate(hier, [t, t], rng)[0] for _ in range(4000)]
    assert abs(wins.count(0) / 4000 - 0.5) < 0.05


def test_r7_interim_from_enumeration():
    s = Axis3Setting.build(2, V, F(4, 5), F(4, 5))
    m = axis3_mechanism(s)
    pi = interim_from_expost(m.hierarchy, m.interim.typespace)
    assert pi[0][(a, a)][0] == s.p * s.q / 2


def test_single_agent_interim_is_indicator():
    s = Axis1Setting(1, 2, V, half)
    m = axis1_mechanism(s)
    pi = interim_from_expost(m.hierarchy, m.interim.typespace)[0]
    assert pi == {(b, b): (1, 1), (b, a): (1, 1), (a, b): (1, 1), (a, a): (0, 0)}


def test_interim_guard(monkeypatch):
    monkeypatch.delenv(GUARD_ENV, raising=False)
    monkeypatch.setattr(verify, "INTERIM_TERM_LIMIT", 3)
    m = axis1_mechanism(Axis1Setting(1, 2, V, half))
    with pytest.raises(GuardError):
        interim_from_expost(m.hierarchy, m.interim.typespace)
    monkeypatch.setenv(GUARD_ENV, "yes")
    interim_from_expost(m.hierarchy, m.interim.typespace)


def test_lp_guard(monkeypatch):
    monkeypatch.delenv(GUARD_ENV, raising=False)
    monkeypatch.setattr(verify, "LP_SIZE_LIMIT", 10)
    with pytest.raises(GuardError):
        lp_optimal_revenue(enumerate_types(Axis1Setting(2, 2, V, half)))


def test_lp_examples():
    ts = enumerate_types(Axis1Setting(1, 1, V, half))
    assert lp_optimal_revenue(ts).objective == 1
    s = Axis1Setting(1, 2, V, half)
    ts = enumerate_types(s)
    sol = lp_optimal_revenue(ts)
    assert sol.status == "optimal" and sol.objective == revenue_formula(s)
    assert lp_solution_violations(ts, sol) == []
    sol.payments[(0, (b, b))] += 5
    assert lp_solution_violations(ts, sol)


def test_mc_reproducible_and_concordant():
    m = axis1_mechanism(Axis1Setting(2, 2, V, half))
    one = mc_simulate(m.interim, 1, seed=3)
    assert repr(one) == repr(mc_simulate(m.interim, 1, seed=3))
    big = mc_simulate(m.interim, 40000, seed=11)
    assert abs(big.revenue_mean - float(m.revenue)) <= 4 * big.revenue_se
    mech = bundling_mechanism(BundlingSetting.build(4, [[1, 2]] * 2, [[half, half]] * 2))
    r = mc_simulate(mech.interim, 1000, seed=0)
    assert r.revenue_se == 0 and r.revenue_mean == 10


@pytest.mark.parametrize("p,n", [(half, 2), (half, 1), (F(4, 5), 3), (F(1, 5), 1)])
def test_crosscheck(p, n):
    rep = crosscheck_axes(1, 2, p, n)
    assert rep.ok, rep.diffs
    if n == 1:
        ts = enumerate_types(Axis1Setting(1, 2, V, p))
        assert set(rep.revenues.values()) == {lp_optimal_revenue(ts).objective}


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.fractions(F(1, 10), F(9, 10), max_denominator=10))
def test_lp_solutions_feasible(n, p):
    ts = enumerate_types(Axis1Setting(n, 1, V, p))
    sol = lp_optimal_revenue(ts)
    assert lp_solution_violations(ts, sol) == []
