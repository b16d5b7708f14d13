from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from artifact import axis1
from artifact.axis1 import (
    axis1_flow,
    axis1_kstar,
    axis1_mechanism,
    edge_flow,
    f_score,
    payment_by_k,
    pi_high,
    pi_low,
    revenue_formula,
)
from artifact.duality import certify, check_flow_feasible
from artifact.model import Axis1Setting, ValuePair, enumerate_types, hierarchy_interim
from artifact.verify import GUARD_ENV, GuardError, interim_from_expost, lp_optimal_revenue

from conftest import interior

V = ValuePair(1, 2)
a, b = F(1), F(2)
half = F(1, 2)


def test_single_item_chain_flow():
    s = Axis1Setting(1, 1, V, F(1, 3))
    (fl,) = axis1_flow(s)
    assert fl.lam == {((b,), (a,)): F(2, 3)}
    assert fl.mu == {(b,): 0, (a,): 1}
    assert edge_flow(s, 0) == 1 - s.p


def test_layer_cut_edge_count_m4():
    s = Axis1Setting(1, 4, V, F(1, 3))
    ts = enumerate_types(s)
    (fl,) = axis1_flow(s, ts)
    cut = [e for e in fl.lam if ts.high_count(e[0]) == 4]
    assert len(cut) == 4
    assert sum(1 for e in fl.lam if ts.high_count(e[0]) == 2) == 2 * 6


def test_scores_and_kstar_examples():
    s = Axis1Setting(1, 1, V, half)
    assert f_score(s, 0) == 0
    assert axis1_kstar(s) == 1
    assert axis1_kstar(Axis1Setting(1, 1, ValuePair(1, F(3, 2)), half)) == 0
    # posted price a beats b whenever a > b(1-p)
    assert axis1_kstar(Axis1Setting(1, 1, ValuePair(1, F(3, 2)), F(2, 5))) == 0


def test_interim_examples():
    assert pi_high(Axis1Setting(1, 3, V, F(1, 4))) == 1
    assert pi_high(Axis1Setting(2, 2, V, half)) == F(3, 4)
    assert pi_low(Axis1Setting(1, 1, ValuePair(1, F(3, 2)), half), 0) == 1


def test_single_item_posted_prices():
    s = Axis1Setting(1, 1, V, half)
    assert (payment_by_k(s, 1), payment_by_k(s, 0), revenue_formula(s)) == (2, 0, 1)
    s = Axis1Setting(1, 1, ValuePair(1, F(3, 2)), half)
    assert (payment_by_k(s, 1), payment_by_k(s, 0), revenue_formula(s)) == (1, 1, 1)


def test_two_by_two_mechanism():
    s = Axis1Setting(2, 2, V, half)
    mech = axis1_mechanism(s)
    ts = mech.interim.typespace
    assert mech.kstar == 1
    assert mech.f == {0: F(-1, 2), 1: F(1, 2), 2: 1}
    assert mech.revenue == F(51, 16) == mech.interim.revenue()
    assert lp_optimal_revenue(ts).objective == mech.revenue
    assert certify(mech.flows, mech.interim, ts).optimal
    assert hierarchy_interim(mech.hierarchy, ts) == mech.interim.pi
    assert interim_from_expost(mech.hierarchy, ts) == mech.interim.pi


def test_sink_node_receives_layer_flow():
    s = Axis1Setting(1, 2, V, half)
    ts = enumerate_types(s)
    (fl,) = axis1_flow(s, ts)
    into = sum(w for (u, v), w in fl.lam.items() if v == (a, a))
    assert fl.source[(a, a)] + into == F(1, 4) + F(3, 8) + F(3, 8) == fl.mu[(a, a)]
    assert check_flow_feasible(fl, ts) == (True, None)


def test_enumeration_guard(monkeypatch):
    monkeypatch.delenv(GUARD_ENV, raising=False)
    with pytest.raises(GuardError):
        axis1_mechanism(Axis1Setting(1, 13, V, half))
    monkeypatch.setattr(axis1, "ENUM_ITEM_LIMIT", 1)
    with pytest.raises(GuardError):
        axis1_mechanism(Axis1Setting(1, 2, V, half))
    monkeypatch.setenv(GUARD_ENV, "1")
    assert axis1_mechanism(Axis1Setting(1, 2, V, half)).kstar == 1


values = st.sampled_from([ValuePair(1, 2), ValuePair(1, F(3, 2)), ValuePair(2, 5), ValuePair(F(1, 3), 1)])


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10), interior(), values)
def test_f_monotone_in_k(m, p, v):
    s = Axis1Setting(1, m, v, p)
    f = [f_score(s, k) for k in range(m + 1)]
    assert f == sorted(f)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(1, 8), interior(), values)
def test_interim_monotone(n, m, p, v):
    s = Axis1Setting(n, m, v, p)
    kstar = axis1_kstar(s)
    low = [pi_low(s, k, kstar) for k in range(m)]
    assert low == sorted(low)
    assert all(x <= pi_high(s) for x in low)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), interior(), values)
def test_truthful_utility_identity(n, m, p, v):
    s = Axis1Setting(n, m, v, p)
    mech = axis1_mechanism(s)
    ts = mech.interim.typespace
    low = {k: pi_low(s, k, mech.kstar) for k in range(m + 1)}
    for t in ts.types[0]:
        k = ts.high_count(t)
        expect = (v.b - v.a) * sum((low[z] for z in range(k)), F(0))
        assert mech.interim.utility(0, t, t) == expect
