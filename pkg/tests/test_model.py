from fractions import Fraction as F

import pytest

from artifact.model import (
    Axis1Setting,
    Axis2Setting,
    Axis3Setting,
    BundlingSetting,
    SettingError,
    ValuePair,
    enumerate_types,
    profile_prob,
    setting_from_json,
    setting_to_json,
)

V = ValuePair(1, 2)
a, b = F(1), F(2)


def test_value_pair_order():
    with pytest.raises(SettingError):
        ValuePair(2, 1)
    with pytest.raises(SettingError):
        ValuePair(0, 1)


@pytest.mark.parametrize("p", [0, 1, F(3, 2), F(-1, 2)])
def test_degenerate_probabilities_rejected(p):
    with pytest.raises(SettingError):
        Axis1Setting(1, 1, V, p)
    with pytest.raises(SettingError):
        Axis3Setting.build(1, V, F(1, 2), p)


def test_axis1_types_and_order():
    ts = enumerate_types(Axis1Setting(1, 2, V, F(1, 2)))
    assert ts.types[0] == [(b, b), (b, a), (a, b), (a, a)]
    assert all(ts.prob[0][t] == F(1, 4) for t in ts.types[0])
    assert [ts.high_count(t) for t in ts.types[0]] == [2, 1, 1, 0]
    assert ts.types == enumerate_types(Axis1Setting(1, 2, V, F(1, 2))).types


def test_axis3_product_measure_and_swap():
    ts = enumerate_types(Axis3Setting.build(1, V, F(1, 2), F(1, 3)))
    assert ts.prob[0][(a, b)] == F(1, 3)
    s = Axis3Setting.build(2, V, F(1, 5), F(3, 5))
    assert (s.p, s.q, s.swapped) == (F(3, 5), F(1, 5), True)


def test_axis2_sorting_keeps_permutation():
    s = Axis2Setting.build(V, [F(1, 3), F(2, 3), F(1, 2)])
    assert s.q == (F(2, 3), F(1, 2), F(1, 3))
    assert s.order == (1, 2, 0)
    assert s.original_q() == [F(1, 3), F(2, 3), F(1, 2)]


def test_profile_prob_examples():
    ts = enumerate_types(Axis1Setting(2, 2, V, F(1, 2)))
    assert profile_prob(ts, [(b, b), (a, b)]) == F(1, 16)
    one = enumerate_types(Axis1Setting(1, 2, V, F(1, 3)))
    assert profile_prob(one, [(a, b)]) == one.prob[0][(a, b)]
    s = Axis2Setting.build(V, [F(2, 3), F(1, 3)])
    # q1^2 * (1-q2)^2
    assert profile_prob(enumerate_types(s), [(a, a), (b, b)]) == F(16, 81)
    with pytest.raises(KeyError):
        profile_prob(ts, [(b, b), (a, F(7))])


def test_bundling_types():
    s = BundlingSetting.build(4, [[1, 2], [1, 2]], [[F(1, 2)] * 2] * 2)
    ts = enumerate_types(s)
    assert ts.types[0][0] == (5, 5)
    assert ts.prob[0][(F(5), F(6))] == F(1, 4)
    assert (s.v_min, s.v_max) == (1, 2)
    assert s.delta_mass == F(1, 2)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(c=1, supports=[[2, 1]], probs=[[F(1, 2)] * 2]),
        dict(c=1, supports=[[0, 1]], probs=[[F(1, 2)] * 2]),
        dict(c=1, supports=[[1, 2]], probs=[[F(1, 2), F(1, 3)]]),
        dict(c=-1, supports=[[1, 2]], probs=[[F(1, 2)] * 2]),
        dict(c=1, supports=[[1, 2]], probs=[[F(1, 4), F(3, 4)]], delta_mass=F(1, 2)),
    ],
)
def test_bundling_validation(kwargs):
    with pytest.raises(SettingError):
        BundlingSetting.build(**kwargs)


@pytest.mark.parametrize(
    "s",
    [
        Axis1Setting(2, 3, V, F(2, 5)),
        Axis2Setting.build(V, [F(1, 5), F(4, 5)]),
        Axis3Setting.build(2, V, F(1, 5), F(3, 5)),
        BundlingSetting.build(4, [[1, 2], [1, 3]], [[F(1, 2)] * 2, [F(2, 3), F(1, 3)]]),
    ],
)
def test_setting_json_round_trip(s):
    d = setting_to_json(s)
    assert d["schema"] == "optmech/setting/v1"
    assert setting_from_json(d) == s


def test_setting_json_rejects_unknown_and_decimal():
    d = setting_to_json(Axis1Setting(1, 1, V, F(1, 2)))
    with pytest.raises(SettingError):
        setting_from_json({**d, "extra": 1})
    with pytest.raises(SettingError):
        setting_from_json({**d, "p": "0.5"})
    with pytest.raises(SettingError):
        setting_from_json({**d, "schema": "optmech/setting/v0"})
