import json
from fractions import Fraction as F

import pytest

from artifact import serialize
from artifact.axis1 import axis1_mechanism
from artifact.axis2 import axis2_mechanism
from artifact.axis3 import axis3_mechanism
from artifact.bundling import bundling_mechanism
from artifact.duality import certify
from artifact.model import (
    Axis1Setting,
    Axis2Setting,
    Axis3Setting,
    BundlingSetting,
    SettingError,
    ValuePair,
)

V = ValuePair(1, 2)


def built():
    m1 = axis1_mechanism(Axis1Setting(2, 2, V, F(1, 2)))
    m2 = axis2_mechanism(Axis2Setting.build(V, [F(1, 5), F(3, 5)]))
    m3 = axis3_mechanism(Axis3Setting.build(2, V, F(3, 10), F(7, 10)))  # stored swapped
    mb = bundling_mechanism(BundlingSetting.build(4, [[1, 2]] * 2, [[F(1, 2)] * 2] * 2))
    return [
        (m1.setting, m1.interim, m1.flows),
        (m2.setting, m2.interim, m2.flows),
        (m3.setting, m3.interim, m3.flows),
        (mb.setting, mb.interim, [mb.flow]),
    ]


@pytest.mark.parametrize("case", range(4))
def test_mechanism_and_flow_round_trip(case):
    setting, mech, flows = built()[case]
    d = serialize.mechanism_to_json(setting, mech)
    text = serialize.dumps(d)
    assert text == serialize.dumps(serialize.mechanism_to_json(setting, mech))
    s2, m2 = serialize.mechanism_from_json(json.loads(text))
    assert s2 == setting
    assert m2.pi == mech.pi and m2.pay == mech.pay
    assert serialize.dumps(serialize.mechanism_to_json(s2, m2)) == text
    fs, f2 = serialize.flows_from_json(json.loads(serialize.dumps(serialize.flows_to_json(setting, flows))), m2.typespace)
    assert fs == setting
    assert [f.lam for f in f2] == [f.lam for f in flows]
    assert [f.mu for f in f2] == [f.mu for f in flows]
    assert certify(f2, m2, m2.typespace).optimal


def test_swapped_axis3_uses_original_orientation():
    setting, mech, _ = built()[2]
    d = serialize.mechanism_to_json(setting, mech)
    assert d["setting"]["p"] == "3/10" and d["setting"]["q"] == "7/10"


def test_unknown_fields_and_schema_rejected():
    setting, mech, flows = built()[0]
    d = serialize.mechanism_to_json(setting, mech)
    with pytest.raises(SettingError):
        serialize.mechanism_from_json({**d, "bonus": 1})
    with pytest.raises(SettingError):
        serialize.mechanism_from_json({**d, "schema": "optmech/mechanism/v9"})
    f = serialize.flows_to_json(setting, flows)
    with pytest.raises(SettingError):
        serialize.flows_from_json({**f, "bonus": 1})


def test_certificate_json():
    setting, mech, flows = built()[0]
    doc = serialize.certificate_to_json(setting, certify(flows, mech, mech.typespace))
    assert doc["schema"] == "optmech/cert/v1"
    assert doc["optimal"] is True and doc["dual_objective"] == "51/16"
