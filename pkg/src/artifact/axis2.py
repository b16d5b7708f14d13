"""Optimal mechanism for n non-identical agents and two i.i.d. items.

Agent i values each item at a with probability q_i and at b otherwise.
Internally agents are sorted by decreasing q_i; tables are indexed by the
sorted position and ``setting.order`` maps back to the caller's indices.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .duality import FlowGraph, flow_from_parts
from .model import (
    Axis2Setting,
    HierarchyRule,
    InterimMechanism,
    TypeSpace,
    enumerate_types,
    hierarchy_interim,
)

ZERO = Fraction(0)


def low_scores(s: Axis2Setting, i: int) -> tuple[Fraction, Fraction]:
    """(score of a low item when the other item is high, score when both are low)."""
    a, b, q = s.values.a, s.values.b, s.q[i]
    return a - (1 - q) / (2 * q) * (b - a), a - (1 - q * q) / (2 * q * q) * (b - a)


def axis2_flow(s: Axis2Setting, ts: TypeSpace | None = None) -> list[FlowGraph]:
    ts = ts or enumerate_types(s)
    a, b = s.values.a, s.values.b
    bb, ba, ab, aa = (b, b), (b, a), (a, b), (a, a)
    out = []
    for i, q in enumerate(s.q):
        top = (1 - q) ** 2 / 2
        mid = (1 - q * q) / 2
        lam = {(bb, ba): top, (bb, ab): top, (ba, aa): mid, (ab, aa): mid}
        out.append(flow_from_parts(i, ts, lam, {aa: Fraction(1)}))
    return out


def axis2_scores(s: Axis2Setting, ts: TypeSpace | None = None) -> HierarchyRule:
    ts = ts or enumerate_types(s)
    a, b = s.values.a, s.values.b
    tables = []
    for i in range(s.n):
        h_ab, h_aa = low_scores(s, i)
        tables.append({
            (b, b): (b, b),
            (b, a): (b, h_ab),
            (a, b): (h_ab, b),
            (a, a): (h_aa, h_aa),
        })
    return HierarchyRule(tables, (Fraction(1), Fraction(1)))


@dataclass
class Axis2Partition:
    S1: list
    S2: list
    S3: list
    S4: list


def axis2_partition(s: Axis2Setting, i: int) -> Axis2Partition:
    """Split the other agents by how their q compares with q_i (indices are sorted positions)."""
    qi = s.q[i]
    part = Axis2Partition([], [], [], [])
    for k, qk in enumerate(s.q):
        if k == i:
            continue
        if qk * qk > qi:
            part.S1.append(k)
        elif qk > qi:
            part.S2.append(k)
        elif qk > qi * qi:
            part.S3.append(k)
        else:
            part.S4.append(k)
    return part


def pi_high(s: Axis2Setting, i: int) -> Fraction:
    from .numerics import tie_share

    others = [k for k in range(s.n) if k != i]
    return tie_share([s.q[k] for k in others], [1 - s.q[k] for k in others])


def payments(s: Axis2Setting, hi: Fraction, lo_b: Fraction, lo_a: Fraction) -> dict:
    """Payments from pi(b), pi(low | other high) and pi(low | both low)."""
    a, b = s.values.a, s.values.b
    return {
        (b, b): 2 * b * hi - (b - a) * (lo_b + lo_a),
        (b, a): b * hi + a * lo_b - (b - a) * lo_a,
        (a, b): b * hi + a * lo_b - (b - a) * lo_a,
        (a, a): 2 * a * lo_a,
    }


@dataclass
class Axis2Mechanism:
    setting: Axis2Setting
    case: list
    partitions: list
    hierarchy: HierarchyRule
    interim: InterimMechanism
    revenue: Fraction
    flows: list


def axis2_mechanism(s: Axis2Setting) -> Axis2Mechanism:
    ts = enumerate_types(s)
    a, b = s.values.a, s.values.b
    hier = axis2_scores(s, ts)
    pi = hierarchy_interim(hier, ts)
    pays, cases = [], []
    for i in range(s.n):
        hi = pi[i][(b, b)][0]
        lo_b = pi[i][(a, b)][0]
        lo_a = pi[i][(a, a)][0]
        pays.append(payments(s, hi, lo_b, lo_a))
        cases.append(1 if lo_a > 0 else 2 if lo_b > 0 else 3)
    mech = InterimMechanism(ts, pi, pays, hier, {"kind": "axis2", "case": cases})
    return Axis2Mechanism(
        s,
        cases,
        [axis2_partition(s, i) for i in range(s.n)],
        hier,
        mech,
        mech.revenue(),
        axis2_flow(s, ts),
    )
