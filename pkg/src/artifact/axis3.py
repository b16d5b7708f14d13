"""Optimal mechanisms for n i.i.d. agents and two non-identical items.

Item 1 is worth a with probability p, item 2 with probability q, and b
otherwise; settings are canonicalised to p >= q.  Seven parameter regions
each get their own point on a one-parameter family of flows and, for
regions 2-5, a zero-score coin that makes the (b,b) -> (b,a) incentive
constraint bind.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .duality import FlowGraph, flow_from_parts
from .model import Axis3Setting, HierarchyRule, InterimMechanism, TypeSpace, enumerate_types

ZERO = Fraction(0)
ONE = Fraction(1)

REGIONS = ("R1", "R2", "R3", "R4", "R5", "R6", "R7")


class ClassificationError(RuntimeError):
    pass


class RegionPreconditionError(RuntimeError):
    """A region's construction left its admissible range (flow or coin)."""


@dataclass(frozen=True)
class FullTables:
    """Interim probabilities when every nonnegative score is served in full."""

    bb1: Fraction
    bb2: Fraction
    ab1: Fraction
    ba2: Fraction
    aa1: Fraction
    aa2: Fraction


def full_tables(s: Axis3Setting) -> FullTables:
    n, p, q = s.n, s.p, s.q
    bb1 = (1 - p**n) / (n * (1 - p))
    bb2 = (1 - q**n) / (n * (1 - q))
    aa = (p * q) ** (n - 1) / n
    return FullTables(bb1, bb2, p ** (n - 1) * bb2, q ** (n - 1) * bb1, aa, aa)


def cond(s: Axis3Setting) -> bool:
    """Whether some Variant I flow admits a coin in [0, 1]."""
    f = full_tables(s)
    return f.ab1 - f.ba2 <= f.aa1


def boundary_slacks(s: Axis3Setting) -> dict:
    """Signed distance of each region-defining inequality from its threshold."""
    a, b, p, q = s.values.a, s.values.b, s.p, s.q
    f = full_tables(s)
    return {
        "r1_ratio": (1 - p) * (1 - q) / (1 - p * q) - a / b,
        "p_low": p - (b - a) / b,
        "p_high": p - b / (b + a),
        "pq": p * q - (b - a) / (b + a),
        "q_low": q - (b - a) / b,
        "r7": a / (b - a) - (1 - q) / (p * q),
        "cond": f.aa1 - (f.ab1 - f.ba2),
    }


def axis3_classify(s: Axis3Setting, literal_r3: bool = False) -> str:
    """Region label for a canonical (p >= q) setting.

    With ``literal_r3`` the region-3 test uses ``pq >= (b-a)/(b+a)``; the
    default uses ``pq <= (b-a)/(b+a)``, which is the condition under which
    the region-3 flow keeps the (a,a) item-2 score nonpositive.
    """
    a, b, p, q = s.values.a, s.values.b, s.p, s.q
    if (1 - p) * (1 - q) / (1 - p * q) > a / b:
        return "R1"
    if p < (b - a) / b:
        return "R2"
    r7 = (1 - q) / (p * q) <= a / (b - a)
    if not cond(s) and not r7:
        return "R6"
    if r7:
        return "R7"
    t = (b - a) / (b + a)
    pq_ok = p * q >= t if literal_r3 else p * q <= t
    if (b - a) / b <= p <= b / (b + a) and pq_ok:
        return "R3"
    if p >= b / (b + a) and q <= (b - a) / b:
        return "R4"
    if p * q >= t and q >= (b - a) / b and (1 - q) / (p * q) > a / (b - a):
        return "R5"
    raise ClassificationError(f"no region for p={p}, q={q}, a={a}, b={b}")


def axis3_x(s: Axis3Setting, region: str) -> Fraction:
    a, b, p, q = s.values.a, s.values.b, s.p, s.q
    r = a / (b - a)
    top = (1 - p) * (1 - q)
    if region == "R1":
        x = (r * p * (1 - q) + top - r * (1 - p) * q) / 2
    elif region == "R2":
        x = r * p * (1 - q)
    elif region == "R3":
        x = 1 - p - r * p * q
    elif region == "R4":
        x = top - r * (1 - p) * q
    elif region == "R5":
        x = r * p * q - p * (1 - q)
    elif region in ("R6", "R7"):
        x = top
    else:
        raise ValueError(region)
    if not 0 <= x <= top:
        raise RegionPreconditionError(f"{region}: flow parameter {x} outside [0, {top}]")
    return x


def axis3_virtual(s: Axis3Setting, x: Fraction) -> dict:
    """Score table for flow parameter x, keyed by type."""
    a, b, p, q = s.values.a, s.values.b, s.p, s.q
    d = b - a
    h2_ba = a - ((1 - p) * (1 - q) - x) / ((1 - p) * q) * d
    h1_ab = a - x / (p * (1 - q)) * d
    h1_aa = a - (1 - p - x) / (p * q) * d
    h2_aa = a - (p * (1 - q) + x) / (p * q) * d
    return {(b, b): (b, b), (b, a): (b, h2_ba), (a, b): (h1_ab, b), (a, a): (h1_aa, h2_aa)}


def axis3_flow(s: Axis3Setting, x: Fraction, ts: TypeSpace | None = None) -> list[FlowGraph]:
    ts = ts or enumerate_types(s)
    a, b, p, q = s.values.a, s.values.b, s.p, s.q
    bb, ba, ab, aa = (b, b), (b, a), (a, b), (a, a)
    lam = {
        (bb, ba): (1 - p) * (1 - q) - x,
        (bb, ab): x,
        (ba, aa): 1 - p - x,
        (ab, aa): p * (1 - q) + x,
    }
    return [flow_from_parts(i, ts, lam, {aa: ONE}) for i in range(s.n)]


def axis3_delta(s: Axis3Setting, region: str, f: FullTables | None = None) -> Fraction | None:
    """Zero-score coin for regions 2-5 (None elsewhere)."""
    f = f or full_tables(s)
    n, p, q = s.n, s.p, s.q
    aa = (p * q) ** (n - 1)
    if region == "R2":
        d = f.ba2 / f.ab1
    elif region == "R3":
        d = n * (f.ab1 - f.ba2) / aa
    elif region == "R4":
        d = (f.ab1 - f.aa1) / f.ba2
    elif region == "R5":
        d = n * (f.ba2 - f.ab1 + f.aa1) / aa
    else:
        return None
    if not 0 <= d <= 1:
        raise RegionPreconditionError(f"{region}: coin {d} outside [0, 1]")
    return d


@dataclass(frozen=True)
class Region:
    id: str
    x: Fraction
    variant: str
    zero_score_target: tuple | None
    coin: Fraction | None


def axis3_region(s: Axis3Setting, literal_r3: bool = False) -> Region:
    rid = axis3_classify(s, literal_r3)
    a, b = s.values.a, s.values.b
    target = {"R2": (0, (a, b)), "R3": (0, (a, a)), "R4": (1, (b, a)), "R5": (1, (a, a))}.get(rid)
    return Region(rid, axis3_x(s, rid), "II" if rid in ("R6", "R7") else "I", target, axis3_delta(s, rid))


def axis3_interim(s: Axis3Setting, region: Region) -> dict:
    """Per-type interim allocation (item 1, item 2) for the region's mechanism."""
    a, b = s.values.a, s.values.b
    f = full_tables(s)
    ab1, ba2, aa1, aa2 = f.ab1, f.ba2, f.aa1, f.aa2
    rid = region.id
    if rid == "R1":
        ab1 = ba2 = aa1 = aa2 = ZERO
    elif rid == "R2":
        ab1, aa1, aa2 = ba2, ZERO, ZERO
    elif rid == "R3":
        aa1, aa2 = ab1 - ba2, ZERO
    elif rid == "R4":
        ba2, aa2 = ab1 - aa1, ZERO
    elif rid == "R5":
        aa2 = ba2 - ab1 + aa1
    elif rid == "R6":
        aa2 = ZERO
    return {
        (b, b): (f.bb1, f.bb2),
        (b, a): (f.bb1, ba2),
        (a, b): (ab1, f.bb2),
        (a, a): (aa1, aa2),
    }


def axis3_payments(s: Axis3Setting, region: Region, pi: dict) -> dict:
    a, b = s.values.a, s.values.b
    bb1, bb2 = pi[(b, b)]
    ba2 = pi[(b, a)][1]
    ab1 = pi[(a, b)][0]
    aa1, aa2 = pi[(a, a)]
    if region.variant == "I":
        top = b * (bb1 + bb2) - (b - a) * (ba2 + aa1)
    else:
        top = b * (bb1 + bb2) - (b - a) * (ab1 + aa2)
    return {
        (b, b): top,
        (b, a): b * bb1 + a * ba2 - (b - a) * aa1,
        (a, b): a * ab1 + b * bb2 - (b - a) * aa2,
        (a, a): a * (aa1 + aa2),
    }


def tight_residual(s: Axis3Setting, pi: dict) -> Fraction:
    """pi2(b,a) - pi1(a,b) + pi1(a,a) - pi2(a,a)."""
    a, b = s.values.a, s.values.b
    return pi[(b, a)][1] - pi[(a, b)][0] + pi[(a, a)][0] - pi[(a, a)][1]


def axis3_hierarchy(s: Axis3Setting, region: Region, pi: dict | None = None, tier: bool = True) -> HierarchyRule:
    """Hierarchy rule realising the region's interim table.

    Score ties between the two low-valued types on an item are broken in
    favour of the type whose other item is high ((a,b) on item 1, (b,a) on
    item 2); this is the ordering the region 6/7 mechanisms need and it is
    harmless elsewhere.  Each zero-score tie class gets the coin equal to the
    fraction of its full allocation the region table serves.
    """
    a, b = s.values.a, s.values.b
    scores = axis3_virtual(s, region.x)
    rank = {(b, b): (2, 2), (b, a): (2, 1), (a, b): (1, 2), (a, a): (0, 0)} if tier else None
    zero_coin = {}
    if pi is not None:
        f = full_tables(s)
        full = {(a, b, 0): f.ab1, (a, a, 0): f.aa1, (b, a, 1): f.ba2, (a, a, 1): f.aa2}
        for (u, v, j), fv in full.items():
            t = (u, v)
            if scores[t][j] == 0:
                r = rank[t][j] if tier else 0
                zero_coin[(j, r)] = pi[t][j] / fv
    n = s.n
    return HierarchyRule(
        [dict(scores) for _ in range(n)],
        (ONE, ONE),
        [dict(rank) for _ in range(n)] if tier else None,
        zero_coin,
    )


@dataclass
class Axis3Mechanism:
    setting: Axis3Setting
    region: Region
    hierarchy: HierarchyRule
    interim: InterimMechanism
    revenue: Fraction
    flows: list


def axis3_mechanism(s: Axis3Setting, literal_r3: bool = False) -> Axis3Mechanism:
    ts = enumerate_types(s)
    region = axis3_region(s, literal_r3)
    pi = axis3_interim(s, region)
    pays = axis3_payments(s, region, pi)
    hier = axis3_hierarchy(s, region, pi)
    mech = InterimMechanism(
        ts,
        [dict(pi) for _ in range(s.n)],
        [dict(pays) for _ in range(s.n)],
        hier,
        {"kind": "axis3", "region": region.id, "swapped": s.swapped},
    )
    return Axis3Mechanism(s, region, hier, mech, mech.revenue(), axis3_flow(s, region.x, ts))


def axis3_flow_induced(s: Axis3Setting, region: Region) -> InterimMechanism:
    """The mechanism induced directly by the region's flow, ties broken uniformly."""
    from .duality import decompose_flow, induced_payments
    from .model import hierarchy_interim

    ts = enumerate_types(s)
    hier = axis3_hierarchy(s, region, tier=False)
    pi = hierarchy_interim(hier, ts)
    flows = axis3_flow(s, region.x, ts)
    pays = [induced_payments(fl, decompose_flow(fl), pi[fl.agent], ts) for fl in flows]
    return InterimMechanism(ts, pi, pays, hier, {"kind": "axis3-flow-induced", "region": region.id})
