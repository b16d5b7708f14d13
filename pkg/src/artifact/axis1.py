"""Optimal mechanism for n i.i.d. agents and m i.i.d. items valued a (w.p. p) or b."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .duality import FlowGraph, flow_from_parts
from .model import Axis1Setting, HierarchyRule, InterimMechanism, TypeSpace, enumerate_types
from .numerics import binom, binom_cdf, binom_cdf_strict, binom_pmf, partition_sum
from .verify import _guard

ZERO = Fraction(0)
# full type enumeration has 2^m types per agent
ENUM_ITEM_LIMIT = 12


def edge_flow(s: Axis1Setting, k: int) -> Fraction:
    """Flow on each edge from layer k+1 (k+1 high items) down to layer k."""
    m, p = s.m, s.p
    if k >= m:
        return ZERO
    tail = sum((binom(m, z) * (1 - p) ** z * p ** (m - z) for z in range(k + 1, m + 1)), ZERO)
    return tail / ((m - k) * binom(m, k))


def f_score(s: Axis1Setting, k: int) -> Fraction:
    """Score of a low-valued item for a type with k high items."""
    a, b, p, m = s.values.a, s.values.b, s.p, s.m
    if k == m:
        return a
    return a - edge_flow(s, k) / ((1 - p) ** k * p ** (m - k)) * (b - a)


def axis1_kstar(s: Axis1Setting) -> int:
    return next(k for k in range(s.m + 1) if f_score(s, k) > 0)


def axis1_flow(s: Axis1Setting, ts: TypeSpace | None = None) -> list[FlowGraph]:
    ts = ts or enumerate_types(s)
    a, b = s.values.a, s.values.b
    lam = {}
    for t in ts.types[0]:
        k = ts.high_count(t)
        for j, v in enumerate(t):
            if v == b:
                child = t[:j] + (a,) + t[j + 1:]
                lam[(t, child)] = edge_flow(s, k - 1)
    bottom = (a,) * s.m
    return [flow_from_parts(i, ts, lam, {bottom: Fraction(1)}) for i in range(s.n)]


def axis1_scores(s: Axis1Setting, ts: TypeSpace | None = None) -> HierarchyRule:
    ts = ts or enumerate_types(s)
    b = s.values.b
    table = {}
    for t in ts.types[0]:
        fk = f_score(s, ts.high_count(t))
        table[t] = tuple(b if v == b else fk for v in t)
    # a score of exactly 0 only occurs below k*, where the item stays unsold
    return HierarchyRule([dict(table) for _ in range(s.n)], (ZERO,) * s.m)


def pi_high(s: Axis1Setting) -> Fraction:
    return partition_sum(s.n, s.p, 1 - s.p)


def pi_low(s: Axis1Setting, k: int, kstar: int | None = None) -> Fraction:
    """Interim probability of winning a low-valued item for a type with k high items."""
    kstar = axis1_kstar(s) if kstar is None else kstar
    if k < kstar or k >= s.m:
        return ZERO
    n, m, p = s.n, s.m, s.p
    le = binom_cdf(m - 1, 1 - p, k)
    lt = binom_cdf_strict(m - 1, 1 - p, k)
    return p ** (n - 1) * (le**n - lt**n) / (n * binom_pmf(m - 1, 1 - p, k))


def payment_by_k(s: Axis1Setting, k: int, kstar: int | None = None) -> Fraction:
    kstar = axis1_kstar(s) if kstar is None else kstar
    a, b, m = s.values.a, s.values.b, s.m
    out = k * b * pi_high(s)
    if k >= kstar:
        out += (m - k) * a * pi_low(s, k, kstar)
        out -= (b - a) * sum((pi_low(s, z, kstar) for z in range(kstar, k)), ZERO)
    return out


def revenue_formula(s: Axis1Setting) -> Fraction:
    n, m, p, b = s.n, s.m, s.p, s.values.b
    kstar = axis1_kstar(s)
    acc = ZERO
    for k in range(kstar, m):
        acc += (binom_cdf(m - 1, 1 - p, k) ** n - binom_cdf_strict(m - 1, 1 - p, k) ** n) * f_score(s, k)
    return m * (b * (1 - p**n) + p**n * acc)


@dataclass
class Axis1Mechanism:
    setting: Axis1Setting
    kstar: int
    f: dict
    interim: InterimMechanism
    hierarchy: HierarchyRule
    revenue: Fraction
    flows: list


def axis1_mechanism(s: Axis1Setting) -> Axis1Mechanism:
    _guard(s.m, ENUM_ITEM_LIMIT, "axis1 type enumeration (items)")
    ts = enumerate_types(s)
    kstar = axis1_kstar(s)
    b = s.values.b
    hi = pi_high(s)
    low = {k: pi_low(s, k, kstar) for k in range(s.m + 1)}
    pays = {k: payment_by_k(s, k, kstar) for k in range(s.m + 1)}
    pi_tab, pay_tab = {}, {}
    for t in ts.types[0]:
        k = ts.high_count(t)
        pi_tab[t] = tuple(hi if v == b else low[k] for v in t)
        pay_tab[t] = pays[k]
    hier = axis1_scores(s, ts)
    mech = InterimMechanism(
        ts,
        [dict(pi_tab) for _ in range(s.n)],
        [dict(pay_tab) for _ in range(s.n)],
        hier,
        {"kind": "axis1", "kstar": kstar},
    )
    return Axis1Mechanism(
        s,
        kstar,
        {k: f_score(s, k) for k in range(s.m + 1)},
        mech,
        hier,
        revenue_formula(s),
        axis1_flow(s, ts),
    )
