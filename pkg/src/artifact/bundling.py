"""Grand bundling for one agent with m independent items shifted by a common c."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .duality import FlowGraph, flow_from_parts
from .model import BundlingSetting, HierarchyRule, InterimMechanism, TypeSpace, enumerate_types


def bundling_threshold(s: BundlingSetting) -> Fraction:
    """Shift above which grand bundling is certified optimal."""
    return (s.v_max - s.v_min) / s.delta_mass**s.m


def bundle_price(s: BundlingSetting) -> Fraction:
    return s.c * s.m + sum(sup[0] for sup in s.supports)


def bundling_flow(s: BundlingSetting, ts: TypeSpace | None = None) -> FlowGraph:
    """Every type sends its whole mass to the all-minimum type, which drains to the sink."""
    ts = ts or enumerate_types(s)
    low = ts.types[0][0]
    lam = {(t, low): ts.prob[0][t] for t in ts.types[0] if t != low}
    return flow_from_parts(0, ts, lam, {low: Fraction(1)})


@dataclass
class BundlingMechanism:
    setting: BundlingSetting
    price: Fraction
    threshold: Fraction
    threshold_ok: bool
    interim: InterimMechanism
    flow: FlowGraph

    @property
    def revenue(self) -> Fraction:
        return self.price


def bundling_mechanism(s: BundlingSetting) -> BundlingMechanism:
    ts = enumerate_types(s)
    price = bundle_price(s)
    thr = bundling_threshold(s)
    ones = (Fraction(1),) * s.m
    pi = {t: ones for t in ts.types[0]}
    pay = {t: price for t in ts.types[0]}
    # every type outscores the sink, so each item always sells
    hier = HierarchyRule([{t: ones for t in ts.types[0]}], ones)
    mech = InterimMechanism(ts, [pi], [pay], hier, {"kind": "bundle"})
    return BundlingMechanism(s, price, thr, s.c >= thr, mech, bundling_flow(s, ts))


def discretize_uniform(c, m: int, grid: int) -> BundlingSetting:
    """Uniform [c, c+1]^m rounded down onto G cells per item.

    Values c + z/G (z = 0..G-1) are stored as support (z+1)/G with the shift
    reduced to c - 1/G, so that every support value is strictly positive.
    """
    if grid < 1 or m < 1:
        raise ValueError("m and grid must be positive")
    c = Fraction(c)
    g = Fraction(1, grid)
    if c < g:
        raise ValueError(f"c must be at least 1/grid = {g}")
    support = tuple(Fraction(z + 1, grid) for z in range(grid))
    probs = tuple(g for _ in range(grid))
    return BundlingSetting(c - g, (support,) * m, (probs,) * m, g)
