"""Dual flows on the type graph, their decomposition, flow-induced scores and payments,
and the optimality certificate built from them."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .model import InterimMechanism, Type, TypeSpace
from .numerics import DomainError
from . import verify

ZERO = Fraction(0)


class FlowStructureError(ValueError):
    """Flow nodes do not match the type space, or a path refers to unknown types."""


class UnsupportedFlowError(ValueError):
    """The flow's edge support has a cycle."""


@dataclass
class FlowGraph:
    """One agent's dual flow.  ``lam[(u, v)]`` is the flow on edge u -> v."""

    agent: int
    nodes: list
    lam: dict
    mu: dict
    source: dict

    def out_edges(self, u: Type) -> list:
        return [(v, f) for (x, v), f in self.lam.items() if x == u]

    def in_edges(self, v: Type) -> list:
        return [(u, f) for (u, y), f in self.lam.items() if y == v]


@dataclass
class FlowDecomposition:
    paths: list  # each path is a tuple of types v1..vL (source and sink implicit)
    xi: list


@dataclass
class OptimalityCertificate:
    flow_feasible: bool
    bic_ok: bool
    bir_ok: bool
    dual_objective: Fraction
    mechanism_revenue: Fraction
    optimal: bool
    witnesses: list = field(default_factory=list)
    infeasible_node: tuple | None = None


def flow_from_parts(agent: int, ts: TypeSpace, lam: dict, mu: dict) -> FlowGraph:
    nodes = list(ts.types[agent])
    return FlowGraph(
        agent,
        nodes,
        {e: Fraction(f) for e, f in lam.items() if f != 0},
        {v: Fraction(mu.get(v, 0)) for v in nodes},
        {v: ts.prob[agent][v] for v in nodes},
    )


def check_flow_feasible(flow: FlowGraph, ts: TypeSpace) -> tuple[bool, Type | None]:
    """Conservation and nonnegativity; returns (ok, first offending node in type order)."""
    types = ts.types[flow.agent]
    known = set(types)
    if set(flow.nodes) != known:
        raise FlowStructureError(f"agent {flow.agent}: flow nodes differ from the type space")
    for (u, v) in flow.lam:
        if u not in known or v not in known:
            raise FlowStructureError(f"edge {u}->{v} touches an unknown type")
    inflow = {t: ZERO for t in types}
    outflow = {t: ZERO for t in types}
    bad_edge_head = None
    for (u, v), f in flow.lam.items():
        if f < 0 and bad_edge_head is None:
            bad_edge_head = v
        outflow[u] += f
        inflow[v] += f
    for t in types:
        if flow.mu.get(t, ZERO) < 0 or t == bad_edge_head:
            return False, t
        if ts.prob[flow.agent][t] + inflow[t] != outflow[t] + flow.mu.get(t, ZERO):
            return False, t
    return True, None


def topological_order(flow: FlowGraph) -> list:
    """Kahn's algorithm over the positive-flow edges, lowest node index first."""
    idx = {t: k for k, t in enumerate(flow.nodes)}
    indeg = {t: 0 for t in flow.nodes}
    succ: dict = {t: [] for t in flow.nodes}
    for (u, v), f in flow.lam.items():
        if f > 0:
            indeg[v] += 1
            succ[u].append(v)
    ready = sorted((t for t in flow.nodes if indeg[t] == 0), key=idx.get)
    order = []
    while ready:
        u = ready.pop(0)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
        ready.sort(key=idx.get)
    if len(order) != len(flow.nodes):
        raise UnsupportedFlowError(f"agent {flow.agent}: flow support contains a cycle")
    return order


def decompose_flow(flow: FlowGraph) -> FlowDecomposition:
    """Peel source-to-sink paths off the flow, visiting start nodes in topological order.

    At each step the path continues along the lowest-index head with positive
    residual edge flow, and drops to the sink only when no such edge remains.
    """
    order = topological_order(flow)
    idx = {t: k for k, t in enumerate(flow.nodes)}
    lam = {e: f for e, f in flow.lam.items() if f > 0}
    mu = dict(flow.mu)
    src = dict(flow.source)
    succ: dict = {t: sorted((v for (u, v) in lam if u == t), key=idx.get) for t in flow.nodes}
    paths, xi = [], []
    for start in order:
        while src[start] > 0:
            path = [start]
            bottleneck = src[start]
            u = start
            while True:
                nxt = next((v for v in succ[u] if lam.get((u, v), ZERO) > 0), None)
                if nxt is None:
                    if mu.get(u, ZERO) <= 0:
                        raise FlowStructureError(f"flow is not conserved at {u}")
                    bottleneck = min(bottleneck, mu[u])
                    break
                bottleneck = min(bottleneck, lam[(u, nxt)])
                path.append(nxt)
                u = nxt
            src[start] -= bottleneck
            for e in zip(path, path[1:]):
                lam[e] -= bottleneck
            mu[path[-1]] -= bottleneck
            paths.append(tuple(path))
            xi.append(bottleneck)
    return FlowDecomposition(paths, xi)


def virtual_values(flow: FlowGraph, ts: TypeSpace) -> dict:
    """H_j(v) = v_j - (1/Pr[v]) * sum_{v'} lam(v', v) (v'_j - v_j) for each type."""
    out = {}
    for v in flow.nodes:
        pr = ts.prob[flow.agent][v]
        if pr == 0:
            raise DomainError(f"type {v} has zero probability")
        h = list(v)
        for u, f in flow.in_edges(v):
            for j in range(len(v)):
                h[j] -= f * (u[j] - v[j]) / pr
        out[v] = tuple(h)
    return out


def induced_payments(flow: FlowGraph, dec: FlowDecomposition, pi: dict, ts: TypeSpace) -> dict:
    """Payments reconstructed along the decomposition paths from the interim table ``pi``."""
    known = set(flow.nodes)
    acc = {v: ZERO for v in flow.nodes}
    for path, w in zip(dec.paths, dec.xi):
        if any(t not in known for t in path):
            raise FlowStructureError(f"path {path} leaves the type space")
        head = path[0]
        term = sum((x * y for x, y in zip(head, pi[head])), ZERO)
        for cur, nxt in zip(path, path[1:]):
            term -= sum(((c - d) * y for c, d, y in zip(cur, nxt, pi[nxt])), ZERO)
        acc[head] += w * term
    return {v: acc[v] / ts.prob[flow.agent][v] for v in flow.nodes}


def _positive_max_expectation(dists: Sequence[list]) -> Fraction:
    """E[max(0, max_i X_i)] for independent discrete X_i given as (value, prob) lists."""
    support = sorted({x for d in dists for x, _ in d if x > 0})
    prev = Fraction(1)
    for d in dists:
        prev *= sum((w for x, w in d if x <= 0), ZERO)
    total = ZERO
    for s in support:
        cdf = Fraction(1)
        for d in dists:
            cdf *= sum((w for x, w in d if x <= s), ZERO)
        total += s * (cdf - prev)
        prev = cdf
    return total


def dual_objective(flows: Sequence[FlowGraph], ts: TypeSpace) -> Fraction:
    """sum over profiles v and items j of Pr[v] [max_i H_ij(v_i)]^+.

    Agents are independent, so each item's term is computed from the product
    of per-agent score CDFs instead of enumerating profiles.
    """
    scores = [virtual_values(f, ts) for f in flows]
    total = ZERO
    for j in range(ts.m):
        dists = [[(scores[i][t][j], ts.prob[i][t]) for t in ts.types[i]] for i in range(ts.n)]
        total += _positive_max_expectation(dists)
    return total


def dual_objective_enumerate(flows: Sequence[FlowGraph], ts: TypeSpace) -> Fraction:
    """Profile-by-profile version of :func:`dual_objective`."""
    scores = [virtual_values(f, ts) for f in flows]
    total = ZERO
    for prof in ts.profiles():
        w = Fraction(1)
        for i, t in enumerate(prof):
            w *= ts.prob[i][t]
        for j in range(ts.m):
            best = max(scores[i][t][j] for i, t in enumerate(prof))
            if best > 0:
                total += w * best
    return total


def certify(flows: Sequence[FlowGraph], mech: InterimMechanism, ts: TypeSpace) -> OptimalityCertificate:
    feasible, bad = True, None
    for f in flows:
        ok, node = check_flow_feasible(f, ts)
        if not ok:
            feasible, bad = False, (f.agent, node)
            break
    bic = verify.check_bic(mech, ts)
    bir = verify.check_bir(mech, ts)
    dual = dual_objective(flows, ts)
    rev = mech.revenue()
    witnesses = [w for w in (bic, bir) if w is not None]
    optimal = feasible and bic is None and bir is None and dual == rev
    return OptimalityCertificate(
        flow_feasible=feasible,
        bic_ok=bic is None,
        bir_ok=bir is None,
        dual_objective=dual,
        mechanism_revenue=rev,
        optimal=optimal,
        witnesses=witnesses,
        infeasible_node=bad,
    )
