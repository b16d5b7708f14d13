"""Independent checks: BIC/BIR enumeration, ex-post allocation, exact interim
recomputation, Monte Carlo estimates and the exact LP oracle."""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import HierarchyRule, InterimMechanism, Type, TypeSpace
from .simplex import solve_leq

ZERO = Fraction(0)

GUARD_ENV = "OPTMECH_GUARD_OVERRIDE"
INTERIM_TERM_LIMIT = 10**6
LP_SIZE_LIMIT = 5000


class GuardError(RuntimeError):
    """Problem size exceeds a guard limit."""


def guards_lifted() -> bool:
    return os.environ.get(GUARD_ENV, "").strip().lower() in {"1", "true", "yes", "on"}


def _guard(size: int, limit: int, what: str) -> None:
    if size > limit and not guards_lifted():
        raise GuardError(f"{what}: size {size} exceeds limit {limit} (set {GUARD_ENV}=1 to override)")


@dataclass
class DeviationWitness:
    agent: int
    true_type: Type
    report: Type | None  # None means "stay out" (an individual-rationality violation)
    gain: Fraction


def check_bic(mech: InterimMechanism, ts: TypeSpace) -> DeviationWitness | None:
    """First strictly profitable misreport in (agent, true type, report) order, or None."""
    for i in range(ts.n):
        for t in ts.types[i]:
            honest = mech.utility(i, t, t)
            for r in ts.types[i]:
                if r == t:
                    continue
                gain = mech.utility(i, t, r) - honest
                if gain > 0:
                    return DeviationWitness(i, t, r, gain)
    return None


def check_bir(mech: InterimMechanism, ts: TypeSpace) -> DeviationWitness | None:
    for i in range(ts.n):
        for t in ts.types[i]:
            u = mech.utility(i, t, t)
            if u < 0:
                return DeviationWitness(i, t, None, -u)
    return None


# ---------------------------------------------------------------- allocation

def _winners(hier: HierarchyRule, profile: Sequence[Type], j: int) -> tuple[list[int], Fraction]:
    """Tied top agents for item j and the probability the item is handed out at all."""
    keys = [hier.key(i, t, j) for i, t in enumerate(profile)]
    best = max(keys)
    if best[0] < 0:
        return [], ZERO
    top = [i for i, k in enumerate(keys) if k == best]
    return top, (hier.coin_for(j, best) if best[0] == 0 else Fraction(1))


def expost_allocate(hier: HierarchyRule, profile: Sequence[Type], rng) -> list[int | None]:
    """Sample the winner of every item (None when the item stays unsold)."""
    out = []
    for j in range(len(profile[0])):
        top, give = _winners(hier, profile, j)
        if not top or (give < 1 and rng.random() >= give):
            out.append(None)
        else:
            out.append(top[int(rng.integers(len(top)))] if len(top) > 1 else top[0])
    return out


def expost_shares(hier: HierarchyRule, profile: Sequence[Type]) -> list[dict]:
    """Exact winning probability of each agent for each item at a fixed profile."""
    out = []
    for j in range(len(profile[0])):
        top, give = _winners(hier, profile, j)
        out.append({i: give / len(top) for i in top})
    return out


def interim_from_expost(hier: HierarchyRule, ts: TypeSpace) -> list[dict]:
    """Interim allocation by summing ex-post shares over every opponent profile."""
    n = ts.n
    terms = sum(len(ts.types[i]) * ts.num_profiles() // len(ts.types[i]) for i in range(n))
    _guard(terms, INTERIM_TERM_LIMIT, "interim enumeration")
    out = []
    for i in range(n):
        table = {}
        others = [ts.types[k] for k in range(n) if k != i]
        for t in ts.types[i]:
            acc = [ZERO] * ts.m
            for rest in itertools.product(*others):
                prof = list(rest[:i]) + [t] + list(rest[i:])
                w = Fraction(1)
                for k, s in enumerate(prof):
                    if k != i:
                        w *= ts.prob[k][s]
                for j, share in enumerate(expost_shares(hier, prof)):
                    if i in share:
                        acc[j] += w * share[i]
            table[t] = tuple(acc)
        out.append(table)
    return out


# ---------------------------------------------------------------- Monte Carlo

@dataclass
class MCResult:
    trials: int
    seed: int
    revenue_mean: float
    revenue_se: float
    pi_mean: list = field(default_factory=list)  # pi_mean[i][t] -> per-item estimates
    pi_se: list = field(default_factory=list)


def _key_ranks(hier: HierarchyRule, ts: TypeSpace, j: int):
    """Map every (agent, type) key on item j to a dense integer order.

    Returns the per-agent rank tables, the allocation probability attached to
    each dense key when that key wins (0 for negative scores, the zero coin
    at score 0, 1 above), as a float array.
    """
    keys = sorted({hier.key(i, t, j) for i in range(ts.n) for t in ts.types[i]})
    pos = {k: r for r, k in enumerate(keys)}
    ranks = [{t: pos[hier.key(i, t, j)] for t in ts.types[i]} for i in range(ts.n)]
    give = np.array([
        0.0 if k[0] < 0 else float(hier.coin_for(j, k)) if k[0] == 0 else 1.0 for k in keys
    ])
    return ranks, give


def mc_simulate(mech: InterimMechanism, trials: int, seed: int, hier: HierarchyRule | None = None) -> MCResult:
    """Sample truthful profiles, allocate ex post, charge interim payments.

    Floating point is used here only to summarise the samples.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    ts = mech.typespace
    hier = hier or mech.hierarchy
    rng = np.random.default_rng(seed)
    n, m = ts.n, ts.m
    idx = np.empty((trials, n), dtype=np.int64)
    revenue = np.zeros(trials)
    for i in range(n):
        probs = np.array([float(ts.prob[i][t]) for t in ts.types[i]])
        idx[:, i] = rng.choice(len(probs), size=trials, p=probs / probs.sum())
        pays = np.array([float(mech.pay[i][t]) for t in ts.types[i]])
        revenue += pays[idx[:, i]]
    mean = float(revenue.mean())
    se = float(revenue.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    result = MCResult(trials, seed, mean, se)
    if hier is None:
        return result

    won = np.zeros((trials, n, m), dtype=bool)
    for j in range(m):
        ranks, give = _key_ranks(hier, ts, j)
        k = np.empty((trials, n), dtype=np.int64)
        for i in range(n):
            table = np.array([ranks[i][t] for t in ts.types[i]])
            k[:, i] = table[idx[:, i]]
        best = k.max(axis=1)
        tied = k == best[:, None]
        count = tied.sum(axis=1)
        pick = np.floor(rng.random(trials) * count).astype(np.int64)
        order = np.cumsum(tied, axis=1) - 1
        chosen = tied & (order == pick[:, None])
        sold = rng.random(trials) < give[best]
        won[:, :, j] = chosen & sold[:, None]

    for i in range(n):
        means, ses = {}, {}
        for ti, t in enumerate(ts.types[i]):
            mask = idx[:, i] == ti
            cnt = int(mask.sum())
            if cnt == 0:
                means[t] = tuple(float("nan") for _ in range(m))
                ses[t] = tuple(float("nan") for _ in range(m))
                continue
            w = won[mask, i, :].astype(float)
            means[t] = tuple(float(x) for x in w.mean(axis=0))
            ses[t] = tuple(float(x) for x in (w.std(axis=0, ddof=1) / math.sqrt(cnt) if cnt > 1 else np.zeros(m)))
        result.pi_mean.append(means)
        result.pi_se.append(ses)
    return result


# ---------------------------------------------------------------- LP oracle

@dataclass
class LPSolution:
    objective: Fraction
    allocation: dict  # (profile, agent, item) -> value
    payments: dict  # (agent, type) -> value
    status: str
    pivots: int = 0


def lp_size(ts: TypeSpace) -> int:
    return ts.num_profiles() * ts.n * ts.m + sum(len(t) for t in ts.types)


def _build_lp(ts: TypeSpace):
    n, m = ts.n, ts.m
    profiles = list(ts.profiles())
    col = {}
    for v in profiles:
        for i in range(n):
            for j in range(m):
                col[(v, i, j)] = len(col)
    nx = len(col)
    pcol = {}
    for i in range(n):
        for t in ts.types[i]:
            base = nx + 2 * len(pcol)
            pcol[(i, t)] = (base, base + 1)
    nvar = nx + 2 * len(pcol)

    # interim allocation as a linear form over x
    pi = {}
    for v in profiles:
        for i in range(n):
            w = Fraction(1)
            for k, s in enumerate(v):
                if k != i:
                    w *= ts.prob[k][s]
            for j in range(m):
                pi.setdefault((i, v[i], j), {})[col[(v, i, j)]] = w

    def utility(i, true, rep):
        d: dict = {}
        for j in range(m):
            if true[j] == 0:
                continue
            for c, w in pi[(i, rep, j)].items():
                d[c] = d.get(c, ZERO) + true[j] * w
        plus, minus = pcol[(i, rep)]
        d[plus] = d.get(plus, ZERO) - 1
        d[minus] = d.get(minus, ZERO) + 1
        return d

    rows, rhs = [], []
    for i in range(n):
        for t in ts.types[i]:
            own = utility(i, t, t)
            rows.append({c: -x for c, x in own.items()})  # IR: -u(t->t) <= 0
            rhs.append(ZERO)
            for r in ts.types[i]:
                if r == t:
                    continue
                row = dict(utility(i, t, r))
                for c, x in own.items():
                    row[c] = row.get(c, ZERO) - x
                rows.append(row)  # IC: u(t->r) - u(t->t) <= 0
                rhs.append(ZERO)
    for v in profiles:
        for j in range(m):
            rows.append({col[(v, i, j)]: Fraction(1) for i in range(n)})
            rhs.append(Fraction(1))
    c = [ZERO] * nvar
    for (i, t), (plus, minus) in pcol.items():
        c[plus] = ts.prob[i][t]
        c[minus] = -ts.prob[i][t]
    return c, rows, rhs, col, pcol


def lp_optimal_revenue(ts: TypeSpace) -> LPSolution:
    """Revenue-optimal BIC/BIR mechanism by exact simplex on the full ex-post LP."""
    _guard(lp_size(ts), LP_SIZE_LIMIT, "LP oracle")
    c, rows, rhs, col, pcol = _build_lp(ts)
    res = solve_leq(c, rows, rhs)
    alloc = {key: res.x[k] for key, k in col.items()}
    pays = {key: res.x[p] - res.x[q] for key, (p, q) in pcol.items()}
    return LPSolution(res.objective, alloc, pays, res.status, res.pivots)


def lp_solution_violations(ts: TypeSpace, sol: LPSolution) -> list[str]:
    """Exact re-check of every primal constraint; empty list means feasible."""
    bad = []
    for key, x in sol.allocation.items():
        if x < 0:
            bad.append(f"negative allocation at {key}")
    for v in ts.profiles():
        for j in range(ts.m):
            if sum(sol.allocation[(v, i, j)] for i in range(ts.n)) > 1:
                bad.append(f"supply exceeded at {v}, item {j}")
    pi = [{t: [ZERO] * ts.m for t in ts.types[i]} for i in range(ts.n)]
    for v in ts.profiles():
        for i in range(ts.n):
            w = Fraction(1)
            for k, s in enumerate(v):
                if k != i:
                    w *= ts.prob[k][s]
            for j in range(ts.m):
                pi[i][v[i]][j] += w * sol.allocation[(v, i, j)]
    mech = InterimMechanism(
        ts,
        [{t: tuple(r) for t, r in table.items()} for table in pi],
        [{t: sol.payments[(i, t)] for t in ts.types[i]} for i in range(ts.n)],
    )
    if check_bic(mech, ts) is not None:
        bad.append("BIC violated")
    if check_bir(mech, ts) is not None:
        bad.append("BIR violated")
    if mech.revenue() != sol.objective:
        bad.append("objective does not match payments")
    return bad


# ---------------------------------------------------------------- crosscheck

@dataclass
class CrosscheckReport:
    ok: bool
    revenues: dict
    diffs: list


def crosscheck_axes(a, b, p, n: int) -> CrosscheckReport:
    """Axis 1 with two items, axis 2 with every q_i = p, axis 3 with p = q must coincide."""
    from .axis1 import axis1_mechanism
    from .axis2 import axis2_mechanism
    from .axis3 import axis3_mechanism
    from .model import Axis1Setting, Axis2Setting, Axis3Setting, ValuePair

    vals = ValuePair(Fraction(a), Fraction(b))
    p = Fraction(p)
    mechs = {
        "axis1": axis1_mechanism(Axis1Setting(n, 2, vals, p)).interim,
        "axis2": axis2_mechanism(Axis2Setting.build(vals, [p] * n)).interim,
        "axis3": axis3_mechanism(Axis3Setting.build(n, vals, p, p)).interim,
    }
    revenues = {k: m.revenue() for k, m in mechs.items()}
    diffs = []
    ref = mechs["axis1"]
    for name in ("axis2", "axis3"):
        other = mechs[name]
        if revenues[name] != revenues["axis1"]:
            diffs.append(f"revenue axis1={revenues['axis1']} {name}={revenues[name]}")
        for i in range(n):
            for t in ref.typespace.types[i]:
                if ref.pi[i][t] != other.pi[i][t]:
                    diffs.append(f"agent {i} type {t}: pi axis1={ref.pi[i][t]} {name}={other.pi[i][t]}")
                if ref.pay[i][t] != other.pay[i][t]:
                    diffs.append(f"agent {i} type {t}: pay axis1={ref.pay[i][t]} {name}={other.pay[i][t]}")
    return CrosscheckReport(not diffs, revenues, diffs)
