"""JSON encoding of settings, mechanisms, flows and certificates.

Every rational is written as a canonical "num/den" string.  Loaders reject
unknown fields.  Types are written in the caller's item order: for a swapped
axis-3 setting the two coordinates are exchanged on the way out and back in.
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .duality import FlowGraph, OptimalityCertificate
from .model import (
    Axis2Setting,
    Axis3Setting,
    HierarchyRule,
    InterimMechanism,
    SettingError,
    TypeSpace,
    enumerate_types,
    setting_from_json,
    setting_to_json,
)
from .numerics import DomainError, fmt_rational, parse_rational

MECHANISM_SCHEMA = "optmech/mechanism/v1"
FLOW_SCHEMA = "optmech/flow/v1"
CERT_SCHEMA = "optmech/cert/v1"

R = fmt_rational


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _check(d: Any, allowed: set, where: str, required: set | None = None) -> dict:
    if not isinstance(d, dict):
        raise SettingError(f"{where}: expected an object")
    unknown = set(d) - allowed
    if unknown:
        raise SettingError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = (allowed if required is None else required) - set(d)
    if missing:
        raise SettingError(f"{where}: missing field(s) {sorted(missing)}")
    return d


def _q(text, where: str) -> Fraction:
    try:
        return parse_rational(text)
    except DomainError as e:
        raise SettingError(f"{where}: {e}") from None


class _Orient:
    """Translate between internal (canonical) agent/item order and the caller's."""

    def __init__(self, setting):
        self.swap = isinstance(setting, Axis3Setting) and setting.swapped
        self.order = list(setting.order) if isinstance(setting, Axis2Setting) else None

    def vec_out(self, v):
        return tuple(reversed(v)) if self.swap else tuple(v)

    vec_in = vec_out

    def agent_out(self, i: int) -> int:
        return self.order[i] if self.order is not None else i

    def agent_in(self, i: int) -> int:
        return self.order.index(i) if self.order is not None else i


def mechanism_to_json(setting, mech: InterimMechanism) -> dict:
    o = _Orient(setting)
    ts = mech.typespace
    agents = []
    for i in range(ts.n):
        rows = []
        for t in ts.types[i]:
            row = {
                "type": [R(v) for v in o.vec_out(t)],
                "prob": R(ts.prob[i][t]),
                "pi": [R(v) for v in o.vec_out(mech.pi[i][t])],
                "pay": R(mech.pay[i][t]),
            }
            if mech.hierarchy is not None:
                h = mech.hierarchy
                row["score"] = [R(v) for v in o.vec_out(h.score[i][t])]
                if h.rank is not None:
                    row["rank"] = list(o.vec_out(h.rank[i][t]))
            rows.append(row)
        agents.append({"agent": o.agent_out(i), "types": rows})
    agents.sort(key=lambda a: a["agent"])
    out = {
        "schema": MECHANISM_SCHEMA,
        "setting": setting_to_json(setting),
        "agents": agents,
        "revenue": R(mech.revenue()),
        "approx": {"revenue": float(mech.revenue())},
    }
    if mech.hierarchy is not None:
        h = mech.hierarchy
        m = len(h.coin)
        item_out = (lambda j: m - 1 - j) if o.swap else (lambda j: j)
        out["coin"] = [R(h.coin[item_out(j)]) for j in range(m)]
        out["zero_coin"] = sorted(
            ([item_out(j), r, R(d)] for (j, r), d in h.zero_coin.items()),
            key=lambda e: (e[0], e[1]),
        )
    return out


def mechanism_from_json(d: dict):
    """Returns (setting, InterimMechanism)."""
    _check(d, {"schema", "setting", "agents", "revenue", "approx", "coin", "zero_coin"}, "mechanism",
           {"schema", "setting", "agents"})
    if d["schema"] != MECHANISM_SCHEMA:
        raise SettingError(f"expected schema {MECHANISM_SCHEMA!r}")
    setting = setting_from_json(d["setting"])
    ts = enumerate_types(setting)
    o = _Orient(setting)
    if not isinstance(d["agents"], list) or len(d["agents"]) != ts.n:
        raise SettingError("mechanism: agent list does not match the setting")
    pi = [dict() for _ in range(ts.n)]
    pay = [dict() for _ in range(ts.n)]
    score = [dict() for _ in range(ts.n)]
    rank = [dict() for _ in range(ts.n)]
    has_score = has_rank = False
    for entry in d["agents"]:
        _check(entry, {"agent", "types"}, "mechanism agent")
        i = o.agent_in(entry["agent"])
        for row in entry["types"]:
            _check(row, {"type", "prob", "pi", "pay", "score", "rank"}, "mechanism type row",
                   {"type", "prob", "pi", "pay"})
            t = o.vec_in(tuple(_q(v, "type") for v in row["type"]))
            if t not in ts.prob[i]:
                raise SettingError(f"mechanism: type {row['type']} not in agent {entry['agent']}'s support")
            if _q(row["prob"], "prob") != ts.prob[i][t]:
                raise SettingError(f"mechanism: probability of type {row['type']} disagrees with the setting")
            pi[i][t] = o.vec_in(tuple(_q(v, "pi") for v in row["pi"]))
            pay[i][t] = _q(row["pay"], "pay")
            if "score" in row:
                has_score = True
                score[i][t] = o.vec_in(tuple(_q(v, "score") for v in row["score"]))
            if "rank" in row:
                has_rank = True
                rank[i][t] = o.vec_in(tuple(int(v) for v in row["rank"]))
    for i in range(ts.n):
        if set(pi[i]) != set(ts.types[i]):
            raise SettingError(f"mechanism: agent {o.agent_out(i)} is missing types")
    hier = None
    if has_score:
        m = ts.m
        item_in = (lambda j: m - 1 - j) if o.swap else (lambda j: j)
        coin = [Fraction(1)] * m
        for j, v in enumerate(d.get("coin", ["1/1"] * m)):
            coin[item_in(j)] = _q(v, "coin")
        zero = {(item_in(int(j)), int(r)): _q(v, "zero_coin") for j, r, v in d.get("zero_coin", [])}
        hier = HierarchyRule(score, tuple(coin), rank if has_rank else None, zero)
    return setting, InterimMechanism(ts, pi, pay, hier)


def flows_to_json(setting, flows: list[FlowGraph]) -> dict:
    o = _Orient(setting)
    out = []
    for f in flows:
        out.append({
            "agent": o.agent_out(f.agent),
            "edges": sorted(
                ([[R(v) for v in o.vec_out(u)], [R(v) for v in o.vec_out(w)], R(x)] for (u, w), x in f.lam.items()),
            ),
            "mu": sorted([[R(v) for v in o.vec_out(t)], R(x)] for t, x in f.mu.items() if x != 0),
        })
    out.sort(key=lambda e: e["agent"])
    return {"schema": FLOW_SCHEMA, "setting": setting_to_json(setting), "flows": out}


def flows_from_json(d: dict, ts: TypeSpace | None = None):
    """Returns (setting, flows)."""
    from .duality import flow_from_parts

    _check(d, {"schema", "setting", "flows"}, "flow file")
    if d["schema"] != FLOW_SCHEMA:
        raise SettingError(f"expected schema {FLOW_SCHEMA!r}")
    setting = setting_from_json(d["setting"])
    ts = ts or enumerate_types(setting)
    o = _Orient(setting)
    flows = []
    for entry in d["flows"]:
        _check(entry, {"agent", "edges", "mu"}, "flow")
        vec = lambda xs: o.vec_in(tuple(_q(v, "flow node") for v in xs))  # noqa: E731
        lam = {(vec(u), vec(w)): _q(x, "edge flow") for u, w, x in entry["edges"]}
        mu = {vec(t): _q(x, "sink flow") for t, x in entry["mu"]}
        i = o.agent_in(entry["agent"])
        known = set(ts.types[i])
        for (u, w) in lam:
            if u not in known or w not in known:
                raise SettingError(f"flow: edge {u}->{w} names an unknown type")
        flows.append(flow_from_parts(i, ts, lam, mu))
    flows.sort(key=lambda f: f.agent)
    return setting, flows


def certificate_to_json(setting, cert: OptimalityCertificate) -> dict:
    o = _Orient(setting)

    def wit(w):
        return {
            "agent": o.agent_out(w.agent),
            "true_type": [R(v) for v in o.vec_out(w.true_type)],
            "report": None if w.report is None else [R(v) for v in o.vec_out(w.report)],
            "gain": R(w.gain),
        }

    return {
        "schema": CERT_SCHEMA,
        "flow_feasible": cert.flow_feasible,
        "bic_ok": cert.bic_ok,
        "bir_ok": cert.bir_ok,
        "dual_objective": R(cert.dual_objective),
        "mechanism_revenue": R(cert.mechanism_revenue),
        "optimal": cert.optimal,
        "witnesses": [wit(w) for w in cert.witnesses],
        "approx": {
            "dual_objective": float(cert.dual_objective),
            "mechanism_revenue": float(cert.mechanism_revenue),
        },
    }
