"""Command-line front end: ``optmech <command> [options]``.

Exit codes: 0 success, 1 input error, 2 certification or crosscheck failure,
3 size guard refusal.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import serialize
from .axis1 import axis1_kstar, axis1_mechanism, f_score, payment_by_k, pi_high, pi_low, revenue_formula
from .axis2 import axis2_mechanism
from .axis3 import ClassificationError, RegionPreconditionError, axis3_mechanism, axis3_region, boundary_slacks
from .bundling import bundling_mechanism, discretize_uniform
from .duality import certify
from .model import (
    Axis1Setting,
    Axis2Setting,
    Axis3Setting,
    BundlingSetting,
    SettingError,
    ValuePair,
    setting_from_json,
)
from .numerics import DomainError, fmt_rational, parse_rational
from .verify import GuardError, crosscheck_axes, lp_optimal_revenue, mc_simulate

EXIT_OK, EXIT_INPUT, EXIT_CERT, EXIT_GUARD = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise InputError(message)


def _rat(field: str):
    def conv(text: str) -> Fraction:
        try:
            return parse_rational(text)
        except DomainError as e:
            raise argparse.ArgumentTypeError(str(e)) from None
    return conv


def _rat_list(field: str):
    def conv(text: str) -> list[Fraction]:
        return [_rat(field)(x) for x in text.split(",") if x.strip()]
    return conv


class Report:
    """Tabular rows plus a JSON document for one command's output."""

    def __init__(self, doc: dict, header: Sequence[str] = (), rows: Sequence[Sequence[Any]] = ()):
        self.doc = doc
        self.header = list(header)
        self.rows = [list(r) for r in rows]

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return serialize.dumps(self.doc)
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.header)
            w.writerows(self.rows)
            return buf.getvalue()
        width = len(self.header)
        cells = [self.header] + [([str(c) for c in r] + [""] * width)[:width] for r in self.rows]
        widths = [max(len(r[k]) for r in cells) for k in range(len(self.header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


R = fmt_rational


def _vec(v) -> str:
    return "(" + ",".join(R(x) for x in v) + ")"


def _type_name(t, a, b) -> str:
    return "(" + ",".join("b" if v == b else "a" if v == a else R(v) for v in t) + ")"


def _mechanism_rows(setting, mech, a=None, b=None):
    o = serialize._Orient(setting)
    rows = []
    ts = mech.typespace
    agents = sorted(range(ts.n), key=o.agent_out)
    for i in agents:
        for t in ts.types[i]:
            name = _type_name(o.vec_out(t), a, b) if a is not None else _vec(t)
            rows.append([o.agent_out(i), name, _vec(o.vec_out(mech.pi[i][t])), R(mech.pay[i][t])])
    return ["agent", "type", "pi", "payment"], rows


def _certify_doc(setting, flows, mech) -> tuple[dict, bool]:
    cert = certify(flows, mech, mech.typespace)
    return serialize.certificate_to_json(setting, cert), cert.optimal


def _write_artifacts(args, setting, mech, flows) -> None:
    if getattr(args, "json", None):
        Path(args.json).write_text(serialize.dumps(serialize.mechanism_to_json(setting, mech)))
    if getattr(args, "flow_json", None):
        Path(args.flow_json).write_text(serialize.dumps(serialize.flows_to_json(setting, flows)))


def _finish(args, doc, header, rows, setting, mech, flows) -> tuple[Report, int]:
    code = EXIT_OK
    _write_artifacts(args, setting, mech, flows)
    if getattr(args, "certify", False):
        cdoc, ok = _certify_doc(setting, flows, mech)
        doc["certificate"] = cdoc
        rows = rows + [["certificate", "optimal", str(ok).lower(), R(Fraction(cdoc["dual_objective"]))]]
        code = EXIT_OK if ok else EXIT_CERT
    return Report(doc, header, rows), code


# ---------------------------------------------------------------- commands

def cmd_axis1(args) -> tuple[Report, int]:
    s = Axis1Setting(args.n, args.m, ValuePair(args.a, args.b), args.p)
    kstar = axis1_kstar(s)
    by_k = []
    for k in range(s.m + 1):
        by_k.append({
            "k": k,
            "f": R(f_score(s, k)),
            "pi_low": R(pi_low(s, k, kstar)),
            "payment": R(payment_by_k(s, k, kstar)),
        })
    rev = revenue_formula(s)
    doc = {
        "setting": serialize.setting_to_json(s),
        "kstar": kstar,
        "pi_high": R(pi_high(s)),
        "layers": by_k,
        "revenue": R(rev),
        "approx": {"revenue": float(rev)},
    }
    header = ["k", "f", "pi_high", "pi_low", "payment"]
    rows = [[e["k"], e["f"], R(pi_high(s)), e["pi_low"], e["payment"]] for e in by_k]
    rows.append(["revenue", R(rev), "", "", f"~{float(rev):.6g}"])
    if not (args.certify or args.json or args.flow_json):
        return Report(doc, header, rows), EXIT_OK
    mech = axis1_mechanism(s)
    return _finish(args, doc, header, rows, s, mech.interim, mech.flows)


def cmd_axis2(args) -> tuple[Report, int]:
    if args.n is not None and args.n != len(args.q):
        raise InputError(f"--n {args.n} does not match {len(args.q)} values in --q")
    s = Axis2Setting.build(ValuePair(args.a, args.b), args.q)
    mech = axis2_mechanism(s)
    a, b = s.values.a, s.values.b
    agents = []
    for k in sorted(range(s.n), key=lambda k: s.order[k]):
        part = mech.partitions[k]
        pi = mech.interim.pi[k]
        agents.append({
            "agent": s.order[k],
            "q": R(s.q[k]),
            "case": mech.case[k],
            "partition": {name: sorted(s.order[x] for x in getattr(part, name)) for name in ("S1", "S2", "S3", "S4")},
            "pi_high": R(pi[(b, b)][0]),
            "pi_low_other_high": R(pi[(a, b)][0]),
            "pi_low_both_low": R(pi[(a, a)][0]),
            "payments": {_type_name(t, a, b): R(mech.interim.pay[k][t]) for t in mech.interim.typespace.types[k]},
        })
    doc = {
        "setting": serialize.setting_to_json(s),
        "agents": agents,
        "revenue": R(mech.revenue),
        "approx": {"revenue": float(mech.revenue)},
    }
    header = ["agent", "q", "case", "pi_b", "pi_a|b", "pi_a|a", "p(b,b)", "p(a,b)", "p(a,a)"]
    rows = []
    for e in agents:
        p = e["payments"]
        rows.append([e["agent"], e["q"], e["case"], e["pi_high"], e["pi_low_other_high"], e["pi_low_both_low"],
                     p["(b,b)"], p["(a,b)"], p["(a,a)"]])
    rows.append(["revenue", R(mech.revenue), "", "", "", "", "", "", f"~{float(mech.revenue):.6g}"])
    return _finish(args, doc, header, rows, s, mech.interim, mech.flows)


def _axis3_setting(n, a, b, p, q) -> Axis3Setting:
    return Axis3Setting.build(n, ValuePair(a, b), p, q)


def cmd_axis3(args) -> tuple[Report, int]:
    s = _axis3_setting(args.n, args.a, args.b, args.p, args.q)
    if args.region_only:
        region = axis3_region(s)
        slacks = boundary_slacks(s)
        doc = {
            "setting": serialize.setting_to_json(s),
            "region": region.id,
            "slacks": {k: R(v) for k, v in slacks.items()},
            "approx": {k: float(v) for k, v in slacks.items()},
        }
        rows = [["region", region.id, ""]] + [[k, R(v), f"~{float(v):.6g}"] for k, v in slacks.items()]
        return Report(doc, ["name", "value", "approx"], rows), EXIT_OK
    mech = axis3_mechanism(s)
    reg = mech.region
    a, b = s.values.a, s.values.b
    header, rows = _mechanism_rows(s, mech.interim, a, b)
    doc = {
        "setting": serialize.setting_to_json(s),
        "region": reg.id,
        "variant": reg.variant,
        "x": R(reg.x),
        "coin": None if reg.coin is None else R(reg.coin),
        "items_swapped": s.swapped,
        "mechanism": serialize.mechanism_to_json(s, mech.interim),
        "revenue": R(mech.revenue),
        "approx": {"revenue": float(mech.revenue)},
    }
    rows = [["region", reg.id, f"x={R(reg.x)}", "" if reg.coin is None else f"coin={R(reg.coin)}"]] + rows
    rows.append(["revenue", R(mech.revenue), "", f"~{float(mech.revenue):.6g}"])
    return _finish(args, doc, header, rows, s, mech.interim, mech.flows)


def _load_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON ({e.msg})") from None


def _bundle_setting_from_file(path: str, c: Fraction | None) -> BundlingSetting:
    d = _load_json(path)
    if isinstance(d, dict) and "schema" in d:
        s = setting_from_json(d)
        if not isinstance(s, BundlingSetting):
            raise InputError(f"{path}: not a bundling setting")
        if c is not None:
            s = BundlingSetting(c, s.supports, s.probs, s.delta_mass)
        return s
    serialize._check(d, {"supports", "probs", "delta_mass"}, "supports file", {"supports", "probs"})
    if c is None:
        raise InputError("--c is required with a plain supports file")
    sup = [[parse_rational(v) for v in s] for s in d["supports"]]
    prb = [[parse_rational(v) for v in s] for s in d["probs"]]
    dm = parse_rational(d["delta_mass"]) if "delta_mass" in d else None
    return BundlingSetting.build(c, sup, prb, dm)


def cmd_bundle(args) -> tuple[Report, int]:
    if args.action == "discretize":
        if args.m is None or args.grid is None or args.c is None:
            raise InputError("bundle discretize needs --c, --m and --grid")
        s = discretize_uniform(args.c, args.m, args.grid)
    else:
        if not args.supports:
            raise InputError("bundle needs --supports FILE (or the 'discretize' action)")
        s = _bundle_setting_from_file(args.supports, args.c)
    mech = bundling_mechanism(s)
    doc = {
        "setting": serialize.setting_to_json(s),
        "price": R(mech.price),
        "threshold": R(mech.threshold),
        "threshold_ok": mech.threshold_ok,
        "approx": {"price": float(mech.price), "threshold": float(mech.threshold)},
    }
    rows = [["price", R(mech.price), f"~{float(mech.price):.6g}"],
            ["threshold", R(mech.threshold), f"~{float(mech.threshold):.6g}"],
            ["threshold_ok", str(mech.threshold_ok).lower(), ""]]
    return _finish(args, doc, ["name", "value", "approx"], rows, s, mech.interim, [mech.flow])


def cmd_region(args) -> tuple[Report, int]:
    g = args.grid
    if g < 2:
        raise InputError("--grid must be at least 2")
    header = ["p", "q", "region"] + list(boundary_slacks(_axis3_setting(args.n, args.a, args.b, Fraction(1, 2), Fraction(1, 2))))
    rows, cells = [], []
    for pi in range(1, g):
        for qi in range(1, pi + 1):
            p, q = Fraction(pi, g), Fraction(qi, g)
            s = _axis3_setting(args.n, args.a, args.b, p, q)
            reg = axis3_region(s).id
            sl = boundary_slacks(s)
            rows.append([R(p), R(q), reg] + [R(v) for v in sl.values()])
            cells.append({"p": R(p), "q": R(q), "region": reg})
    doc = {"n": args.n, "a": R(args.a), "b": R(args.b), "grid": g, "cells": cells}
    return Report(doc, header, rows), EXIT_OK


def _build_for_setting(s):
    if isinstance(s, Axis1Setting):
        m = axis1_mechanism(s)
        return m.interim, m.flows
    if isinstance(s, Axis2Setting):
        m = axis2_mechanism(s)
        return m.interim, m.flows
    if isinstance(s, Axis3Setting):
        m = axis3_mechanism(s)
        return m.interim, m.flows
    m = bundling_mechanism(s)
    return m.interim, [m.flow]


def cmd_verify(args) -> tuple[Report, int]:
    setting, mech = serialize.mechanism_from_json(_load_json(args.mechanism))
    fset, flows = serialize.flows_from_json(_load_json(args.flow), mech.typespace)
    if serialize.setting_to_json(fset) != serialize.setting_to_json(setting):
        raise InputError("mechanism and flow files describe different settings")
    cert = certify(flows, mech, mech.typespace)
    doc = serialize.certificate_to_json(setting, cert)
    rows = [[k, doc[k]] for k in ("flow_feasible", "bic_ok", "bir_ok", "dual_objective", "mechanism_revenue", "optimal")]
    rows = [[k, str(v).lower() if isinstance(v, bool) else v] for k, v in rows]
    return Report(doc, ["check", "value"], rows), EXIT_OK if cert.optimal else EXIT_CERT


def cmd_lp_opt(args) -> tuple[Report, int]:
    from .model import enumerate_types

    s = setting_from_json(_load_json(args.setting))
    ts = enumerate_types(s)
    sol = lp_optimal_revenue(ts)
    o = serialize._Orient(s)
    pays = []
    for i in range(ts.n):
        for t in ts.types[i]:
            pays.append([o.agent_out(i), _vec(o.vec_out(t)), R(sol.payments[(i, t)])])
    pays.sort(key=lambda r: r[0])
    doc = {
        "setting": serialize.setting_to_json(s),
        "status": sol.status,
        "objective": R(sol.objective),
        "payments": [{"agent": a, "type": t, "pay": p} for a, t, p in pays],
        "approx": {"objective": float(sol.objective)},
    }
    rows = [["objective", "", R(sol.objective)]] + pays
    return Report(doc, ["agent", "type", "value"], rows), EXIT_OK


def cmd_simulate(args) -> tuple[Report, int]:
    s = setting_from_json(_load_json(args.setting))
    mech, _ = _build_for_setting(s)
    res = mc_simulate(mech, args.trials, args.seed)
    exact = mech.revenue()
    z = (res.revenue_mean - float(exact)) / res.revenue_se if res.revenue_se > 0 else 0.0
    doc = {
        "setting": serialize.setting_to_json(s),
        "trials": args.trials,
        "seed": args.seed,
        "exact_revenue": R(exact),
        "approx": {"revenue_mean": res.revenue_mean, "revenue_se": res.revenue_se, "z": z},
    }
    rows = [["exact_revenue", R(exact)], ["revenue_mean", f"~{res.revenue_mean:.6g}"],
            ["revenue_se", f"~{res.revenue_se:.3g}"], ["z", f"~{z:.3g}"]]
    return Report(doc, ["name", "value"], rows), EXIT_OK


def cmd_crosscheck(args) -> tuple[Report, int]:
    rep = crosscheck_axes(args.a, args.b, args.p, args.n)
    doc = {"ok": rep.ok, "revenues": {k: R(v) for k, v in rep.revenues.items()}, "diffs": rep.diffs}
    rows = [[k, R(v)] for k, v in rep.revenues.items()] + [["ok", str(rep.ok).lower()]]
    rows += [["diff", d] for d in rep.diffs]
    return Report(doc, ["name", "value"], rows), EXIT_OK if rep.ok else EXIT_CERT


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="optmech", description="Closed-form optimal auctions for bi-valued settings, with exact certificates.")
    parser.add_argument("--format", choices=("json", "csv", "table"), default="table")
    parser.add_argument("--output", help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, certify=True):
        p.add_argument("--format", choices=("json", "csv", "table"), default=argparse.SUPPRESS)
        p.add_argument("--output", default=argparse.SUPPRESS)
        if certify:
            p.add_argument("--certify", action="store_true", help="build and check the optimality certificate")
            p.add_argument("--json", metavar="PATH", help="write the mechanism JSON here")
            p.add_argument("--flow-json", metavar="PATH", help="write the dual flow JSON here")

    p = sub.add_parser("axis1", help="n i.i.d. agents, m i.i.d. items")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--a", type=_rat("a"), required=True)
    p.add_argument("--b", type=_rat("b"), required=True)
    p.add_argument("--p", type=_rat("p"), required=True)
    common(p)
    p.set_defaults(func=cmd_axis1)

    p = sub.add_parser("axis2", help="non-identical agents, two i.i.d. items")
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=_rat("a"), required=True)
    p.add_argument("--b", type=_rat("b"), required=True)
    p.add_argument("--q", type=_rat_list("q"), required=True, help="comma-separated, one per agent")
    common(p)
    p.set_defaults(func=cmd_axis2)

    p = sub.add_parser("axis3", help="n i.i.d. agents, two non-identical items")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=_rat("a"), required=True)
    p.add_argument("--b", type=_rat("b"), required=True)
    p.add_argument("--p", type=_rat("p"), required=True)
    p.add_argument("--q", type=_rat("q"), required=True)
    p.add_argument("--region-only", action="store_true", help="print the region and boundary slacks only")
    common(p)
    p.set_defaults(func=cmd_axis3)

    p = sub.add_parser("bundle", help="grand bundling for one agent")
    p.add_argument("action", nargs="?", choices=("discretize",))
    p.add_argument("--c", type=_rat("c"))
    p.add_argument("--supports", metavar="FILE")
    p.add_argument("--m", type=int)
    p.add_argument("--grid", type=int)
    common(p)
    p.set_defaults(func=cmd_bundle)

    p = sub.add_parser("region", help="axis-3 region of every (p, q) on a grid")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--a", type=_rat("a"), required=True)
    p.add_argument("--b", type=_rat("b"), required=True)
    p.add_argument("--grid", type=int, default=10, help="use p, q in {1/G, ..., (G-1)/G}")
    common(p, certify=False)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("verify", help="certify a mechanism against a dual flow")
    p.add_argument("--mechanism", required=True)
    p.add_argument("--flow", required=True)
    common(p, certify=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lp-opt", help="exact LP optimum for a setting file")
    p.add_argument("--setting", required=True)
    common(p, certify=False)
    p.set_defaults(func=cmd_lp_opt)

    p = sub.add_parser("simulate", help="Monte Carlo check of a setting's mechanism")
    p.add_argument("--setting", required=True)
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    common(p, certify=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("crosscheck", help="compare the three axes where they overlap")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=_rat("a"), required=True)
    p.add_argument("--b", type=_rat("b"), required=True)
    p.add_argument("--p", type=_rat("p"), required=True)
    common(p, certify=False)
    p.set_defaults(func=cmd_crosscheck)
    return parser


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "trials", 1) < 1:
            raise InputError("--trials must be at least 1")
        report, code = args.func(args)
    except GuardError as e:
        print(f"optmech: refused: {e}", file=stderr)
        return EXIT_GUARD
    except (InputError, SettingError, DomainError, ValueError, KeyError) as e:
        print(f"optmech: error: {e}", file=stderr)
        return EXIT_INPUT
    except (ClassificationError, RegionPreconditionError) as e:
        print(f"optmech: internal error: {e}", file=stderr)
        return EXIT_CERT
    text = report.render(args.format)
    if args.output:
        Path(args.output).write_text(text)
    else:
        stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
