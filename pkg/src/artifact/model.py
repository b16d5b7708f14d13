"""Settings, type spaces and the interim-mechanism representation shared by all axes."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .numerics import DomainError, fmt_rational, parse_rational, tie_share

SETTING_SCHEMA = "optmech/setting/v1"

Type = tuple  # a valuation vector, one Fraction per item


class SettingError(ValueError):
    """Invalid setting parameters."""


def _interior(name: str, p: Fraction) -> Fraction:
    p = Fraction(p)
    if not 0 < p < 1:
        raise SettingError(f"{name} must lie strictly between 0 and 1, got {fmt_rational(p)}")
    return p


@dataclass(frozen=True)
class ValuePair:
    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if not 0 < self.a < self.b:
            raise SettingError(f"need 0 < a < b, got a={fmt_rational(self.a)}, b={fmt_rational(self.b)}")


def _check_n(n: int, name: str = "n") -> int:
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SettingError(f"{name} must be a positive integer, got {n!r}")
    return n


@dataclass(frozen=True)
class Axis1Setting:
    """n i.i.d. agents, m i.i.d. items; each item is worth a w.p. p and b otherwise."""

    n: int
    m: int
    values: ValuePair
    p: Fraction

    def __post_init__(self):
        _check_n(self.n)
        _check_n(self.m, "m")
        object.__setattr__(self, "p", _interior("p", self.p))

    kind = "axis1"


@dataclass(frozen=True)
class Axis2Setting:
    """Non-identical agents with two i.i.d. items; agent i has item value a w.p. q_i.

    ``q`` is kept sorted in descending order; ``order[k]`` is the original
    index of the agent now in sorted slot ``k``.
    """

    values: ValuePair
    q: tuple
    order: tuple

    m = 2
    kind = "axis2"

    @classmethod
    def build(cls, values: ValuePair, q: Sequence) -> "Axis2Setting":
        qs = [_interior(f"q[{i}]", x) for i, x in enumerate(q)]
        if not qs:
            raise SettingError("need at least one agent")
        order = sorted(range(len(qs)), key=lambda i: (-qs[i], i))
        return cls(values, tuple(qs[i] for i in order), tuple(order))

    @property
    def n(self) -> int:
        return len(self.q)

    def original_q(self) -> list[Fraction]:
        out = [Fraction(0)] * self.n
        for k, i in enumerate(self.order):
            out[i] = self.q[k]
        return out


@dataclass(frozen=True)
class Axis3Setting:
    """n i.i.d. agents, two non-identical items (item 1 low w.p. p, item 2 low w.p. q).

    Stored canonically with p >= q; ``swapped`` records whether the caller's
    items were exchanged to get there.
    """

    n: int
    values: ValuePair
    p: Fraction
    q: Fraction
    swapped: bool = False

    m = 2
    kind = "axis3"

    @classmethod
    def build(cls, n: int, values: ValuePair, p, q) -> "Axis3Setting":
        p, q = _interior("p", p), _interior("q", q)
        if q > p:
            return cls(_check_n(n), values, q, p, True)
        return cls(_check_n(n), values, p, q, False)


@dataclass(frozen=True)
class BundlingSetting:
    """One agent, m independent items, item j worth ``c + supports[j][z]`` w.p. ``probs[j][z]``."""

    c: Fraction
    supports: tuple
    probs: tuple
    delta_mass: Fraction

    kind = "bundle"

    def __post_init__(self):
        c = Fraction(self.c)
        if c < 0:
            raise SettingError("c must be nonnegative")
        object.__setattr__(self, "c", c)
        sup = tuple(tuple(Fraction(v) for v in s) for s in self.supports)
        prb = tuple(tuple(Fraction(v) for v in s) for s in self.probs)
        if not sup:
            raise SettingError("need at least one item")
        if len(sup) != len(prb):
            raise SettingError("supports and probs differ in length")
        d = Fraction(self.delta_mass)
        if not 0 < d <= 1:
            raise SettingError("delta_mass must lie in (0, 1]")
        for j, (s, pr) in enumerate(zip(sup, prb)):
            if not s or len(s) != len(pr):
                raise SettingError(f"item {j}: support and probabilities must be nonempty and aligned")
            if any(v <= 0 for v in s) or any(x >= y for x, y in zip(s, s[1:])):
                raise SettingError(f"item {j}: support must be positive and strictly increasing")
            if any(x <= 0 for x in pr) or sum(pr) != 1:
                raise SettingError(f"item {j}: probabilities must be positive and sum to 1")
            if pr[0] < d:
                raise SettingError(f"item {j}: mass on the minimum value is below delta_mass")
        object.__setattr__(self, "supports", sup)
        object.__setattr__(self, "probs", prb)
        object.__setattr__(self, "delta_mass", d)

    @classmethod
    def build(cls, c, supports, probs, delta_mass=None) -> "BundlingSetting":
        if delta_mass is None:
            delta_mass = min(Fraction(pr[0]) for pr in probs)
        return cls(c, supports, probs, delta_mass)

    n = 1

    @property
    def m(self) -> int:
        return len(self.supports)

    @property
    def v_min(self) -> Fraction:
        return min(s[0] for s in self.supports)

    @property
    def v_max(self) -> Fraction:
        return max(s[-1] for s in self.supports)


@dataclass
class TypeSpace:
    """Per-agent ordered type lists with their probabilities.

    ``types[i]`` lists agent i's valuation vectors; ``prob[i][t]`` is Pr[t].
    For bi-valued settings ``high`` holds the high value b so that
    :meth:`high_count` is defined.
    """

    types: list[list[Type]]
    prob: list[dict]
    high: Fraction | None = None

    def __post_init__(self):
        for i, (ts, pr) in enumerate(zip(self.types, self.prob)):
            if any(pr[t] <= 0 for t in ts) or sum(pr[t] for t in ts) != 1:
                raise SettingError(f"agent {i}: type probabilities must be positive and sum to 1")
        self._index = [{t: k for k, t in enumerate(ts)} for ts in self.types]

    @property
    def n(self) -> int:
        return len(self.types)

    @property
    def m(self) -> int:
        return len(self.types[0][0])

    def index(self, i: int, t: Type) -> int:
        return self._index[i][t]

    def high_count(self, t: Type) -> int:
        if self.high is None:
            raise SettingError("high_count is only defined for bi-valued type spaces")
        return sum(1 for v in t if v == self.high)

    def profiles(self) -> Iterable[tuple]:
        return itertools.product(*self.types)

    def num_profiles(self) -> int:
        out = 1
        for ts in self.types:
            out *= len(ts)
        return out


def bivalued_types(m: int, a: Fraction, b: Fraction) -> list[Type]:
    """All m-vectors over {a, b}, lexicographic with b ahead of a in each slot."""
    return [tuple(t) for t in itertools.product((b, a), repeat=m)]


def _bivalued_prob(t: Type, a: Fraction, lows: Sequence[Fraction]) -> Fraction:
    out = Fraction(1)
    for v, pl in zip(t, lows):
        out *= pl if v == a else 1 - pl
    return out


def enumerate_types(setting) -> TypeSpace:
    """Type space of a setting, in the fixed documented order."""
    if isinstance(setting, Axis1Setting):
        a, b = setting.values.a, setting.values.b
        ts = bivalued_types(setting.m, a, b)
        pr = {t: _bivalued_prob(t, a, [setting.p] * setting.m) for t in ts}
        return TypeSpace([list(ts) for _ in range(setting.n)], [dict(pr) for _ in range(setting.n)], b)
    if isinstance(setting, Axis2Setting):
        a, b = setting.values.a, setting.values.b
        ts = bivalued_types(2, a, b)
        return TypeSpace(
            [list(ts) for _ in range(setting.n)],
            [{t: _bivalued_prob(t, a, [qi, qi]) for t in ts} for qi in setting.q],
            b,
        )
    if isinstance(setting, Axis3Setting):
        a, b = setting.values.a, setting.values.b
        ts = bivalued_types(2, a, b)
        pr = {t: _bivalued_prob(t, a, [setting.p, setting.q]) for t in ts}
        return TypeSpace([list(ts) for _ in range(setting.n)], [dict(pr) for _ in range(setting.n)], b)
    if isinstance(setting, BundlingSetting):
        axes = [[(setting.c + v, pr) for v, pr in zip(s, ps)] for s, ps in zip(setting.supports, setting.probs)]
        ts, pr = [], {}
        for combo in itertools.product(*axes):
            t = tuple(v for v, _ in combo)
            w = Fraction(1)
            for _, x in combo:
                w *= x
            ts.append(t)
            pr[t] = w
        return TypeSpace([ts], [pr])
    raise TypeError(f"unknown setting {type(setting).__name__}")


def profile_prob(ts: TypeSpace, profile: Sequence[Type]) -> Fraction:
    if len(profile) != ts.n:
        raise KeyError("profile length does not match the number of agents")
    out = Fraction(1)
    for i, t in enumerate(profile):
        try:
            out *= ts.prob[i][t]
        except KeyError:
            raise KeyError(f"type {t} is not in agent {i}'s support") from None
    return out


@dataclass
class HierarchyRule:
    """Hierarchy allocation: each item goes to a highest-scoring agent.

    ``score[i][t]`` is the m-vector of H values for agent i reporting t.
    ``rank[i][t]`` optionally breaks exact score ties lexicographically
    (higher rank wins) without changing the sign of the score.  When the best
    score on item j is exactly 0 the item is handed out with probability
    ``coin[j]``, unless ``zero_coin`` has an entry ``(j, rank)`` for the
    winning tie class.
    """

    score: list[dict]
    coin: tuple
    rank: list[dict] | None = None
    zero_coin: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coin = tuple(Fraction(d) for d in self.coin)
        self.zero_coin = {k: Fraction(v) for k, v in self.zero_coin.items()}
        if any(not 0 <= d <= 1 for d in (*self.coin, *self.zero_coin.values())):
            raise DomainError("zero-score coin must lie in [0, 1]")

    def key(self, i: int, t: Type, j: int) -> tuple:
        r = self.rank[i][t][j] if self.rank is not None else 0
        return (self.score[i][t][j], r)

    def coin_for(self, j: int, key: tuple) -> Fraction:
        """Allocation probability when the winning key on item j has score 0."""
        return self.zero_coin.get((j, key[1]), self.coin[j])


@dataclass
class InterimMechanism:
    """Interim allocation ``pi[i][t]`` (one entry per item) and payment ``pay[i][t]``."""

    typespace: TypeSpace
    pi: list[dict]
    pay: list[dict]
    hierarchy: HierarchyRule | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for i, table in enumerate(self.pi):
            for t, row in table.items():
                if any(not 0 <= x <= 1 for x in row):
                    raise DomainError(f"agent {i}, type {t}: interim allocation outside [0,1]")

    def utility(self, i: int, true: Type, report: Type) -> Fraction:
        return sum((v * x for v, x in zip(true, self.pi[i][report])), Fraction(0)) - self.pay[i][report]

    def revenue(self) -> Fraction:
        ts = self.typespace
        return sum(
            (ts.prob[i][t] * self.pay[i][t] for i in range(ts.n) for t in ts.types[i]),
            Fraction(0),
        )


def hierarchy_interim(hier: HierarchyRule, ts: TypeSpace) -> list[dict]:
    """Interim allocation of a hierarchy rule for independent agents.

    Each opponent is summarised by the chance its key is strictly below ours
    and the chance it ties; the uniform tie-break is then a one-dimensional
    sum over the number of tied opponents.
    """
    out = []
    for i in range(ts.n):
        table = {}
        for t in ts.types[i]:
            row = []
            for j in range(ts.m):
                mine = hier.key(i, t, j)
                if mine[0] < 0:
                    row.append(Fraction(0))
                    continue
                lose, tie = [], []
                for k in range(ts.n):
                    if k == i:
                        continue
                    lo = ti = Fraction(0)
                    for u in ts.types[k]:
                        other = hier.key(k, u, j)
                        if other < mine:
                            lo += ts.prob[k][u]
                        elif other == mine:
                            ti += ts.prob[k][u]
                    lose.append(lo)
                    tie.append(ti)
                share = tie_share(lose, tie)
                row.append(share * hier.coin_for(j, mine) if mine[0] == 0 else share)
            table[t] = tuple(row)
        out.append(table)
    return out

# ---------------------------------------------------------------- JSON

def _fields(d: dict, allowed: set, required: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise SettingError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise SettingError(f"{where}: missing field(s) {sorted(missing)}")


def _rat(d: dict, key: str) -> Fraction:
    try:
        return parse_rational(d[key])
    except DomainError as e:
        raise SettingError(f"field {key!r}: {e}") from None


def setting_to_json(s) -> dict:
    out: dict[str, Any] = {"schema": SETTING_SCHEMA, "kind": s.kind}
    if isinstance(s, Axis1Setting):
        out.update(n=s.n, m=s.m, a=fmt_rational(s.values.a), b=fmt_rational(s.values.b), p=fmt_rational(s.p))
    elif isinstance(s, Axis2Setting):
        out.update(a=fmt_rational(s.values.a), b=fmt_rational(s.values.b), q=[fmt_rational(x) for x in s.original_q()])
    elif isinstance(s, Axis3Setting):
        p, q = (s.q, s.p) if s.swapped else (s.p, s.q)
        out.update(n=s.n, a=fmt_rational(s.values.a), b=fmt_rational(s.values.b), p=fmt_rational(p), q=fmt_rational(q))
    elif isinstance(s, BundlingSetting):
        out.update(
            c=fmt_rational(s.c),
            supports=[[fmt_rational(v) for v in sup] for sup in s.supports],
            probs=[[fmt_rational(v) for v in pr] for pr in s.probs],
            delta_mass=fmt_rational(s.delta_mass),
        )
    else:
        raise TypeError(type(s).__name__)
    return out


def setting_from_json(d: dict):
    if not isinstance(d, dict):
        raise SettingError("setting must be a JSON object")
    if d.get("schema") != SETTING_SCHEMA:
        raise SettingError(f"expected schema {SETTING_SCHEMA!r}, got {d.get('schema')!r}")
    kind = d.get("kind")
    base = {"schema", "kind"}
    if kind == "axis1":
        keys = base | {"n", "m", "a", "b", "p"}
        _fields(d, keys, keys, "axis1 setting")
        return Axis1Setting(d["n"], d["m"], ValuePair(_rat(d, "a"), _rat(d, "b")), _rat(d, "p"))
    if kind == "axis2":
        keys = base | {"a", "b", "q"}
        _fields(d, keys, keys, "axis2 setting")
        if not isinstance(d["q"], list):
            raise SettingError("field 'q' must be a list")
        return Axis2Setting.build(ValuePair(_rat(d, "a"), _rat(d, "b")), [parse_rational(x) for x in d["q"]])
    if kind == "axis3":
        keys = base | {"n", "a", "b", "p", "q"}
        _fields(d, keys, keys, "axis3 setting")
        return Axis3Setting.build(d["n"], ValuePair(_rat(d, "a"), _rat(d, "b")), _rat(d, "p"), _rat(d, "q"))
    if kind == "bundle":
        keys = base | {"c", "supports", "probs", "delta_mass"}
        _fields(d, keys, keys - {"delta_mass"}, "bundle setting")
        sup = [[parse_rational(v) for v in s] for s in d["supports"]]
        prb = [[parse_rational(v) for v in s] for s in d["probs"]]
        dm = _rat(d, "delta_mass") if "delta_mass" in d else None
        return BundlingSetting.build(_rat(d, "c"), sup, prb, dm)
    raise SettingError(f"unknown setting kind {kind!r}")
