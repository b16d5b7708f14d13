"""Exact-rational primal simplex for ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

Every constraint the mechanism LPs produce has a nonnegative right-hand side,
so the all-slack basis is feasible from the start and no phase-one problem is
needed.  Rows are stored sparsely as ``{column: value}`` dicts of ``gmpy2.mpq``
(falling back to ``Fraction``); the pivoting rule is Bland's, which cannot
cycle.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

try:  # gmpy2 is several times faster than Fraction for pivoting
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction


class UnboundedLP(ArithmeticError):
    pass


@dataclass
class SimplexResult:
    status: str
    objective: Fraction
    x: list[Fraction]
    pivots: int


def _to_fraction(v) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


def solve_leq(
    c: Sequence,
    rows: Sequence[Mapping[int, object]],
    b: Sequence,
    max_pivots: int | None = None,
) -> SimplexResult:
    """Maximise ``c.x`` over ``rows[k].x <= b[k]``, ``x >= 0``.

    ``rows`` are sparse: ``rows[k][j]`` is the coefficient of variable ``j``.
    Slack ``k`` gets column index ``len(c) + k``.
    """
    nvar = len(c)
    m = len(rows)
    zero = _Q(0)
    tab: list[dict[int, object]] = []
    rhs: list = []
    for k, row in enumerate(rows):
        if b[k] < 0:
            raise ValueError("right-hand side must be nonnegative")
        r = {j: _Q(v) for j, v in row.items() if v != 0}
        r[nvar + k] = _Q(1)
        tab.append(r)
        rhs.append(_Q(b[k]))
    # reduced costs stored as  z_j - c_j  (negative => improving)
    obj = {j: -_Q(v) for j, v in enumerate(c) if v != 0}
    obj_val = zero
    basis = [nvar + k for k in range(m)]

    pivots = 0
    while True:
        enter = min((j for j, v in obj.items() if v < 0), default=None)
        if enter is None:
            break
        best = None
        leave = -1
        for k in range(m):
            a = tab[k].get(enter)
            if a is None or a <= 0:
                continue
            ratio = rhs[k] / a
            if best is None or ratio < best or (ratio == best and basis[k] < basis[leave]):
                best, leave = ratio, k
        if leave < 0:
            raise UnboundedLP(f"column {enter} is unbounded")
        prow = tab[leave]
        piv = prow[enter]
        if piv != 1:
            inv = 1 / piv
            for j in prow:
                prow[j] *= inv
            rhs[leave] *= inv
        pr = rhs[leave]
        items = list(prow.items())
        for k in range(m):
            if k == leave:
                continue
            row = tab[k]
            f = row.get(enter)
            if f is None:
                continue
            for j, v in items:
                nv = row.get(j, zero) - f * v
                if nv:
                    row[j] = nv
                else:
                    row.pop(j, None)
            rhs[k] -= f * pr
        f = obj.get(enter)
        for j, v in items:
            nv = obj.get(j, zero) - f * v
            if nv:
                obj[j] = nv
            else:
                obj.pop(j, None)
        obj_val -= f * pr
        basis[leave] = enter
        pivots += 1
        if max_pivots is not None and pivots > max_pivots:
            raise RuntimeError("pivot limit reached")

    x = [Fraction(0)] * nvar
    for k, j in enumerate(basis):
        if j < nvar:
            x[j] = _to_fraction(rhs[k])
    return SimplexResult("optimal", _to_fraction(obj_val), x, pivots)
