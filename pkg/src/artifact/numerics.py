"""Exact rational helpers: parsing, binomial quantities and the tie-sharing sum."""
from __future__ import annotations

import math
import re
from fractions import Fraction

Rational = Fraction

_RAT = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"`` or an integer string.  Decimal literals are rejected."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise DomainError(f"expected a rational string, got {type(text).__name__}")
    m = _RAT.match(text)
    if not m:
        raise DomainError(f"not an exact rational (use p/q): {text!r}")
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise DomainError(f"zero denominator in {text!r}")
    return Fraction(int(m.group(1)), den)


def fmt_rational(x: Fraction) -> str:
    """Canonical ``num/den`` form (integers keep ``/1``)."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def binom(n: int, k: int) -> int:
    if k < 0 or k > n or n < 0:
        return 0
    return math.comb(n, k)


def _check_prob(p: Fraction) -> Fraction:
    p = Fraction(p)
    if p < 0 or p > 1:
        raise DomainError(f"probability out of [0,1]: {p}")
    return p


def binom_pmf(m: int, p: Fraction, k: int) -> Fraction:
    """P[Binomial(m, p) = k]."""
    p = _check_prob(p)
    if m < 0:
        raise DomainError("m must be nonnegative")
    if k < 0 or k > m:
        return Fraction(0)
    return binom(m, k) * p**k * (1 - p) ** (m - k)


def binom_cdf(m: int, p: Fraction, k: int) -> Fraction:
    """P[Binomial(m, p) <= k]."""
    p = _check_prob(p)
    return sum((binom_pmf(m, p, i) for i in range(0, min(k, m) + 1)), Fraction(0))


def binom_cdf_strict(m: int, p: Fraction, k: int) -> Fraction:
    """P[Binomial(m, p) < k]."""
    return binom_cdf(m, p, k - 1)


def partition_sum(n: int, p: Fraction, q: Fraction) -> Fraction:
    """``sum_{i=0}^{n-1} C(n-1, i) p^(n-1-i) q^i / (i+1)``.

    This is the chance of winning a uniform tie-break when each of the other
    ``n-1`` agents independently ties with probability ``q`` and loses with
    probability ``p`` (and ``p + q <= 1``).
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    p, q = Fraction(p), Fraction(q)
    if p < 0 or q < 0:
        raise DomainError("p and q must be nonnegative")
    if q == 0:
        return p ** (n - 1)
    return ((p + q) ** n - p**n) / (n * q)


def partition_sum_direct(n: int, p: Fraction, q: Fraction) -> Fraction:
    """Term-by-term version of :func:`partition_sum` (used as a cross-check)."""
    return sum(
        (Fraction(binom(n - 1, i), i + 1) * Fraction(p) ** (n - 1 - i) * Fraction(q) ** i for i in range(n)),
        Fraction(0),
    )


def tie_share(lose: list[Fraction], tie: list[Fraction]) -> Fraction:
    """Win probability under uniform tie-breaking against independent opponents.

    Opponent ``k`` is strictly below with probability ``lose[k]`` and tied with
    probability ``tie[k]``; any other outcome means we lose outright.
    """
    # dist[t] = P(exactly t opponents tie and the rest are strictly below)
    dist = [Fraction(1)]
    for lo, ti in zip(lose, tie):
        nxt = [Fraction(0)] * (len(dist) + 1)
        for t, w in enumerate(dist):
            if w:
                nxt[t] += w * lo
                nxt[t + 1] += w * ti
        dist = nxt
    return sum((w / (t + 1) for t, w in enumerate(dist)), Fraction(0))
