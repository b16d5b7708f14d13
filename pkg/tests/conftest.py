from fractions import Fraction

from hypothesis import strategies as st


def rationals(lo=0, hi=1, max_den=60, open_lo=False, open_hi=False):
    """Rationals in [lo, hi] with bounded denominators."""

    def ok(x):
        return (x > lo if open_lo else x >= lo) and (x < hi if open_hi else x <= hi)

    return st.builds(
        lambda num, den: Fraction(num, den),
        st.integers(0, max_den * max(1, int(hi))),
        st.integers(1, max_den),
    ).map(lambda x: x + Fraction(lo) if lo < 0 else x).filter(ok)


def interior(max_den=40):
    return rationals(0, 1, max_den, open_lo=True, open_hi=True)
