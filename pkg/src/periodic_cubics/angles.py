"""Exact arithmetic on the circle R/Z under the tripling map.

Angles are plain :class:`fractions.Fraction` values reduced into ``[0, 1)``.
Nothing here uses floating point, so these functions double as the oracle
for the numerical modules.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Literal, Union

Angle = Fraction
Side = Literal["plus", "minus"]
IntervalKind = Literal["open-open", "closed-open", "open-closed", "closed-closed"]

ONE_THIRD = Fraction(1, 3)


def angle(x: Union[Fraction, int, str, tuple[int, int]]) -> Angle:
    """Coerce to a canonical angle in [0, 1).

    Accepts a Fraction, an int, a ``(num, den)`` pair or a ``"num/den"`` string.
    """
    if isinstance(x, tuple):
        x = Fraction(*x)
    elif isinstance(x, str):
        x = Fraction(x.strip())
    else:
        x = Fraction(x)
    return x - (x.numerator // x.denominator)


def format_angle(t: Angle) -> str:
    t = angle(t)
    return f"{t.numerator}/{t.denominator}"


def triple(t: Angle) -> Angle:
    return angle(3 * Fraction(t))


@dataclass(frozen=True)
class AngleClass:
    preperiod: int
    period: int


def _three_free(n: int) -> tuple[int, int]:
    k = 0
    while n % 3 == 0:
        n //= 3
        k += 1
    return n, k


def _order_of_three(m: int) -> int:
    if m == 1:
        return 1
    r, k = 3 % m, 1
    while r != 1:
        r = (r * 3) % m
        k += 1
    return k


def classify(t: Angle) -> AngleClass:
    """Preperiod and period of ``t`` under tripling.

    The preperiod is the exponent of 3 in the reduced denominator and the
    period is the multiplicative order of 3 modulo the 3-free part.
    """
    t = angle(t)
    m, k = _three_free(t.denominator)
    return AngleClass(preperiod=k, period=_order_of_three(m))


def is_periodic(t: Angle) -> bool:
    return classify(t).preperiod == 0


def alpha_beta(ell: int) -> tuple[Angle, Angle]:
    """The pair (alpha_ell, beta_ell) bounding the itinerary intervals below 1/3."""
    if ell < 2:
        raise ValueError(f"alpha_beta needs ell >= 2, got {ell}")
    q = 3**ell - 1
    return ONE_THIRD - Fraction(1, q), ONE_THIRD - Fraction(1, 3 * q)


def cyclic_member(x: Angle, a: Angle, b: Angle, closure: IntervalKind = "open-open") -> bool:
    """Is ``x`` in the positively oriented arc from ``a`` to ``b``?

    ``a == b`` is read as the full circle minus (or plus) the single point.
    """
    x, a, b = angle(x), angle(a), angle(b)
    left_closed = closure.startswith("closed")
    right_closed = closure.endswith("closed")
    if x == a:
        return left_closed or (a == b and right_closed)
    if x == b:
        return right_closed
    if a == b:
        return True
    return angle(x - a) < angle(b - a)


def in_zero_interval(theta: Angle, t: Angle, side: Side) -> bool:
    """Membership of ``t`` in I_0^side(theta).

    I_0^+ = [theta - 1/3, theta + 1/3[ and I_0^- = ]theta - 1/3, theta + 1/3].
    """
    lo, hi = theta - ONE_THIRD, theta + ONE_THIRD
    kind = "closed-open" if side == "plus" else "open-closed"
    return cyclic_member(t, lo, hi, kind)


@dataclass(frozen=True)
class ThetaPartition:
    theta: Angle
    side: Side

    def symbol(self, t: Angle) -> int:
        return 0 if in_zero_interval(self.theta, t, self.side) else 1

    def intervals(self) -> dict[str, tuple[Angle, Angle, str]]:
        lo, hi = angle(self.theta - ONE_THIRD), angle(self.theta + ONE_THIRD)
        if self.side == "plus":
            return {"I0": (lo, hi, "closed-open"), "I1": (hi, lo, "closed-open")}
        return {"I0": (lo, hi, "open-closed"), "I1": (hi, lo, "open-closed")}


def itinerary(theta: Angle, t: Angle, side: Side, n: int) -> str:
    """First ``n`` symbols of the itinerary of ``t`` for the theta-partition."""
    if n < 1:
        raise ValueError("itinerary length must be positive")
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    theta, t = angle(theta), angle(t)
    # integer numerators over a common denominator; same arithmetic as Fractions
    d = 3 * theta.denominator * t.denominator // gcd(3 * theta.denominator, t.denominator)
    lo = (theta.numerator * (d // theta.denominator) - d // 3) % d
    x = t.numerator * (d // t.denominator)
    third2 = 2 * d // 3
    out = []
    for _ in range(n):
        off = (x - lo) % d
        # I_0 is the arc of length 2/3 starting at theta - 1/3
        if side == "plus":
            zero = off < third2
        else:
            zero = 0 < off <= third2
        out.append("0" if zero else "1")
        x = 3 * x % d
    return "".join(out)


def orbit(t: Angle, n: int) -> list[Angle]:
    out = [angle(t)]
    for _ in range(n - 1):
        out.append(triple(out[-1]))
    return out


def rationals_in(lo: Angle, hi: Angle, max_den: int) -> list[Angle]:
    """All reduced fractions strictly inside the cyclic arc ]lo, hi[ with
    denominator at most ``max_den``."""
    lo, hi = angle(lo), angle(hi)
    width = angle(hi - lo) if lo != hi else Fraction(1)
    out = []
    for q in range(1, max_den + 1):
        k = lo.numerator * q // lo.denominator + 1
        while Fraction(k, q) < lo + width:
            if gcd(k, q) == 1:
                out.append(angle(Fraction(k, q)))
            k += 1
    return out


def negate_arc(lo: Angle, hi: Angle) -> tuple[Angle, Angle]:
    """The arc -]lo, hi[ = ]-hi, -lo[."""
    return angle(-hi), angle(-lo)
