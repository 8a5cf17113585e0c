"""Exact rational scalars and origin-anchored space-time half-lines.

A bullet shot at time ``birth`` with constant speed ``speed`` occupies the
half-line ``{(t, speed * (t - birth)) : t >= birth}`` of the (time, position)
plane.  Everything here is exact: values are ``gmpy2.mpq`` rationals and no
predicate ever touches a float.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from gmpy2 import mpq

from .errors import EqualSpeeds

Rational = type(mpq(0))
INFINITY = math.inf

RationalLike = Union[int, str, Fraction, float, "mpq"]


def as_rational(x: RationalLike) -> mpq:
    """Convert ``x`` to a canonical rational.

    Strings use the ``"p/q"`` or ``"p"`` form; floats are converted exactly
    (a double is a dyadic rational).
    """
    if isinstance(x, Rational):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return mpq(*x.as_integer_ratio())
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        s = x.strip()
        if not s:
            raise ValueError("empty rational string")
        f = Fraction(s)
        return mpq(f.numerator, f.denominator)
    return mpq(x)


def format_rational(x) -> str:
    """Serialize as ``"p/q"``, or ``"p"`` when the denominator is one."""
    if x == INFINITY:
        return "inf"
    x = as_rational(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class HalfLine:
    speed: mpq
    birth: mpq

    def __post_init__(self):
        object.__setattr__(self, "speed", as_rational(self.speed))
        object.__setattr__(self, "birth", as_rational(self.birth))
        if self.speed < 0:
            raise ValueError(f"negative speed {self.speed}")

    def position(self, time) -> mpq:
        return self.speed * (as_rational(time) - self.birth)


@dataclass(frozen=True)
class SpaceTimePoint:
    time: mpq
    position: mpq


def _meeting_time(a: HalfLine, b: HalfLine) -> mpq:
    if a.speed == b.speed:
        raise EqualSpeeds(f"equal speeds {a.speed}")
    return (a.speed * a.birth - b.speed * b.birth) / (a.speed - b.speed)


def virtual_collision_time(a: HalfLine, b: HalfLine):
    """Time at which the two half-lines meet, or ``INFINITY`` if they never do.

    The supporting lines always meet once (distinct speeds); the meeting only
    counts when both bullets have already been shot by then.
    """
    t = _meeting_time(a, b)
    if t >= a.birth and t >= b.birth:
        return t
    return INFINITY


def collision_point(a: HalfLine, b: HalfLine) -> Optional[SpaceTimePoint]:
    t = virtual_collision_time(a, b)
    if t == INFINITY:
        return None
    return SpaceTimePoint(t, a.speed * (t - a.birth))


def side_of_line(p: SpaceTimePoint, line: HalfLine) -> int:
    """+1 above the full supporting line, -1 below, 0 on it."""
    d = p.position - line.speed * (p.time - line.birth)
    return (d > 0) - (d < 0)


def concurrent(a: HalfLine, b: HalfLine, c: HalfLine) -> bool:
    """True iff the three half-lines share a common point."""
    if c.speed in (a.speed, b.speed):
        raise EqualSpeeds(f"equal speeds {c.speed}")
    p = collision_point(a, b)
    if p is None or p.time < c.birth:
        return False
    return side_of_line(p, c) == 0
