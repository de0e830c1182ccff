"""Seifert invariants of the pieces M(g, b; q1/p1, ..., qk/pk).

Only orientable bases are representable; the genus is the genus of an
orientable surface.  Slopes are kept reduced with a positive denominator so
that multiset comparisons are exact.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .errors import InvalidSlope


@dataclass(frozen=True, order=True)
class Slope:
    q: int
    p: int

    def __post_init__(self):
        if self.p < 1:
            raise InvalidSlope(f"denominator must be positive, got {self.p}")
        if gcd(abs(self.q), self.p) != 1:
            raise InvalidSlope(f"{self.q}/{self.p} is not reduced")

    @property
    def singular(self) -> bool:
        return self.p >= 2

    def value(self) -> Fraction:
        return Fraction(self.q, self.p)

    def __str__(self):
        return f"{self.q}/{self.p}"

    def to_json(self):
        return [self.q, self.p]


def normalize_slope(q: int, p: int) -> Slope:
    """Reduce q/p and move the sign onto the numerator."""
    if p == 0:
        raise InvalidSlope("slope denominator is zero")
    if p < 0:
        q, p = -q, -p
    d = gcd(abs(q), p)
    return Slope(q // d, p // d)


def slope_key(s: Slope):
    return (s.value(), s.p)


@dataclass(frozen=True)
class SeifertPiece:
    id: str
    genus: int = 0
    boundary_count: int = 0
    slopes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.genus < 0:
            raise ValueError("genus must be non-negative (orientable base only)")
        if self.boundary_count < 0:
            raise ValueError("boundary_count must be non-negative")
        object.__setattr__(self, "slopes", tuple(sorted(self.slopes, key=slope_key)))

    @property
    def m(self) -> int:
        return len(singular_slopes(self))

    def __str__(self):
        inner = ", ".join(str(s) for s in self.slopes)
        return f"M({self.genus},{self.boundary_count}; {inner})"


def singular_slopes(piece: SeifertPiece) -> tuple:
    return tuple(s for s in piece.slopes if s.singular)


def slope_multiset(slopes) -> Counter:
    return Counter(slopes)


def has_forbidden_half_slope(piece: SeifertPiece) -> bool:
    return any(s.p == 2 for s in piece.slopes)


def is_fibering_exceptional(piece: SeifertPiece) -> bool:
    """True when the piece is on the list of spaces without a unique fibering.

    The list: solid tori M(0,1;) and M(0,1;q/p), T^2 x I = M(0,2;),
    M(0,1;1/2,1/2), and closed spaces over S^2 with at most three singular
    fibers.  Everything else is treated as uniquely fibered.
    """
    sing = singular_slopes(piece)
    m = len(sing)
    if piece.genus != 0:
        return False
    b = piece.boundary_count
    if b == 0:
        return m <= 3
    if b == 1:
        if m <= 1:
            return True
        return m == 2 and all(s.p == 2 for s in sing)
    if b == 2:
        return m == 0
    return False


def uniqueness_assumed(piece: SeifertPiece) -> bool:
    """Closed pieces of small genus where uniqueness is assumed, not checked."""
    return piece.boundary_count == 0 and piece.genus <= 1 and not is_fibering_exceptional(piece)
