"""Rational subintervals of [0, 1] and finite unions with exact measures."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

RationalLike = Union[int, str, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x: RationalLike) -> Fraction:
    """Coerce ints, 'p/q' strings and Fractions to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # floats are exact binary rationals; accept them verbatim
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational")


@dataclass(frozen=True)
class Interval:
    """Closed rational interval [lo, hi] in [0, 1] with positive length."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", frac(self.lo))
        object.__setattr__(self, "hi", frac(self.hi))
        if not (ZERO <= self.lo < self.hi <= ONE):
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, t: Fraction) -> bool:
        return self.lo <= t <= self.hi

    def interior_contains(self, t: Fraction) -> bool:
        return self.lo < t < self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersect(self, other: "Interval") -> "Interval | None":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo < hi:
            return Interval(lo, hi)
        return None

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


class MeasurableUnion:
    """Finite union of disjoint closed rational intervals.

    Pieces may be degenerate points [c, c]; those carry zero measure. Used
    for declared limit sets V and for the sets C_n, E_n produced by the
    construction driver. Measures are exact rationals.
    """

    __slots__ = ("pieces",)

    def __init__(self, pieces: Iterable[tuple[RationalLike, RationalLike]]):
        norm: list[tuple[Fraction, Fraction]] = []
        for lo, hi in pieces:
            lo, hi = frac(lo), frac(hi)
            if lo > hi:
                raise ValueError(f"piece [{lo}, {hi}] reversed")
            norm.append((lo, hi))
        norm.sort()
        merged: list[tuple[Fraction, Fraction]] = []
        for lo, hi in norm:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        self.pieces: tuple[tuple[Fraction, Fraction], ...] = tuple(merged)

    @classmethod
    def empty(cls) -> "MeasurableUnion":
        return cls([])

    @classmethod
    def from_intervals(cls, intervals: Sequence[Interval]) -> "MeasurableUnion":
        return cls([(iv.lo, iv.hi) for iv in intervals])

    @classmethod
    def full(cls) -> "MeasurableUnion":
        return cls([(ZERO, ONE)])

    @property
    def measure(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.pieces), ZERO)

    def is_empty(self) -> bool:
        return not self.pieces

    def contains(self, t: Fraction) -> bool:
        for lo, hi in self.pieces:
            if lo <= t <= hi:
                return True
        return False

    def intersect_interval(self, iv: Interval) -> "MeasurableUnion":
        out = []
        for lo, hi in self.pieces:
            a, b = max(lo, iv.lo), min(hi, iv.hi)
            if a <= b:
                out.append((a, b))
        return MeasurableUnion(out)

    def intersect(self, other: "MeasurableUnion") -> "MeasurableUnion":
        out = []
        i = j = 0
        p, q = self.pieces, other.pieces
        while i < len(p) and j < len(q):
            a = max(p[i][0], q[j][0])
            b = min(p[i][1], q[j][1])
            if a <= b:
                out.append((a, b))
            if p[i][1] < q[j][1]:
                i += 1
            else:
                j += 1
        return MeasurableUnion(out)

    def union(self, other: "MeasurableUnion") -> "MeasurableUnion":
        return MeasurableUnion(list(self.pieces) + list(other.pieces))

    def measure_in(self, iv: Interval) -> Fraction:
        """Exact Lebesgue measure of (self ∩ iv)."""
        total = ZERO
        for lo, hi in self.pieces:
            a, b = max(lo, iv.lo), min(hi, iv.hi)
            if a < b:
                total += b - a
        return total

    def mass_left_of(self, iv: Interval, t: Fraction) -> Fraction:
        """Measure of self ∩ [iv.lo, t]."""
        return self.measure_in(Interval(iv.lo, t)) if t > iv.lo else ZERO

    def components_in(self, iv: Interval) -> list[tuple[Fraction, Fraction]]:
        return list(self.intersect_interval(iv).pieces)

    def __eq__(self, other):
        return isinstance(other, MeasurableUnion) and self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    def __repr__(self):
        inner = ", ".join(f"[{lo}, {hi}]" for lo, hi in self.pieces)
        return f"MeasurableUnion({inner})"


def measure_in(iv: Interval, v: MeasurableUnion) -> Fraction:
    """|iv ∩ v| as an exact rational."""
    return v.measure_in(iv)
