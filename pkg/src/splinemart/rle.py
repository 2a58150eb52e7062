"""Run-length-encoded splines on uniform p-ary grids.

The divergent-sequence construction needs spline spaces at depths far
beyond anything materializable (grid counts like 2**1000). All of its
scalar spline data is piecewise constant in the B-spline coefficient
index, so a spline is stored as a few (start, end, coefficient) runs over
the uniform level-K basis; integrals and raw moments reduce to Faulhaber
power sums, and evaluation touches only the k active indices.

Only interior basis functions (exact translates of the cardinal B-spline)
ever appear; the construction keeps its supports away from 0 and 1.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .cardinal import cardinal_moment, eval_cardinal, power_sum, refinement_mask

Run = tuple[int, int, Fraction]  # inclusive index range [j0, j1] with coefficient c


@dataclass(frozen=True)
class UniformSpace:
    """Level-`level` spline space of order k on the uniform p-ary grid."""

    p: int
    level: int
    k: int

    @property
    def h(self) -> Fraction:
        return Fraction(1, self.p**self.level)

    @property
    def num_atoms(self) -> int:
        return self.p**self.level

    @property
    def dim(self) -> int:
        return self.num_atoms + self.k - 1

    def interior_range(self) -> tuple[int, int]:
        """Indices whose basis function is a cardinal translate."""
        return self.k - 1, self.dim - self.k

    def support(self, j: int) -> tuple[Fraction, Fraction]:
        x = (j - self.k + 1) * self.h
        return x, x + self.k * self.h

    def indices_touching(self, lo: Fraction, hi: Fraction) -> tuple[int, int]:
        """Interior indices j whose support has interior overlap with (lo, hi)."""
        # supp N_j = [(j-k+1)h, (j+1)h]; overlap iff (j+1)h > lo and (j-k+1)h < hi
        jlo = math.floor(lo / self.h)
        if (jlo + 1) * self.h <= lo:
            jlo += 1
        jhi = math.ceil(hi / self.h) + self.k - 2
        if (jhi - self.k + 1) * self.h >= hi:
            jhi -= 1
        return jlo, jhi

    def atom_index(self, t: Fraction) -> int:
        a = int((t / self.h).__floor__())
        return min(max(a, 0), self.num_atoms - 1)

    def refined(self, extra_levels: int = 1) -> "UniformSpace":
        return UniformSpace(self.p, self.level + extra_levels, self.k)


def _normalize(runs: list[Run]) -> tuple[Run, ...]:
    runs = sorted((r for r in runs if r[2] != 0), key=lambda r: r[0])
    out: list[Run] = []
    for j0, j1, c in runs:
        if j0 > j1:
            continue
        if out and out[-1][1] >= j0:
            raise ValueError("overlapping runs")
        if out and out[-1][1] + 1 == j0 and out[-1][2] == c:
            out[-1] = (out[-1][0], j1, c)
        else:
            out.append((j0, j1, c))
    return tuple(out)


class RleSpline:
    """Scalar spline with run-length-encoded B-spline coefficients."""

    __slots__ = ("space", "runs")

    def __init__(self, space: UniformSpace, runs: list[Run] | tuple[Run, ...]):
        self.space = space
        self.runs = _normalize(list(runs))
        lo, hi = space.interior_range()
        if self.runs and (self.runs[0][0] < lo or self.runs[-1][1] > hi):
            raise ValueError("runs leave the interior index range")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, space: UniformSpace) -> "RleSpline":
        return cls(space, [])

    @classmethod
    def from_index_range(cls, space: UniformSpace, j0: int, j1: int, c: Fraction = Fraction(1)) -> "RleSpline":
        return cls(space, [(j0, j1, c)])

    # -- coefficient access --------------------------------------------------

    def coeff(self, j: int) -> Fraction:
        i = bisect.bisect_right([r[0] for r in self.runs], j) - 1
        if i >= 0:
            j0, j1, c = self.runs[i]
            if j0 <= j <= j1:
                return c
        return Fraction(0)

    def coeffs_at_atom(self, a: int) -> tuple[Fraction, ...]:
        """The k coefficients active on atom a (indices a..a+k-1)."""
        return tuple(self.coeff(j) for j in range(a, a + self.space.k))

    def is_one_on_atom(self, a: int) -> bool:
        return all(c == 1 for c in self.coeffs_at_atom(a))

    def index_bounds(self) -> tuple[int, int] | None:
        if not self.runs:
            return None
        return self.runs[0][0], self.runs[-1][1]

    def support_bounds(self) -> tuple[Fraction, Fraction] | None:
        b = self.index_bounds()
        if b is None:
            return None
        return self.space.support(b[0])[0], self.space.support(b[1])[1]

    # -- algebra --------------------------------------------------------------

    def scaled(self, c: Fraction) -> "RleSpline":
        if c == 0:
            return RleSpline.zero(self.space)
        return RleSpline(self.space, [(j0, j1, c * v) for j0, j1, v in self.runs])

    def plus(self, other: "RleSpline") -> "RleSpline":
        assert self.space == other.space
        events: list[int] = []
        for r in self.runs + other.runs:
            events.append(r[0])
            events.append(r[1] + 1)
        if not events:
            return RleSpline.zero(self.space)
        cuts = sorted(set(events))
        out: list[Run] = []
        for a, b in zip(cuts, cuts[1:]):
            v = self.coeff(a) + other.coeff(a)
            if v != 0:
                out.append((a, b - 1, v))
        return RleSpline(self.space, out)

    # -- analysis --------------------------------------------------------------

    def eval(self, t: Fraction) -> Fraction:
        sp = self.space
        if not self.runs:
            return Fraction(0)
        a = sp.atom_index(t)
        total = Fraction(0)
        u0 = t / sp.h + sp.k - 1
        for j in range(a, a + sp.k):
            c = self.coeff(j)
            if c:
                total += c * eval_cardinal(sp.k, u0 - j)
        return total

    def integral(self) -> Fraction:
        h = self.space.h
        return sum((c * h * (j1 - j0 + 1) for j0, j1, c in self.runs), Fraction(0))

    def moment(self, r: int) -> Fraction:
        """∫ t**r f(t) dt, exact."""
        sp = self.space
        h = sp.h
        total = Fraction(0)
        for j0, j1, c in self.runs:
            # x_j = (j-k+1) h is the left end of supp N_j
            for q in range(r + 1):
                mu = cardinal_moment(sp.k, q)
                s = power_sum(j0 - sp.k + 1, j1 - sp.k + 1, r - q)
                total += c * h * comb(r, q) * h**q * mu * h ** (r - q) * s
        return total

    def refine_once(self) -> "RleSpline":
        sp = self.space
        fine = sp.refined(1)
        p, k = sp.p, sp.k
        off = (k - 1) * (p - 1)
        mask = refinement_mask(k, p)
        width = k * (p - 1)

        edge: dict[int, Fraction] = {}
        interior: list[Run] = []
        for j0, j1, c in self.runs:
            img_lo, img_hi = p * j0 - off, p * j1 + width - off
            full_lo, full_hi = p * j0 + width - off, p * j1 - off
            if full_lo > full_hi:
                for jp in range(img_lo, img_hi + 1):
                    v = _partial_mask_sum(mask, p, jp + off, j0, j1)
                    if v:
                        edge[jp] = edge.get(jp, Fraction(0)) + c * v
                continue
            for jp in range(img_lo, full_lo):
                v = _partial_mask_sum(mask, p, jp + off, j0, j1)
                if v:
                    edge[jp] = edge.get(jp, Fraction(0)) + c * v
            for jp in range(full_hi + 1, img_hi + 1):
                v = _partial_mask_sum(mask, p, jp + off, j0, j1)
                if v:
                    edge[jp] = edge.get(jp, Fraction(0)) + c * v
            interior.append((full_lo, full_hi, c))
        # fold edge coefficients and interior runs together
        result = RleSpline(fine, interior) if interior else RleSpline.zero(fine)
        if edge:
            singles = [(j, j, v) for j, v in edge.items()]
            result = result.plus(RleSpline(fine, _merge_singles(singles)))
        return result

    def refine_to(self, level: int) -> "RleSpline":
        cur = self
        while cur.space.level < level:
            cur = cur.refine_once()
        if cur.space.level != level:
            raise ValueError("cannot refine to a coarser level")
        return cur


def _partial_mask_sum(mask, p: int, m: int, j0: int, j1: int) -> Fraction:
    """Σ mask_i over i = m - p*j for j in [j0, j1] with 0 <= i < len(mask)."""
    lo = max(j0, math.ceil(Fraction(m - len(mask) + 1, p)))
    hi = min(j1, math.floor(Fraction(m, p)))
    total = Fraction(0)
    for j in range(lo, hi + 1):
        total += mask[m - p * j]
    return total


def _merge_singles(singles: list[Run]) -> list[Run]:
    singles.sort()
    out: list[Run] = []
    for j0, j1, c in singles:
        if out and out[-1][1] == j0 and out[-1][2] == c:
            out[-1] = (out[-1][0], j1, c)
        else:
            out.append((j0, j1, c))
    return out


class PeriodicSpline:
    """`count` translates of a base RLE spline at spacing `shift`.

    Instances must not overlap (the construction's per-piece bumps are
    interior to disjoint pieces). shift must sit on the base grid.
    """

    __slots__ = ("base", "shift", "count", "index_shift")

    def __init__(self, base: RleSpline, shift: Fraction, count: int):
        if count < 1:
            raise ValueError("count must be positive")
        q = shift / base.space.h
        if q.denominator != 1:
            raise ValueError("shift must be a multiple of the grid step")
        self.base = base
        self.shift = shift
        self.count = count
        self.index_shift = int(q)
        b = base.index_bounds()
        if b is not None and count > 1 and b[1] - b[0] + 1 > self.index_shift:
            raise ValueError("periodic instances would overlap")

    @property
    def space(self) -> UniformSpace:
        return self.base.space

    def instance(self, ell: int) -> RleSpline:
        d = ell * self.index_shift
        return RleSpline(self.space, [(j0 + d, j1 + d, c) for j0, j1, c in self.base.runs])

    def eval(self, t: Fraction) -> Fraction:
        if self.count == 1:
            return self.base.eval(t)
        sb = self.base.support_bounds()
        if sb is None:
            return Fraction(0)
        ell = math.floor((t - sb[0]) / self.shift)
        total = Fraction(0)
        for cand in (ell - 1, ell, ell + 1):
            if 0 <= cand < self.count:
                total += self.base.eval(t - cand * self.shift)
        return total

    def integral(self) -> Fraction:
        return self.count * self.base.integral()

    def moment(self, r: int) -> Fraction:
        base_moments = [self.base.moment(q) for q in range(r + 1)]
        total = Fraction(0)
        for q in range(r + 1):
            s = self.shift**q * power_sum(0, self.count - 1, q)
            total += comb(r, q) * s * base_moments[r - q]
        return total

    def support_bounds(self) -> tuple[Fraction, Fraction] | None:
        b = self.base.support_bounds()
        if b is None:
            return None
        return b[0], b[1] + (self.count - 1) * self.shift

    def refine_to(self, level: int) -> "PeriodicSpline":
        return PeriodicSpline(self.base.refine_to(level), self.shift, self.count)
