"""Moment correction: upgrade mean-zero perturbations to k vanishing moments.

The interval splits into a left part L (tiled by pieces, each carrying a
Step-1 construction) and a right sliver R holding k disjoint B-spline
bumps. Solving the k x k moment system exactly in rationals yields bump
coefficients w with ∫ tau^j (g_L + g_R) = 0 for j < k in interval-local
coordinates tau, hence raw-moment vanishing for every translate too.

For constant convex weights all pieces are congruent and one Step-1
pattern serves every piece (closed-form sums over astronomically many
translates); for spline weights the pieces differ and are materialized,
which caps the reachable parameter range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Optional, Sequence

from ..errors import CapacityError, PreconditionError
from ..intervals import Interval, frac
from ..rle import PeriodicSpline, RleSpline
from ..witness import XVec
from .core import (
    CellSpec,
    ConstructionContext,
    F0,
    F1,
    Step1Pattern,
    level_aligning,
    p_power_at_least,
    step1_simple,
    step1_stopping,
)

#: pieces are kept this factor below the eps1 formula bound; it buys the
#: margin that makes the recorded ||w|| <= eps-tilde check provable with
#: witness vectors of sup-norm up to 4
PIECE_MARGIN = 4

MATERIALIZE_PIECE_CAP = 1 << 12


def cube_root_under(eps: Fraction, p: int) -> Fraction:
    """Largest positive x on a p-adic grid with (1 - x)**3 >= 1 - eps.

    The exact root 1 - (1-eps)^(1/3) is irrational; a grid value just
    below it keeps every measure identity checkable in rationals while
    the final (1 - eps) retention bound still holds (with slack).
    """
    eps = frac(eps)
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    target = 1 - eps
    a = 8  # coarse grids keep alignment levels shallow; refined until x > 0
    while True:
        step = Fraction(1, p**a)
        approx = 1.0 - (1.0 - float(eps)) ** (1.0 / 3.0)
        x = Fraction(math.floor(approx / float(step))) * step
        while x > 0 and (1 - x) ** 3 < target:
            x -= step
        while x + step < 1 and (1 - (x + step)) ** 3 >= target:
            x += step
        if x > 0:
            return x
        a += 4


def solve_exact(a: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gauss elimination over Fractions (tiny systems, k <= 4)."""
    n = len(a)
    m = [row[:] + [rhs[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise PreconditionError("moment matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        inv = F1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def invert_exact(a: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(a)
    cols = [solve_exact(a, [F1 if i == j else F0 for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def local_moment(scal, r: int, origin: Fraction) -> Fraction:
    """∫ (t - origin)**r scal(t) dt from raw moments."""
    return sum(
        comb(r, q) * (-origin) ** (r - q) * scal.moment(q) for q in range(r + 1)
    )


@dataclass(frozen=True)
class PeriodicFamily:
    """The inner-pattern cells repeated across congruent pieces."""

    cells: tuple[CellSpec, ...]
    period: Fraction
    count: int

    @property
    def lo(self) -> Fraction:
        return self.cells[0].lo

    @property
    def hi(self) -> Fraction:
        return self.cells[-1].hi + (self.count - 1) * self.period

    def locate(self, t: Fraction) -> tuple[int, CellSpec] | None:
        if not (self.lo <= t < self.hi):
            return None
        idx = min(int((t - self.lo) / self.period), self.count - 1)
        local = t - idx * self.period
        for c in self.cells:
            if c.lo <= local < c.hi:
                return idx, c
        return None


@dataclass
class LemmaTrace:
    eps: Fraction
    eps_tilde2: Fraction
    eps1_outer: Fraction
    ainv_norm: Fraction
    n_outer: int
    interval: Interval
    L_mass: Fraction
    zone_mass: Fraction
    inner_trace: object
    w_bound: Optional[Fraction] = None  # filled when vectors are bound
    z_norms: tuple = ()
    checks: list = field(default_factory=list)

    def run_checks(self):
        iv_mass = self.interval.length  # uniform-full limit set
        out = [
            ("chain_L", self.zone_mass >= (1 - self.eps_tilde2) ** 2 * self.L_mass),
            ("chain_I", self.zone_mass >= (1 - self.eps_tilde2) ** 3 * iv_mass),
            ("chain_eps", self.zone_mass >= (1 - self.eps) * iv_mass),
        ]
        if self.w_bound is not None:
            out.append(("eq:esty", self.w_bound <= self.eps_tilde2))
        self.checks = out
        return out


@dataclass
class LemmaPattern:
    """Full vanishing-moment construction on a representative interval.

    terms: (scalar, slot key) pairs whose slot-weighted sum is g. Slot
    keys name witness vectors: ("d", m) is x_m - xbar, ("dmix",) is
    sum_j beta_j (x_j - xbar), ("s", l) / ("sp", piece, l) are the simple
    construction's xtilde - x_l, and ("w", i) expands through w_data.
    """

    interval: Interval
    K: int
    eps: Fraction
    eps_tilde2: Fraction
    terms: list
    inner: Optional[Step1Pattern]      # congruent case
    inner_list: list                   # materialized case: (shift, pattern)
    piece_period: Fraction
    piece_count: int
    r_terms: list
    w_data: list
    picks: list
    cells: list
    trace: LemmaTrace
    M: int
    alphas: tuple

    def eval_slotwise(self, t: Fraction) -> dict:
        out: dict = {}
        for scal, key in self.terms:
            v = scal.eval(t)
            if v:
                out[key] = out.get(key, F0) + v
        for scal, (_, i) in self.r_terms:
            v = scal.eval(t)
            if v:
                for coef, key in self.w_data[i]:
                    out[key] = out.get(key, F0) + v * coef
        return out

    def moment_slotwise(self, r: int, origin: Optional[Fraction] = None) -> dict:
        origin = self.interval.lo if origin is None else origin
        out: dict = {}
        for scal, key in self.terms:
            out[key] = out.get(key, F0) + local_moment(scal, r, origin)
        for scal, (_, i) in self.r_terms:
            m = local_moment(scal, r, origin)
            for coef, key in self.w_data[i]:
                out[key] = out.get(key, F0) + m * coef
        return out

    def zone_mass(self) -> Fraction:
        total = F0
        for entry in self.cells:
            if isinstance(entry, PeriodicFamily):
                per = sum((c.width for c in entry.cells if c.kind == "zone"), F0)
                total += per * entry.count
            elif entry.kind == "zone":
                total += entry.width
        return total

    def zombie_length(self) -> Fraction:
        total = F0
        for entry in self.cells:
            if isinstance(entry, PeriodicFamily):
                per = sum((c.width for c in entry.cells if not c.is_constant), F0)
                total += per * entry.count
            elif not entry.is_constant:
                total += entry.width
        return total

    def locate(self, t: Fraction):
        """(cell, instance shift) containing t; half-open convention."""
        for entry in self.cells:
            if isinstance(entry, PeriodicFamily):
                hit = entry.locate(t)
                if hit is not None:
                    idx, cell = hit
                    return cell, idx * entry.period
            elif entry.lo <= t < entry.hi:
                return entry, F0
        raise KeyError(f"{t} not covered by pattern cells")

    def bind(self, slot_vectors: dict) -> "BoundLemma":
        return BoundLemma(self, slot_vectors)


class BoundLemma:
    """Pattern with concrete witness vectors: evaluation and exact norms."""

    def __init__(self, pattern: LemmaPattern, slot_vectors: dict):
        self.pattern = pattern
        self.slots = dict(slot_vectors)
        self.w_vectors: list[XVec] = []
        for i in range(len(pattern.w_data)):
            acc = XVec.zero()
            for coef, key in pattern.w_data[i]:
                acc = acc.add(self.slots[key].scale(coef))
            self.w_vectors.append(acc)
        tr = pattern.trace
        tr.w_bound = max((w.sup_norm for w in self.w_vectors), default=F0)
        tr.run_checks()

    def g_eval(self, t: Fraction) -> XVec:
        acc = XVec.zero()
        for key, coef in self.pattern.eval_slotwise(t).items():
            if key[0] == "w":
                continue
            acc = acc.add(self.slots[key].scale(coef))
        # r-terms were already expanded through w_data by eval_slotwise
        return acc

    def g_moment(self, r: int, origin: Optional[Fraction] = None) -> XVec:
        acc = XVec.zero()
        for key, coef in self.pattern.moment_slotwise(r, origin).items():
            acc = acc.add(self.slots[key].scale(coef))
        return acc


def step2_correct(
    ctx: ConstructionContext,
    interval: Interval,
    eps: Fraction,
    base_level: int,
    inner_builder: Callable[[Interval, Fraction], Step1Pattern],
    *,
    congruent: bool = True,
    alphas: Sequence[Fraction] = (),
    max_zombie_length: Optional[Fraction] = None,
) -> LemmaPattern:
    """Assemble the vanishing-moment construction around a Step-1 builder.

    inner_builder(piece, eps_tilde) produces the Step-1 pattern for one
    piece of L. With congruent=True one representative pattern is reused
    for every piece (valid for constant weights over uniform limit sets).
    """
    ctx.require_uniform()
    p, k = ctx.p, ctx.k
    eps = frac(eps)
    a, b = interval.lo, interval.hi
    width = interval.length
    et = cube_root_under(eps, p)

    # right sliver R with |R ∩ V| exactly et |I ∩ V|
    c = b - et * width
    lmass = c - a

    # bump level: room for k disjoint interior supports plus margins; for
    # k >= 2 the bump atoms are non-constant cells, so their total length
    # k*k*h must also fit inside the zombie budget
    KR = max(base_level + 1, level_aligning(p, a, c))
    need_atoms = k * (k + 1) + 3
    while True:
        if KR > ctx.level_cap:
            raise CapacityError("step2 exhausted the level cap placing bumps")
        h = ctx.space(KR).h
        first = math.floor(c / h) + 1  # first atom strictly right of c
        last = math.ceil(b / h) - 2  # last atom strictly left of b
        ok = last - first + 1 >= need_atoms
        if ok and k > 1 and max_zombie_length is not None:
            ok = k * k * h <= max_zombie_length / 2
        if ok:
            break
        KR += 1
    space_r = ctx.space(KR)
    h = space_r.h
    picks = [first + 1 + i * (k + 1) + k - 1 for i in range(k)]

    bumps = [RleSpline.from_index_range(space_r, m, m) for m in picks]
    amat = [[local_moment(bumps[j], i, a) for j in range(k)] for i in range(k)]
    ainv = invert_exact(amat)
    ainv_norm = max(sum(abs(v) for v in row) for row in ainv)

    eps1_outer = et / (k * (1 + et) * ainv_norm * lmass)
    s = max(
        p_power_at_least(p, 2 / et),
        p_power_at_least(p, PIECE_MARGIN * lmass / eps1_outer),
    )
    n_outer = p**s
    d = lmass / n_outer
    piece_count = n_outer - 2

    def piece(ell: int) -> Interval:  # 1-based
        return Interval(a + (ell - 1) * d, a + ell * d)

    terms: list = []
    cells: list = [CellSpec(a, a + d, "keep")]
    inner = None
    inner_list: list = []
    if congruent:
        inner = inner_builder(piece(2), et)
        K = max(inner.K, KR)
        if (d / ctx.space(inner.K).h).denominator != 1:
            raise AssertionError("piece period off the inner grid")
        for scal, key in inner.terms:
            terms.append((PeriodicSpline(scal, d, piece_count), key))
        cells.append(PeriodicFamily(tuple(inner.cells), d, piece_count))
        zone_per_piece = inner.zone_mass()
        zone_left = zone_per_piece * piece_count
        inner_trace = inner.trace
        inner_M = inner.M
    else:
        if piece_count > MATERIALIZE_PIECE_CAP:
            raise CapacityError(
                f"{piece_count} non-congruent pieces exceed the materialization cap"
            )
        K = KR
        zone_left = F0
        for ell in range(2, n_outer):
            pat = inner_builder(piece(ell), et)
            K = max(K, pat.K)
            inner_list.append((piece(ell).lo, pat))
            for scal, key in pat.terms:
                terms.append((scal, ("pp", ell) + key))
            cells.extend(pat.cells)
            zone_left += pat.zone_mass()
        inner_trace = [pat.trace for _, pat in inner_list]
        inner_M = inner_list[0][1].M if inner_list else 0

    cells.append(CellSpec(a + (n_outer - 1) * d, c, "keep"))

    # exact z per slot over all pieces, then w = -A^{-1} z slotwise
    slot_moments: dict = {}
    for scal, key in terms:
        row = slot_moments.setdefault(key, [F0] * k)
        for j in range(k):
            row[j] += local_moment(scal, j, a)
    w_data: list = [[] for _ in range(k)]
    for key, zrow in sorted(slot_moments.items(), key=lambda kv: repr(kv[0])):
        wk = solve_exact(amat, [-zj for zj in zrow])
        for i in range(k):
            if wk[i]:
                w_data[i].append((wk[i], key))
    r_terms = [(bumps[i], ("w", i)) for i in range(k)]

    # moment vanishing must be exact, slot by slot
    for key, zrow in slot_moments.items():
        for j in range(k):
            total = zrow[j]
            for i in range(k):
                coef = next((cf for cf, kk in w_data[i] if kk == key), F0)
                total += amat[j][i] * coef
            if total != 0:
                raise AssertionError("moment correction failed to cancel exactly")

    pos = c
    for i, m in enumerate(picks):
        sup_lo, sup_hi = (m - k + 1) * h, (m + 1) * h
        if sup_lo > pos:
            cells.append(CellSpec(pos, sup_lo, "keep"))
        if k == 1:
            cells.append(CellSpec(sup_lo, sup_hi, "rconst", i))
        else:
            for r in range(k):
                cells.append(
                    CellSpec(sup_lo + r * h, sup_lo + (r + 1) * h, "rbump", i, (r,))
                )
        pos = sup_hi
    if pos < b:
        cells.append(CellSpec(pos, b, "keep"))
    _check_pattern_tiling(cells, interval)

    trace = LemmaTrace(
        eps=eps,
        eps_tilde2=et,
        eps1_outer=eps1_outer,
        ainv_norm=ainv_norm,
        n_outer=n_outer,
        interval=interval,
        L_mass=lmass,
        zone_mass=F0,
        inner_trace=inner_trace,
    )
    pattern = LemmaPattern(
        interval=interval,
        K=K,
        eps=eps,
        eps_tilde2=et,
        terms=terms,
        inner=inner,
        inner_list=inner_list,
        piece_period=d,
        piece_count=piece_count,
        r_terms=r_terms,
        w_data=w_data,
        picks=picks,
        cells=cells,
        trace=trace,
        M=inner_M,
        alphas=tuple(alphas),
    )
    trace.zone_mass = pattern.zone_mass()
    failed = [name for name, ok in trace.run_checks() if not ok]
    if failed:
        raise AssertionError(f"lemma construction violated {failed}")
    if max_zombie_length is not None and pattern.zombie_length() > max_zombie_length:
        raise AssertionError("zombie budget exceeded")
    return pattern


def _check_pattern_tiling(cells, interval):
    pos = interval.lo
    for entry in cells:
        if entry.lo != pos or entry.hi <= entry.lo:
            raise AssertionError(f"pattern tiling broken at {entry}")
        pos = entry.hi
    if pos != interval.hi:
        raise AssertionError("pattern cells do not cover the interval")


# ---------------------------------------------------------------------------
# dispatch


def lemma_moments(
    ctx: ConstructionContext,
    interval: Interval,
    eps: Fraction,
    base_level: int,
    *,
    const_alphas: Optional[Sequence[Fraction]] = None,
    spline_alphas: Optional[Sequence[RleSpline]] = None,
    max_zombie_length: Optional[Fraction] = None,
) -> LemmaPattern:
    """The full vanishing-moment lemma for one convex decomposition.

    Constant weights dispatch to the stopping-time construction (Case 1
    of the driver), spline weights to the truncation construction
    (Case 2); either way the moment correction of step2_correct runs on
    top.
    """
    if (const_alphas is None) == (spline_alphas is None):
        raise ValueError("provide exactly one of const_alphas / spline_alphas")
    if const_alphas is not None:
        alphas = tuple(frac(x) for x in const_alphas)

        def builder(pc: Interval, et: Fraction) -> Step1Pattern:
            return step1_stopping(
                ctx,
                pc,
                alphas,
                et,
                base_level,
                align=(interval.lo, pc.length),
                max_zombie_length=(
                    None
                    if max_zombie_length is None
                    else max_zombie_length * pc.length / interval.length / 2
                ),
            )

        return step2_correct(
            ctx,
            interval,
            eps,
            base_level,
            builder,
            congruent=True,
            alphas=alphas,
            max_zombie_length=max_zombie_length,
        )

    lambdas = list(spline_alphas)

    def builder(pc: Interval, et: Fraction) -> Step1Pattern:
        return step1_simple(ctx, pc, lambdas, et, align=(interval.lo, pc.length))

    return step2_correct(
        ctx,
        interval,
        eps,
        base_level,
        builder,
        congruent=False,
        max_zombie_length=max_zombie_length,
    )
