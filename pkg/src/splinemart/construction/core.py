"""Mean-zero spline perturbations: the stopping-time and truncation builds.

Both constructions take a convex decomposition of the current value on an
interval I and produce g with ∫ g = 0 supported inside int I, together
with a tiling of I into cells: zones where the perturbed function is
exactly constant (the mass carriers), and leftover cells that keep valid
convex representations. Everything is exact rational arithmetic over a
uniform p-ary grid; piece counts may be astronomically large, so all
per-piece structure is kept as closed-form arithmetic plus one
representative pattern (all pieces are congruent translates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from ..errors import (
    CapacityError,
    DegenerateInputError,
    InfeasibleStoppingError,
    PreconditionError,
)
from ..intervals import Interval, frac
from ..rle import RleSpline, UniformSpace

F0 = Fraction(0)
F1 = Fraction(1)

# slot keys name the witness-space vectors a scalar term multiplies:
#   ("d", m)    -> x_m - xbar        (stopping construction)
#   ("dmix",)   -> sum_j beta_j (x_j - xbar)
#   ("s", l)    -> xtilde - x_l      (simple construction)
#   ("w", i)    -> i-th moment-correction vector (expanded via w_data)
SlotKey = tuple


class ConstructionContext:
    """Ambient data for the constructions: filtration + spline order.

    The exact lazy machinery relies on translation congruence of uniform
    refinements with full limit set; other generators are rejected with a
    capacity error (a file-defined filtration has finitely many levels and
    genuinely cannot supply the refinement depth the construction needs).
    """

    def __init__(self, filt, order: int, level_cap: int = 1 << 20):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.filt = filt
        self.k = order
        self.level_cap = level_cap

    def require_uniform(self):
        if not self.filt.is_uniform_full():
            raise CapacityError(
                "the construction needs unbounded congruent refinement; "
                f"generator {self.filt.kind!r} cannot supply it"
            )

    @property
    def p(self) -> int:
        return self.filt.uniform_base

    def space(self, level: int) -> UniformSpace:
        if level > self.level_cap:
            raise CapacityError(f"level {level} beyond construction cap {self.level_cap}")
        return UniformSpace(self.p, level, self.k)


# ---------------------------------------------------------------------------
# grid arithmetic helpers


def p_power_at_least(p: int, x: Fraction) -> int:
    """Smallest s >= 0 with p**s >= x."""
    s = 0
    v = F1
    while v < x:
        v *= p
        s += 1
    return s


def level_aligning(p: int, *values: Fraction) -> int:
    """Smallest K so every value is a multiple of p**-K."""
    need = 0
    for v in values:
        d = frac(v).denominator
        s = 0
        while d % p == 0:
            d //= p
            s += 1
        if d != 1:
            raise PreconditionError(f"{v} is not on any {p}-ary grid")
        need = max(need, s)
    return need


def grid_above(x: Fraction, h: Fraction) -> Fraction:
    """Smallest multiple of h strictly greater than x."""
    return (math.floor(x / h) + 1) * h


def grid_below(x: Fraction, h: Fraction) -> Fraction:
    """Largest multiple of h strictly less than x."""
    return (math.ceil(x / h) - 1) * h


def atoms_left_of(q: Fraction, x: Fraction, h: Fraction) -> int:
    """# atoms [ih, (i+1)h] with x < ih and (i+1)h <= q."""
    return max(0, math.floor(q / h) - math.floor(x / h) - 1)


def atoms_right_of(q: Fraction, y: Fraction, h: Fraction) -> int:
    """# atoms [ih, (i+1)h] with ih >= q and (i+1)h < y."""
    return max(0, math.ceil(y / h) - math.ceil(q / h) - 1)


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class CellSpec:
    """One tile of the construction pattern, in representative coordinates.

    kind:
      zone   - perturbed function constant, value = child m (the mass carrier)
      mix    - constant, value = xbar + sum beta_j (x_j - xbar)
      keep   - constant, value = xbar (no perturbation here)
      rconst - indicator correction bump (order 1 only): constant xbar + w_i
      ramp   - B-spline ramp of f_m (single atom; convex rep, not constant)
      rbump  - moment-correction bump atom (convex rep, not constant)
      edge   - boundary piece of the simple construction (convex rep)
    """

    lo: Fraction
    hi: Fraction
    kind: str
    m: int = -1
    data: tuple = ()

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_constant(self) -> bool:
        return self.kind in ("zone", "mix", "keep", "rconst")


def check_tiling(cells: Sequence[CellSpec], iv: Interval):
    pos = iv.lo
    for c in cells:
        if c.lo != pos or c.hi <= c.lo:
            raise AssertionError(f"cell tiling broken at {c}")
        pos = c.hi
    if pos != iv.hi:
        raise AssertionError("cells do not cover the interval")


# ---------------------------------------------------------------------------
# trace records


@dataclass
class StoppingTrace:
    """Everything the stopping-time construction promises, as recorded."""

    eps: Fraction
    eps_tilde: Fraction
    eps1: Fraction
    eps2: Fraction
    eps3: Fraction
    n_pieces: int
    blocks: int
    M: int
    alphas: tuple
    C: Fraction
    union_blocks: Fraction
    union_upto_jM: Fraction
    int_f: tuple
    betas: tuple
    j_indices: tuple
    per_m_block_mass: tuple
    per_m_p_mass: tuple
    zone_mass: Fraction
    vmass: Fraction
    checks: list = field(default_factory=list)

    def run_checks(self):
        out = []

        def chk(name, ok):
            out.append((name, bool(ok)))

        chk("eq:applemma", Fraction(self.n_pieces - 2, self.n_pieces) * self.vmass
            >= (1 - self.eps / 3) * self.vmass)
        chk("eq:cons_est", 72 * self.eps1 * self.M <= self.eps * self.eps_tilde * self.union_blocks)
        for m in range(self.M):
            chk(f"stopping[{m}]", self.int_f[m] > self.C * self.alphas[m])
            chk(f"eq:alpha_upper[{m}]", self.int_f[m] <= self.C * self.alphas[m] + 3 * self.eps1)
            lo_mass, hi_mass = self.per_m_block_mass[m], self.per_m_p_mass[m]
            chk(f"eq:unionintegral[{m}]",
                lo_mass <= self.int_f[m] <= hi_mass
                and hi_mass <= lo_mass + 2 * self.n_pieces * self.eps3)
        chk("eq:B_ell_lower", (1 - self.eps_tilde) * self.union_blocks <= self.union_upto_jM)
        chk("eq:B_ell_upper", self.union_upto_jM <= (1 - self.eps_tilde / 6) * self.union_blocks)
        chk("eq:intfM", self.int_f[self.M] >= self.eps_tilde / 12 * self.union_blocks)
        chk("sum_beta", sum(abs(b) for b in self.betas) < self.eps / 2)
        chk("mass_A1", self.zone_mass >= (1 - self.eps) * self.vmass)
        self.checks = out
        return out


@dataclass
class SimpleTrace:
    eps: Fraction
    n_pieces: int
    int_h: tuple
    betas: tuple
    zone_mass: Fraction
    vmass: Fraction
    checks: list = field(default_factory=list)

    def run_checks(self):
        out = [
            ("beta_range", all(0 <= b <= 1 for b in self.betas)),
            ("beta_sum", sum(self.betas) == 1),
            ("mass_A1", self.zone_mass >= (1 - self.eps) * self.vmass),
        ]
        self.checks = out
        return out


# ---------------------------------------------------------------------------
# Step 1, stopping-time variant (constant convex weights)


@dataclass
class Step1Pattern:
    """Output of a Step-1 construction on a representative interval."""

    interval: Interval
    K: int
    space: UniformSpace
    terms: list  # (RleSpline, SlotKey)
    cells: list  # CellSpec tiles of `interval`
    M: int
    trace: object

    def eval_slotwise(self, t: Fraction) -> dict:
        out: dict = {}
        for scal, key in self.terms:
            v = scal.eval(t)
            if v:
                out[key] = out.get(key, F0) + v
        return out

    def moment_slotwise(self, r: int) -> dict:
        out: dict = {}
        for scal, key in self.terms:
            out[key] = out.get(key, F0) + scal.moment(r)
        return out

    def zone_mass(self) -> Fraction:
        return sum((c.width for c in self.cells if c.kind == "zone"), F0)


def step1_stopping(
    ctx: ConstructionContext,
    interval: Interval,
    alphas: Sequence[Fraction],
    eps: Fraction,
    base_level: int,
    *,
    align: Sequence[Fraction] = (),
    min_level: int = 0,
    max_zombie_length: Optional[Fraction] = None,
) -> Step1Pattern:
    """Stopping-time construction for constant convex weights.

    Builds f_1 .. f_{M+1} in S_K so that g = sum_m f_m ⊗ (x_m - xbar)
    + f_{M+1} ⊗ sum beta_j (x_j - xbar) has exact mean zero, is supported
    inside int I, agrees with a child value on zones carrying at least
    (1 - eps) of |I ∩ V|, and admits convex representations elsewhere.
    """
    ctx.require_uniform()
    p, k = ctx.p, ctx.k
    alphas = tuple(frac(a) for a in alphas)
    M = len(alphas)
    if M < 1 or sum(alphas, F0) != 1 or any(a <= 0 for a in alphas):
        raise PreconditionError("weights must be positive and sum to one")
    eps = frac(eps)
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    a, b = interval.lo, interval.hi
    width = interval.length
    vmass = width  # uniform generators have full limit set

    eps_tilde = eps * vmass / (3 * width)
    eps1 = eps * eps_tilde * (1 - eps / 3) * vmass / (72 * M)
    eps2 = eps / 3
    s = max(p_power_at_least(p, 2 / eps2), p_power_at_least(p, width / eps1))
    n = p**s
    d = width / n
    eps3 = eps1 / (2 * n)

    # level search: k+1 atoms inside the ball on each side of every piece
    # midpoint, grid alignment for all translation offsets, optional zombie
    # (ramp) length budget
    K = max(min_level, base_level + 1, level_aligning(p, a, d, *align))
    ramp_atoms = 2 * (M + 1) * (k - 1)
    while True:
        if K > ctx.level_cap:
            raise CapacityError("step1_stopping exhausted the level cap")
        h = ctx.space(K).h
        p1 = a + d / 2
        lo_edge = max(a, p1 - eps3)
        hi_edge = min(a + d, p1 + eps3)
        ok = (
            atoms_left_of(p1, lo_edge, h) >= k + 1
            and atoms_right_of(p1, hi_edge, h) >= k + 1
            and (d / h).denominator == 1
        )
        if ok and max_zombie_length is not None and k > 1:
            ok = ramp_atoms * h <= max_zombie_length
        if ok:
            break
        K += 1
    space = ctx.space(K)
    h = space.h

    # congruent ball points: u/v offsets relative to each piece start
    p1 = a + d / 2
    u1 = grid_above(max(a, p1 - eps3), h)
    v1 = grid_below(min(a + d, p1 + eps3), h)
    if not (u1 <= v1):
        raise AssertionError("degenerate ball")

    def u_pt(ell: int) -> Fraction:  # pieces are 1-based
        return u1 + (ell - 1) * d

    def v_pt(ell: int) -> Fraction:
        return v1 + (ell - 1) * d

    L = n - 2  # block i <-> piece i+1, i = 1..L

    def block_union(r: int, s_: int) -> tuple[Fraction, Fraction]:
        # union of blocks r..s_ is the single interval (v_r, u_{s_+2})
        return v_pt(r), u_pt(s_ + 2)

    def lam_range(r: int, s_: int) -> tuple[int, int]:
        lo, hi = block_union(r, s_)
        return space.indices_touching(lo, hi)

    def int_range(r: int, s_: int) -> Fraction:
        jlo, jhi = lam_range(r, s_)
        return (jhi - jlo + 1) * h

    union_lo, union_hi = block_union(1, L)
    union_blocks = union_hi - union_lo
    C = (1 - eps_tilde / 3) * union_blocks
    if 72 * eps1 * M > eps * eps_tilde * union_blocks:
        raise AssertionError("eq:cons_est failed; parameter bug")

    # stopping scan
    j_prev = -1
    j_indices: list[int] = []
    f_ranges: list[tuple[int, int]] = []
    int_f: list[Fraction] = []
    per_m_block_mass: list[Fraction] = []
    per_m_p_mass: list[Fraction] = []
    for m in range(M):
        r = j_prev + 2
        if r > L:
            raise InfeasibleStoppingError(f"no blocks left for f_{m + 1}")
        target = C * alphas[m]
        lo_s, hi_s = r, L
        if int_range(r, L) <= target:
            raise InfeasibleStoppingError(
                f"stopping scan exhausted blocks with ∫f_{m + 1} <= C alpha"
            )
        while lo_s < hi_s:
            mid = (lo_s + hi_s) // 2
            if int_range(r, mid) > target:
                hi_s = mid
            else:
                lo_s = mid + 1
        jm = lo_s
        j_indices.append(jm)
        f_ranges.append(lam_range(r, jm))
        int_f.append(int_range(r, jm))
        blo, bhi = block_union(r, jm)
        per_m_block_mass.append(bhi - blo)
        # p-point hull: (p_{l(r)-1}, p_{l(jm)+1}) = (p_r, p_{jm+2})
        per_m_p_mass.append((a + (jm + 2 - 1) * d + d / 2) - (a + (r - 1) * d + d / 2))
        j_prev = jm
    # final function f_{M+1}
    r = j_prev + 2
    if r > L:
        raise InfeasibleStoppingError("no blocks left for the remainder term")
    f_ranges.append(lam_range(r, L))
    int_f.append(int_range(r, L))
    union_upto_jM = block_union(1, j_indices[-1])[1] - union_lo

    betas = tuple((C * alphas[m] - int_f[m]) / int_f[M] for m in range(M))

    # supports must be pairwise disjoint with the paper's gap argument
    for (l1, h1), (l2, h2) in zip(f_ranges, f_ranges[1:]):
        if h1 >= l2:
            raise AssertionError("stopping ranges collided")

    terms: list = []
    for m in range(M):
        terms.append((RleSpline.from_index_range(space, *f_ranges[m]), ("d", m)))
    terms.append((RleSpline.from_index_range(space, *f_ranges[M]), ("dmix",)))

    cells = _stopping_cells(interval, space, f_ranges, M)
    trace = StoppingTrace(
        eps=eps,
        eps_tilde=eps_tilde,
        eps1=eps1,
        eps2=eps2,
        eps3=eps3,
        n_pieces=n,
        blocks=L,
        M=M,
        alphas=alphas,
        C=C,
        union_blocks=union_blocks,
        union_upto_jM=union_upto_jM,
        int_f=tuple(int_f),
        betas=betas,
        j_indices=tuple(j_indices),
        per_m_block_mass=tuple(per_m_block_mass),
        per_m_p_mass=tuple(per_m_p_mass),
        zone_mass=F0,
        vmass=vmass,
    )
    pattern = Step1Pattern(interval, K, space, terms, cells, M, trace)
    trace.zone_mass = pattern.zone_mass()
    failed = [name for name, ok in trace.run_checks() if not ok]
    if failed:
        raise AssertionError(f"stopping construction violated {failed}")
    return pattern


def _stopping_cells(interval, space, f_ranges, M) -> list[CellSpec]:
    """Tile the interval: zones where some f_m is identically one, ramp
    atoms at the range edges, keep cells elsewhere."""
    k, h = space.k, space.h
    cells: list[CellSpec] = []
    pos = interval.lo
    for m, (jlo, jhi) in enumerate(f_ranges):
        if jhi - jlo + 1 < 2 * k - 1:
            raise AssertionError("stopping range too narrow for a zone")
        sup_lo = (jlo - k + 1) * h
        zone_lo, zone_hi = jlo * h, (jhi - k + 2) * h
        sup_hi = (jhi + 1) * h
        kind = "zone" if m < M else "mix"
        if sup_lo > pos:
            cells.append(CellSpec(pos, sup_lo, "keep"))
        for r in range(k - 1):  # left ramp atoms
            cells.append(
                CellSpec(sup_lo + r * h, sup_lo + (r + 1) * h, "ramp", m, ("L", r))
            )
        cells.append(CellSpec(zone_lo, zone_hi, kind, m))
        for r in range(k - 1):  # right ramp atoms
            cells.append(
                CellSpec(zone_hi + r * h, zone_hi + (r + 1) * h, "ramp", m, ("R", r))
            )
        pos = sup_hi
    if pos < interval.hi:
        cells.append(CellSpec(pos, interval.hi, "keep"))
    check_tiling(cells, interval)
    return cells


# ---------------------------------------------------------------------------
# Step 1, simple variant (non-constant convex weights)


def step1_simple(
    ctx: ConstructionContext,
    interval: Interval,
    alphas: Sequence[RleSpline],
    eps: Fraction,
    *,
    min_level: int = 0,
    align: Sequence[Fraction] = (),
) -> Step1Pattern:
    """Truncation construction for spline weights alphas (sum == 1 on I).

    h_l is alpha_l with coefficients masked to basis functions meeting the
    inner pieces; g = sum_l h_l ⊗ (xtilde - x_l) for the mean-matched
    mixture xtilde = sum beta_l x_l, beta_l = ∫h_l / sum_j ∫h_j.
    """
    ctx.require_uniform()
    p, k = ctx.p, ctx.k
    eps = frac(eps)
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    M = len(alphas)
    if M < 1:
        raise PreconditionError("need at least one weight function")
    base_level = alphas[0].space.level
    a, b = interval.lo, interval.hi
    width = interval.length
    vmass = width

    s = p_power_at_least(p, 4 / eps)
    n = p**s
    d = width / n

    K = max(min_level, base_level + 1, level_aligning(p, a, d, *align))
    while True:
        if K > ctx.level_cap:
            raise CapacityError("step1_simple exhausted the level cap")
        h = ctx.space(K).h
        # pieces 1, 2, n-1, n each contain at least k+1 atoms
        if (d / h).denominator == 1 and d / h >= k + 1:
            break
        K += 1
    space = ctx.space(K)
    h = space.h

    inner_lo, inner_hi = a + d, b - d
    jlo, jhi = space.indices_touching(inner_lo, inner_hi)
    fine = [al.refine_to(K) for al in alphas]
    hs = []
    for al in fine:
        clipped = [
            (max(r0, jlo), min(r1, jhi), c)
            for r0, r1, c in al.runs
            if not (r1 < jlo or r0 > jhi)
        ]
        hs.append(RleSpline(space, clipped))
    int_h = [hl.integral() for hl in hs]
    total = sum(int_h, F0)
    if total == 0:
        raise DegenerateInputError("all truncated weights vanish")
    betas = tuple(ih / total for ih in int_h)

    # g = sum_l h_l ⊗ (xtilde - x_l)
    terms = [(hs[ell], ("s", ell)) for ell in range(M)]

    # zone: the inner region where every h_l == alpha_l and partitions sum
    # to one; the perturbed function is constant xtilde there
    sup_lo = min((hl.support_bounds() or (inner_lo, inner_hi))[0] for hl in hs)
    sup_hi = max((hl.support_bounds() or (inner_lo, inner_hi))[1] for hl in hs)
    if not (a < sup_lo and sup_hi < b):
        raise AssertionError("truncated support escaped the interior")
    cells = [
        CellSpec(a, sup_lo, "edge", data=("L",)),
        CellSpec(sup_lo, inner_lo, "edge", data=("L",)),
        CellSpec(inner_lo, inner_hi, "zone", 0, ("simple",)),
        CellSpec(inner_hi, sup_hi, "edge", data=("R",)),
        CellSpec(sup_hi, b, "edge", data=("R",)),
    ]
    cells = [c for c in cells if c.hi > c.lo]
    check_tiling(cells, interval)
    trace = SimpleTrace(
        eps=eps,
        n_pieces=n,
        int_h=tuple(int_h),
        betas=betas,
        zone_mass=inner_hi - inner_lo,
        vmass=vmass,
    )
    pattern = Step1Pattern(interval, K, space, terms, cells, M, trace)
    failed = [name for name, ok in trace.run_checks() if not ok]
    if failed:
        raise AssertionError(f"simple construction violated {failed}")
    return pattern
