"""B-spline bases of order k over filtration levels.

Knots and breakpoints are exact rationals (so measure logic stays exact);
coefficients and quadrature are binary64. Smoothness is fixed at C^{k-2}
by simple interior knots with k-fold boundary knots; multiple interior
knots are rejected at construction.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import (
    ConditioningError,
    DomainError,
    NestingError,
    PreconditionError,
)
from .intervals import Interval, frac

__all__ = [
    "KnotVector",
    "ScalarSpline",
    "eval_basis",
    "moment",
    "gram",
    "GramOperator",
    "refine_coeffs",
    "PiecewiseConstant",
    "composition_det",
    "moment_matrix",
    "interpolate",
]


@lru_cache(maxsize=64)
def _gauss(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    return x, w


class KnotVector:
    """Order-k spline space over a breakpoint sequence of [0, 1]."""

    def __init__(self, order: int, breakpoints: Sequence):
        if order < 1:
            raise ValueError("order must be >= 1")
        bps = [frac(b) for b in breakpoints]
        if bps[0] != 0 or bps[-1] != 1:
            raise ValueError("breakpoints must start at 0 and end at 1")
        for a, b in zip(bps, bps[1:]):
            if not a < b:
                raise ValueError("interior knots must be strictly increasing")
        self.k = order
        self.breakpoints: tuple[Fraction, ...] = tuple(bps)
        full = [bps[0]] * order + bps[1:-1] + [bps[-1]] * order
        self.knots: tuple[Fraction, ...] = tuple(full)
        self._knots_f = np.array([float(t) for t in full])

    @classmethod
    def from_filtration(cls, filt, level: int, order: int) -> "KnotVector":
        return cls(order, filt.breakpoints(level))

    @property
    def num_atoms(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def dim(self) -> int:
        return self.num_atoms + self.k - 1

    def atoms(self) -> list[Interval]:
        return [Interval(a, b) for a, b in zip(self.breakpoints, self.breakpoints[1:])]

    def support(self, i: int) -> Interval:
        if not 0 <= i < self.dim:
            raise IndexError(i)
        return Interval(self.knots[i], self.knots[i + self.k])

    def span_index(self, t: float) -> int:
        """Index m with knots[m] <= t < knots[m+1], clamped at the right end."""
        kn = self._knots_f
        m = int(np.searchsorted(kn, t, side="right")) - 1
        return min(max(m, self.k - 1), self.dim - 1)

    def __eq__(self, other):
        return (
            isinstance(other, KnotVector)
            and self.k == other.k
            and self.breakpoints == other.breakpoints
        )

    def __hash__(self):
        return hash((self.k, self.breakpoints))

    def __repr__(self):
        return f"KnotVector(k={self.k}, atoms={self.num_atoms})"


def eval_basis(kv: KnotVector, t: float) -> list[tuple[int, float]]:
    """Nonzero B-spline values at t: at most k pairs (index, value >= 0)
    summing to one."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"evaluation point {t} outside [0, 1]")
    k = kv.k
    kn = kv._knots_f
    m = kv.span_index(t)
    vals = np.zeros(k)
    vals[0] = 1.0
    for d in range(1, k):
        saved = 0.0
        for r in range(d):
            i = m - d + 1 + r
            denom = kn[i + d] - kn[i]
            term = vals[r] / denom if denom > 0 else 0.0
            vals[r] = saved + term * (kn[i + d] - t)
            saved = term * (t - kn[i])
        vals[d] = saved
    out = []
    for r in range(k):
        i = m - k + 1 + r
        if 0 <= i < kv.dim:
            out.append((i, float(vals[r])))
    return out


class ScalarSpline:
    """A spline as a coefficient sequence over a knot vector."""

    def __init__(self, kv: KnotVector, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (kv.dim,):
            raise ValueError(f"need {kv.dim} coefficients, got {coeffs.shape}")
        self.kv = kv
        self.coeffs = coeffs

    @property
    def level_dim(self) -> int:
        return self.kv.dim

    def eval(self, t: float) -> float:
        return sum(self.coeffs[i] * v for i, v in eval_basis(self.kv, t))

    def eval_many(self, ts) -> np.ndarray:
        return np.array([self.eval(t) for t in ts])

    @classmethod
    def constant(cls, kv: KnotVector, value: float = 1.0) -> "ScalarSpline":
        return cls(kv, np.full(kv.dim, value))


def moment(kv: KnotVector, i: int, j: int, cap: int | None = None) -> float:
    """∫ t**j N_i(t) dt by per-span Gauss-Legendre of exact degree."""
    cap = kv.k + 4 if cap is None else cap
    if j > cap:
        raise ValueError(f"moment order {j} above cap {cap}")
    sup = kv.support(i)
    nodes = (kv.k + j + 1) // 2 + 1
    x, w = _gauss(nodes)
    total = 0.0
    for a, b in zip(kv.breakpoints, kv.breakpoints[1:]):
        lo, hi = max(a, sup.lo), min(b, sup.hi)
        if lo >= hi:
            continue
        lof, hif = float(lo), float(hi)
        mid, half = 0.5 * (lof + hif), 0.5 * (hif - lof)
        ts = mid + half * x
        for t, wt in zip(ts, w):
            val = 0.0
            for idx, v in eval_basis(kv, t):
                if idx == i:
                    val = v
                    break
            total += half * wt * (t**j) * val
    return total


class GramOperator:
    """Banded SPD Gram matrix with a cached Cholesky factorization.

    Solves run banded Cholesky plus one step of iterative refinement; the
    refined residual is monitored and failure above 1e-8 aborts.
    """

    def __init__(self, kv: KnotVector):
        self.kv = kv
        k, dim = kv.k, kv.dim
        self.bandwidth = k - 1
        ab = np.zeros((k, dim))  # lower form: ab[r, j] = G[j + r, j]
        nodes = k  # exact for degree 2k-2
        x, w = _gauss(nodes)
        for a, b in zip(kv.breakpoints, kv.breakpoints[1:]):
            af, bf = float(a), float(b)
            mid, half = 0.5 * (af + bf), 0.5 * (bf - af)
            for t, wt in zip(mid + half * x, w):
                active = eval_basis(kv, t)
                for (i1, v1) in active:
                    for (i2, v2) in active:
                        if 0 <= i2 - i1 <= self.bandwidth:
                            ab[i2 - i1, i1] += half * wt * v1 * v2
        self.ab_lower = ab
        self._chol = cholesky_banded(ab, lower=True)

    @property
    def dim(self) -> int:
        return self.kv.dim

    def dense(self) -> np.ndarray:
        dim = self.dim
        g = np.zeros((dim, dim))
        for r in range(self.bandwidth + 1):
            for j in range(dim - r):
                g[j + r, j] = self.ab_lower[r, j]
                g[j, j + r] = self.ab_lower[r, j]
        return g

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.ab_lower[0] * v
        for r in range(1, self.bandwidth + 1):
            out[r:] += self.ab_lower[r, :-r] * v[:-r]
            out[:-r] += self.ab_lower[r, :-r] * v[r:]
        return out

    def solve(self, rhs: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        x = cho_solve_banded((self._chol, True), rhs)
        r = rhs - self.matvec(x)
        x = x + cho_solve_banded((self._chol, True), r)
        r2 = rhs - self.matvec(x)
        scale = np.linalg.norm(rhs) + 1e-300
        if np.linalg.norm(r2) / scale > rtol:
            raise ConditioningError(
                f"Gram solve residual {np.linalg.norm(r2)/scale:.3e} above {rtol}"
            )
        return x


def gram(kv: KnotVector) -> GramOperator:
    return GramOperator(kv)


def refine_coeffs(coarse: ScalarSpline, fine_kv: KnotVector) -> ScalarSpline:
    """Re-express a spline on a nested finer knot vector (Boehm insertion).

    Every output coefficient is a convex combination of input coefficients.
    """
    if fine_kv.k != coarse.kv.k:
        raise NestingError("orders differ")
    if not set(coarse.kv.breakpoints) <= set(fine_kv.breakpoints):
        raise NestingError("coarse breakpoints are not a subset of fine breakpoints")
    k = coarse.kv.k
    knots = list(coarse.kv.knots)
    coeffs = list(map(float, coarse.coeffs))
    missing = sorted(set(fine_kv.breakpoints) - set(coarse.kv.breakpoints))
    for u in missing:
        # span with knots[m] <= u < knots[m+1]
        m = max(i for i in range(len(knots) - 1) if knots[i] <= u < knots[i + 1])
        new = []
        dim = len(coeffs)
        for i in range(dim + 1):
            if i <= m - k + 1:
                new.append(coeffs[i])
            elif i <= m:
                wfr = (u - knots[i]) / (knots[i + k - 1] - knots[i])
                w = float(wfr)
                new.append(w * coeffs[i] + (1.0 - w) * coeffs[i - 1])
            else:
                new.append(coeffs[i - 1])
        knots.insert(m + 1, u)
        coeffs = new
    return ScalarSpline(fine_kv, np.array(coeffs))


class PiecewiseConstant:
    """Piecewise-constant function on a rational partition of [0, 1]."""

    def __init__(self, breaks: Sequence, values: Sequence[float]):
        self.breaks = tuple(frac(b) for b in breaks)
        if self.breaks[0] != 0 or self.breaks[-1] != 1:
            raise ValueError("partition must span [0, 1]")
        if len(values) != len(self.breaks) - 1:
            raise ValueError("need one value per cell")
        self.values = tuple(float(v) for v in values)

    @classmethod
    def indicator(cls, iv: Interval) -> "PiecewiseConstant":
        breaks = sorted({Fraction(0), iv.lo, iv.hi, Fraction(1)})
        vals = [1.0 if (a >= iv.lo and b <= iv.hi) else 0.0 for a, b in zip(breaks, breaks[1:])]
        return cls(breaks, vals)

    def on(self, breaks: Sequence[Fraction]) -> list[float]:
        out = []
        for a, b in zip(breaks, breaks[1:]):
            mid = (a + b) / 2
            idx = max(i for i in range(len(self.breaks) - 1) if self.breaks[i] <= mid)
            out.append(self.values[idx])
        return out


def composition_det(
    fs: Sequence[PiecewiseConstant], gs: Sequence[PiecewiseConstant]
) -> tuple[float, float]:
    """Both sides of the determinant composition identity.

    lhs = det(∫ f_i g_j); rhs integrates det(f_i(t_l)) det(g_j(t_l)) over
    the ordered simplex, which for piecewise constants collapses to a sum
    over strictly increasing cell tuples weighted by cell volumes.
    """
    n = len(fs)
    if len(gs) != n or n == 0:
        raise ValueError("fs and gs must have equal positive length")
    if n > 4:
        raise PreconditionError("composition_det supports size <= 4")
    breaks = sorted(set(itertools.chain(*[f.breaks for f in list(fs) + list(gs)])))
    vols = np.array([float(b - a) for a, b in zip(breaks, breaks[1:])])
    F = np.array([f.on(breaks) for f in fs])  # n x cells
    G = np.array([g.on(breaks) for g in gs])
    lhs = float(np.linalg.det((F * vols) @ G.T))
    rhs = 0.0
    cells = range(len(vols))
    for combo in itertools.combinations(cells, n):
        sub = list(combo)
        detf = float(np.linalg.det(F[:, sub]))
        if detf == 0.0:
            continue
        detg = float(np.linalg.det(G[:, sub]))
        rhs += detf * detg * float(np.prod(vols[sub]))
    return lhs, rhs


def moment_matrix(
    kv: KnotVector, region: Interval, picks: Sequence[int]
) -> tuple[np.ndarray, np.ndarray, float]:
    """Matrix A = (∫_R t^i N_{picks[j]}), its inverse, and ||A^{-1}||_inf.

    The picked basis functions must have supports inside int(region),
    pairwise without interior overlap, ordered left to right.
    """
    k = kv.k
    if len(picks) != k:
        raise PreconditionError(f"need exactly k={k} picked indices")
    sups = [kv.support(p) for p in picks]
    for s in sups:
        if not (region.lo <= s.lo and s.hi <= region.hi):
            raise PreconditionError(f"support {s} escapes {region}")
    for s1, s2 in zip(sups, sups[1:]):
        if s2.lo < s1.hi:
            raise PreconditionError("picked supports overlap or are unordered")
    a = np.array([[moment(kv, p, i) for p in picks] for i in range(k)])
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e12:
        raise ConditioningError(f"moment matrix condition {cond:.3e} above 1e12")
    ainv = np.linalg.inv(a)
    norm_inf = float(np.max(np.sum(np.abs(ainv), axis=1)))
    return a, ainv, norm_inf


def greville(kv: KnotVector) -> list[Fraction]:
    """Greville abscissae; collocation at these points is well posed."""
    k = kv.k
    if k == 1:
        return [(a + b) / 2 for a, b in zip(kv.breakpoints, kv.breakpoints[1:])]
    return [
        sum(kv.knots[i + 1 : i + k], Fraction(0)) / (k - 1) for i in range(kv.dim)
    ]


def interpolate(kv: KnotVector, f) -> ScalarSpline:
    """Spline interpolating f at the Greville points (dense solve)."""
    pts = greville(kv)
    mat = np.zeros((kv.dim, kv.dim))
    for r, t in enumerate(pts):
        for i, v in eval_basis(kv, float(t)):
            mat[r, i] = v
    rhs = np.array([f(float(t)) for t in pts])
    return ScalarSpline(kv, np.linalg.solve(mat, rhs))
