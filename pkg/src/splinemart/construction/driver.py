"""Inductive driver: the bounded, everywhere-separated martingale spline
sequence.

Starting from f_0 = bush root on [0, 1], each step applies the
vanishing-moment perturbation on every positive-mass atom whose current
value is constant, replacing it by a child value on zones that carry all
but an eps_n fraction of the atom's mass. Atoms whose value is not
constant (B-spline ramps and correction bumps, a set whose total measure
is kept below an explicit budget) are carried along unchanged.

Atoms are never enumerated: congruent atoms share one pattern per
decomposition profile, and all counts and measures are products of exact
per-pattern data with class censuses.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..errors import ConstructionPreconditionError, PreconditionError
from ..intervals import Interval, frac
from ..witness import BushRep, XVec, bush_decompose, mix_reps
from .core import CellSpec, ConstructionContext, F0, F1
from .lemma import LemmaPattern, PeriodicFamily, lemma_moments

DELTA = F1  # bush separation


@dataclass
class ClassRow:
    """All atoms of one congruence class at one step."""

    cid: int
    step: int                      # atoms of F_{m_step}
    kind: str                      # 'const' | 'zombie'
    cell_kind: str                 # cell kind that created the class
    rep_value: Optional[BushRep]   # representative value (const classes)
    parent: Optional[int]
    total_length: Fraction
    in_c: bool                     # class is part of C_step
    in_e: bool                     # part of C_step ∩ C_{step-1}
    norm_bound: Fraction = F0
    chain_sup: Fraction = F0       # max value norm along the class history
    zombie_info: tuple = ()


@dataclass
class StepData:
    n: int
    m_level: int
    eps: Fraction
    patterns: dict                 # decomposition profile -> LemmaPattern
    c_mass: Fraction
    e_mass: Fraction
    const_mass: Fraction
    zombie_mass: Fraction
    rows_after: list = None        # class census of f_{n+1}


class SequenceResult:
    """The constructed k-martingale spline sequence with audit access."""

    def __init__(self, filt, order, eta, steps, m_levels, rows):
        self.filt = filt
        self.k = order
        self.eta = frac(eta)
        self.delta = DELTA
        self.steps: list[StepData] = steps
        self.m_levels: list[int] = m_levels
        self.final_rows: list[ClassRow] = rows
        self._value_override = None  # test hook for fault injection

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    # -- measures -------------------------------------------------------------

    def c_measure(self, n: int) -> Fraction:
        """|C_n ∩ V| (|V| = 1 for uniform generators)."""
        if n == 0:
            return F1
        return self.steps[n - 1].c_mass

    def e_measure(self, n: int) -> Fraction:
        """|E_n| = |C_n ∩ C_{n-1} ∩ V| for n >= 1."""
        if n < 1:
            raise ValueError("E_n is defined for n >= 1")
        return self.steps[n - 1].e_mass

    # -- evaluation -------------------------------------------------------------

    def value_at(self, t, n: int) -> XVec:
        """f_n(t) as an exact witness vector (half-open atom convention)."""
        t = frac(t)
        if not 0 <= n <= self.num_steps:
            raise ValueError("n out of range")
        acc = XVec.zero()  # f_0 is the bush root = 0
        binding: Optional[BushRep] = BushRep.point("")
        for j in range(n):
            if binding is None:
                break  # zombie region: later perturbations vanish here
            sd = self.steps[j]
            pattern, parts = self._pattern_for(sd, binding)
            h = Fraction(1, self.filt.uniform_base ** sd.m_level)
            atom_lo = math.floor(t / h) * h
            tau = t - atom_lo + pattern.interval.lo
            slot_vecs = self._slot_vectors(binding, parts, pattern)
            for key, coef in pattern.eval_slotwise(tau).items():
                acc = acc.add(slot_vecs[key].scale(coef))
            cell, _shift = pattern.locate(tau)
            binding = self._descend(binding, parts, pattern, cell)
        if self._value_override is not None:
            acc = self._value_override(t, n, acc)
        return acc

    def sup_diff_at(self, t, n: int) -> Fraction:
        """||f_n(t) - f_{n-1}(t)|| in the sup norm, exact."""
        return self.value_at(t, n).sub(self.value_at(t, n - 1)).sup_norm

    def _pattern_for(self, sd: StepData, binding: BushRep):
        parts = bush_decompose(binding, DELTA, target_count=2)
        profile = tuple(w for w, _ in parts)
        return sd.patterns[profile], parts

    @staticmethod
    def _slot_vectors(binding: BushRep, parts, pattern: LemmaPattern) -> dict:
        base = binding.value()
        diffs = [rep.value().sub(base) for _, rep in parts]
        vecs = {("d", m): dv for m, dv in enumerate(diffs)}
        betas = pattern.inner.trace.betas if pattern.inner is not None else ()
        mix = XVec.zero()
        for b, dv in zip(betas, diffs):
            mix = mix.add(dv.scale(b))
        vecs[("dmix",)] = mix
        return vecs

    def _descend(self, binding, parts, pattern, cell: CellSpec):
        if cell.kind == "zone":
            return parts[cell.m][1]
        if cell.kind == "keep":
            return binding
        if cell.kind == "mix":
            return _mix_value(parts, pattern.inner.trace.betas)
        if cell.kind == "rconst":
            slot_vecs = self._slot_vectors(binding, parts, pattern)
            w = XVec.zero()
            for coef, key in pattern.w_data[cell.m]:
                w = w.add(slot_vecs[key].scale(coef))
            return binding.with_pert(w)
        return None  # ramp / rbump / edge: the class goes non-constant

    # -- sampling ---------------------------------------------------------------

    def sample_e_points(self, n: int, rng, count: int = 8) -> list[Fraction]:
        """Random interior points of E_n = C_n ∩ C_{n-1} ∩ V (n >= 1)."""
        if not 1 <= n <= self.num_steps:
            raise ValueError("need 1 <= n <= steps")
        return [self._descend_random(rng, n) for _ in range(count)]

    def _descend_random(self, rng, n: int) -> Fraction:
        lo, hi = self._descend_random_cell(rng, n)
        return lo + (hi - lo) * Fraction(2 * rng.randint(1, 511) + 1, 1 << 10)

    def _descend_random_cell(self, rng, n: int) -> tuple[Fraction, Fraction]:
        lo, hi = F0, F1
        binding = BushRep.point("")
        for j in range(n):
            sd = self.steps[j]
            h = Fraction(1, self.filt.uniform_base ** sd.m_level)
            first = math.ceil(lo / h)
            last = math.floor(hi / h) - 1
            atom_lo = rng.randint(first, last) * h
            pattern, parts = self._pattern_for(sd, binding)
            force_zone = j >= n - 2
            cell, shift = self._random_cell(rng, pattern, force_zone)
            base = atom_lo - pattern.interval.lo
            lo, hi = base + shift + cell.lo, base + shift + cell.hi
            binding = self._descend(binding, parts, pattern, cell)
            if binding is None:
                raise AssertionError("sampler entered a non-constant cell")
        return lo, hi

    def sample_e_intervals(self, n: int, rng, count: int = 4):
        """A few representative subintervals of E_n (zone-cell instances)."""
        return [self._descend_random_cell(rng, n) for _ in range(count)]

    @staticmethod
    def _random_cell(rng, pattern: LemmaPattern, force_zone: bool):
        entries = []
        for entry in pattern.cells:
            if isinstance(entry, PeriodicFamily):
                for c in entry.cells:
                    if c.kind == "zone" or (not force_zone and c.is_constant):
                        entries.append((c, entry))
            elif entry.kind == "zone" or (not force_zone and entry.is_constant):
                entries.append((entry, None))
        cell, fam = rng.choice(entries)
        if fam is None:
            return cell, F0
        return cell, rng.randrange(fam.count) * fam.period

    # -- trace access -------------------------------------------------------------

    def all_patterns(self):
        for sd in self.steps:
            for pat in sd.patterns.values():
                yield sd.n, pat

    def stopping_traces(self):
        for n, pat in self.all_patterns():
            tr = pat.trace.inner_trace
            if hasattr(tr, "j_indices"):
                yield n, tr

    def to_json(self, trace: str = "summary", seed: int = 0) -> dict:
        rng = random.Random(seed)
        out = {
            "k": self.k,
            "eta": str(self.eta),
            "delta": str(self.delta),
            "levels": self.m_levels,
            "E": [
                {
                    "measure": str(self.e_measure(n)),
                    "intervals_sample": [
                        [str(a), str(b)]
                        for a, b in self.sample_e_intervals(n, rng, 3)
                    ],
                }
                for n in range(1, self.num_steps + 1)
            ],
            "C": [str(self.c_measure(n)) for n in range(self.num_steps + 1)],
            # coefficient arrays at the working levels are not materializable
            # (dimensions ~ p**level); emit per-step term summaries instead
            "splines": [
                {
                    "level": self.m_levels[n + 1],
                    "patterns": len(sd.patterns),
                    "constant_mass": str(sd.const_mass),
                }
                for n, sd in enumerate(self.steps)
            ],
        }
        if trace in ("summary", "full"):
            rows = []
            for n, pat in self.all_patterns():
                tr = pat.trace
                entry = {
                    "step": n,
                    "eps": str(tr.eps),
                    "eps_tilde": str(tr.eps_tilde2),
                    "n_outer": tr.n_outer,
                    "K": pat.K,
                    "zone_mass_rel": str(tr.zone_mass / pat.interval.length),
                    "w_bound": None if tr.w_bound is None else str(tr.w_bound),
                    "failed": [name for name, ok in tr.checks if not ok],
                }
                if trace == "full":
                    entry["ainv_norm"] = str(tr.ainv_norm)
                    entry["eps1_outer"] = str(tr.eps1_outer)
                    it = tr.inner_trace
                    if hasattr(it, "betas"):
                        entry["inner"] = {
                            "betas": [str(b) for b in it.betas],
                            "j_indices": list(getattr(it, "j_indices", ())),
                            "n_pieces": getattr(it, "n_pieces", None),
                        }
                rows.append(entry)
            out["trace_summary"] = rows
        return out


def build_sequence(
    filt,
    order: int,
    eta,
    steps: int,
    *,
    depth_cap: int = 12,
    level_cap: int = 1 << 20,
) -> SequenceResult:
    """Construct the divergent k-martingale spline sequence.

    Requires |V| > 0: over a filtration whose endpoints accumulate only on
    a null set every bounded martingale spline sequence converges, so the
    construction refuses to start (the characterization dichotomy).
    """
    eta = frac(eta)
    if not 0 < eta < 1:
        raise PreconditionError("eta must lie in (0, 1)")
    if not 1 <= steps <= depth_cap:
        raise PreconditionError(f"steps must lie in 1..{depth_cap}")
    if filt.limit_set.measure == 0:
        raise ConstructionPreconditionError(
            "the limit set V has measure zero; no divergent bounded sequence exists"
        )
    ctx = ConstructionContext(filt, order, level_cap=level_cap)
    ctx.require_uniform()
    p = ctx.p

    rows = [
        ClassRow(
            cid=0,
            step=0,
            kind="const",
            cell_kind="zone",
            rep_value=BushRep.point(""),
            parent=None,
            total_length=F1,
            in_c=True,
            in_e=True,
        )
    ]
    m_levels = [0]
    step_data: list[StepData] = []
    next_cid = 1

    for n in range(steps):
        m_n = m_levels[-1]
        eps_n = eta * Fraction(1, 2 ** (n + 4))  # half of the paper's eta_n budget
        zombie_budget = eta * Fraction(1, 2 ** (n + steps + 5))
        h_n = Fraction(1, p**m_n)
        rep_interval = Interval(0, 1) if m_n == 0 else Interval(h_n, 2 * h_n)

        patterns: dict = {}
        child_rows: dict = {}
        new_m = m_n + 1
        for row in rows:
            if row.kind != "const":
                continue
            parts = bush_decompose(row.rep_value, DELTA, target_count=2)
            profile = tuple(w for w, _ in parts)
            if profile not in patterns:
                pat = lemma_moments(
                    ctx,
                    rep_interval,
                    eps_n,
                    m_n,
                    const_alphas=profile,
                    max_zombie_length=zombie_budget * rep_interval.length,
                )
                _bind_representative(pat, row.rep_value, parts)
                patterns[profile] = pat
            pat = patterns[profile]
            new_m = max(new_m, pat.K)
            atom_count = row.total_length / h_n
            if atom_count.denominator != 1:
                raise AssertionError("class length not atom-aligned")
            _spawn_children(row, pat, parts, int(atom_count), child_rows, n)

        new_rows = []
        for new in child_rows.values():
            new.cid = next_cid
            next_cid += 1
            new_rows.append(new)
        for row in rows:
            if row.kind == "zombie":
                new_rows.append(
                    ClassRow(
                        cid=next_cid,
                        step=n + 1,
                        kind="zombie",
                        cell_kind=row.cell_kind,
                        rep_value=None,
                        parent=row.parent,
                        total_length=row.total_length,
                        in_c=False,
                        in_e=False,
                        norm_bound=row.norm_bound,
                        chain_sup=row.chain_sup,
                        zombie_info=row.zombie_info,
                    )
                )
                next_cid += 1

        total = sum((r.total_length for r in new_rows), F0)
        if total != 1:
            raise AssertionError(f"class lengths sum to {total}, not 1")
        c_mass = sum((r.total_length for r in new_rows if r.in_c), F0)
        e_mass = sum((r.total_length for r in new_rows if r.in_e), F0)
        const_mass = sum((r.total_length for r in new_rows if r.kind == "const"), F0)
        step_data.append(
            StepData(
                n=n,
                m_level=m_n,
                eps=eps_n,
                patterns=patterns,
                c_mass=c_mass,
                e_mass=e_mass,
                const_mass=const_mass,
                zombie_mass=1 - const_mass,
                rows_after=new_rows,
            )
        )
        rows = new_rows
        m_levels.append(new_m)

    return SequenceResult(filt, order, eta, step_data, m_levels, rows)


def _mix_value(parts, betas) -> BushRep:
    """xbar + sum beta_m (x_m - xbar) expressed over the decomposed parts.

    With weights w_m of the parts, the node-level coefficients are
    (1 - sum beta) w_m + beta_m, which stay non-negative because the
    stopping overshoots (hence the betas) are far below the part weights.
    """
    total = sum(betas, F0)
    return mix_reps(
        [((1 - total) * w + betas[m], rep) for m, (w, rep) in enumerate(parts)]
    )


def _bind_representative(pat: LemmaPattern, rep_value: BushRep, parts):
    vecs = SequenceResult._slot_vectors(rep_value, parts, pat)
    pat.bind(vecs)
    failed = [name for name, ok in pat.trace.checks if not ok]
    if failed:
        raise AssertionError(f"pattern checks failed after binding: {failed}")


def _spawn_children(row: ClassRow, pat: LemmaPattern, parts, atom_count: int, child_rows, n):
    base_norm = row.rep_value.value().sup_norm
    part_norm = max(rep.value().sup_norm for _, rep in parts)
    betas = pat.inner.trace.betas if pat.inner is not None else ()

    def add(cell: CellSpec, length_per_atom: Fraction):
        key = (row.cid, cell.kind, cell.m, cell.data)
        total = length_per_atom * atom_count
        if key in child_rows:
            child_rows[key].total_length += total
            return
        kind = "const" if cell.is_constant else "zombie"
        rep_value = None
        norm = base_norm
        if cell.kind == "zone":
            rep_value = parts[cell.m][1]
            norm = rep_value.value().sup_norm
        elif cell.kind == "keep":
            rep_value = row.rep_value
        elif cell.kind == "mix":
            rep_value = _mix_value(parts, betas)
            norm = rep_value.value().sup_norm
        elif cell.kind == "rconst":
            vecs = SequenceResult._slot_vectors(row.rep_value, parts, pat)
            w = XVec.zero()
            for coef, skey in pat.w_data[cell.m]:
                w = w.add(vecs[skey].scale(coef))
            rep_value = row.rep_value.with_pert(w)
            norm = rep_value.value().sup_norm
        elif cell.kind == "rbump":
            norm = base_norm + (pat.trace.w_bound or F0)
        else:  # ramp: convex combination of a child and the parent value
            norm = max(base_norm, part_norm)
        child_rows[key] = ClassRow(
            cid=-1,
            step=n + 1,
            kind=kind,
            cell_kind=cell.kind,
            rep_value=rep_value,
            parent=row.cid,
            total_length=total,
            in_c=cell.kind == "zone",
            in_e=cell.kind == "zone" and row.in_c,
            norm_bound=norm,
            chain_sup=max(row.chain_sup, norm),
            zombie_info=(pat, cell) if kind == "zombie" else (),
        )

    for entry in pat.cells:
        if isinstance(entry, PeriodicFamily):
            for c in entry.cells:
                add(c, c.width * entry.count)
        else:
            add(entry, entry.width)
