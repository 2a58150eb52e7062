"""Vector-level entry points for the perturbation constructions.

The pattern builders in core/lemma work slot-wise (scalar weights per
witness vector); these wrappers accept the witness vectors themselves and
return bound objects with direct evaluation, matching how the operations
are stated mathematically.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from ..errors import PreconditionError
from ..intervals import Interval, frac
from ..witness import XVec
from .core import ConstructionContext, Step1Pattern, step1_simple, step1_stopping
from .lemma import BoundLemma, LemmaPattern, lemma_moments


class BoundStep1:
    """A Step-1 pattern with concrete witness vectors."""

    def __init__(self, pattern: Step1Pattern, slot_vectors: dict):
        self.pattern = pattern
        self.slots = dict(slot_vectors)

    def g_eval(self, t) -> XVec:
        acc = XVec.zero()
        for key, coef in self.pattern.eval_slotwise(frac(t)).items():
            acc = acc.add(self.slots[key].scale(coef))
        return acc

    def g_moment(self, r: int) -> XVec:
        acc = XVec.zero()
        for key, coef in self.pattern.moment_slotwise(r).items():
            acc = acc.add(self.slots[key].scale(coef))
        return acc


def _stopping_slots(xs: Sequence[XVec], xbar: XVec, betas) -> dict:
    diffs = [x.sub(xbar) for x in xs]
    vecs = {("d", m): dv for m, dv in enumerate(diffs)}
    mix = XVec.zero()
    for b, dv in zip(betas, diffs):
        mix = mix.add(dv.scale(b))
    vecs[("dmix",)] = mix
    return vecs


def stopping_perturbation(
    ctx: ConstructionContext,
    interval: Interval,
    alphas: Sequence[Fraction],
    xs: Sequence[XVec],
    xbar: XVec,
    eps: Fraction,
    base_level: int = 0,
) -> BoundStep1:
    """Step-1 stopping construction bound to concrete witness vectors.

    Requires xbar = sum alpha_j x_j exactly and unit separation
    ||xbar - x_j|| >= 1 (what the bush decompositions provide).
    """
    alphas = [frac(a) for a in alphas]
    acc = XVec.zero()
    for a, x in zip(alphas, xs):
        acc = acc.add(x.scale(a))
    if acc != xbar:
        raise PreconditionError("xbar must equal the convex combination of xs")
    for x in xs:
        if xbar.sub(x).sup_norm < 1:
            raise PreconditionError("decomposition points must be separated from xbar")
    pattern = step1_stopping(ctx, interval, alphas, eps, base_level)
    return BoundStep1(pattern, _stopping_slots(xs, xbar, pattern.trace.betas))


def simple_perturbation(
    ctx: ConstructionContext,
    interval: Interval,
    alphas,  # RleSplines summing to one on the interval
    xs: Sequence[XVec],
    eps: Fraction,
) -> BoundStep1:
    """Step-1 truncation construction bound to concrete witness vectors."""
    pattern = step1_simple(ctx, interval, list(alphas), eps)
    betas = pattern.trace.betas
    xtilde = XVec.zero()
    for b, x in zip(betas, xs):
        xtilde = xtilde.add(x.scale(b))
    vecs = {("s", ell): xtilde.sub(x) for ell, x in enumerate(xs)}
    return BoundStep1(pattern, vecs)


def moment_perturbation(
    ctx: ConstructionContext,
    interval: Interval,
    alphas: Sequence[Fraction],
    xs: Sequence[XVec],
    xbar: XVec,
    eps: Fraction,
    base_level: int = 0,
) -> BoundLemma:
    """Full vanishing-moment perturbation bound to witness vectors."""
    alphas = [frac(a) for a in alphas]
    pattern: LemmaPattern = lemma_moments(
        ctx, interval, eps, base_level, const_alphas=alphas
    )
    betas = pattern.inner.trace.betas
    return pattern.bind(_stopping_slots(xs, xbar, betas))
