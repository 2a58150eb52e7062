import random
from fractions import Fraction

import pytest

from splinemart.construction.driver import build_sequence
from splinemart.errors import CapacityError, ConstructionPreconditionError, PreconditionError
from splinemart.filtration import (
    AccumulatingFiltration,
    FileFiltration,
    UniformFiltration,
    dyadic,
)
from splinemart.intervals import MeasurableUnion
from splinemart.witness import XVec

F = Fraction
HALF = F(1, 2)


@pytest.fixture(scope="module")
def seq_k1():
    return build_sequence(dyadic(), 1, HALF, 3)


def test_f0_is_root_and_f1_takes_children(seq_k1):
    rng = random.Random(1)
    assert seq_k1.value_at(F(1, 3), 0) == XVec.zero()
    for t in seq_k1.sample_e_points(1, rng, 6):
        v = seq_k1.value_at(t, 1)
        assert v in (XVec.unit(1), XVec.unit(1, F(-1)))  # the two root children
        assert seq_k1.sup_diff_at(t, 1) == 1


def test_e1_measure_bound(seq_k1):
    # eta = 1/2: |E_1| >= 1 - 2^-1 * 1/2 = 3/4
    assert seq_k1.e_measure(1) >= F(3, 4)


def test_measures_all_steps(seq_k1):
    for n in range(1, 4):
        assert seq_k1.e_measure(n) >= 1 - F(1, 2**n) * HALF
        assert seq_k1.c_measure(n) >= 1 - F(1, 2 ** (n + 2)) * HALF


def test_levels_strictly_increasing(seq_k1):
    levels = seq_k1.m_levels
    assert levels[0] == 0
    assert all(a < b for a, b in zip(levels, levels[1:]))


def test_separation_exact_on_e_samples(seq_k1):
    rng = random.Random(7)
    for n in range(1, 4):
        for t in seq_k1.sample_e_points(n, rng, 4):
            assert seq_k1.sup_diff_at(t, n) >= 1


def test_class_lengths_partition(seq_k1):
    for sd in seq_k1.steps:
        assert sum((r.total_length for r in sd.rows_after), F(0)) == 1


def test_boundedness(seq_k1):
    sup = max(r.chain_sup for r in seq_k1.final_rows)
    assert sup <= 1 + seq_k1.eta / 4


@pytest.mark.parametrize("k", [2, 3])
def test_higher_orders_two_steps(k):
    seq = build_sequence(dyadic(), k, HALF, 2)
    rng = random.Random(k)
    for n in (1, 2):
        assert seq.e_measure(n) >= 1 - F(1, 2**n) * HALF
        for t in seq.sample_e_points(n, rng, 3):
            assert seq.sup_diff_at(t, n) >= 1
    # exact vanishing moments per pattern (martingale property)
    for _n, pat in seq.all_patterns():
        for j in range(k):
            mom = pat.moment_slotwise(j)
            parts_vals = mom.values()
            assert all(isinstance(v, F) for v in parts_vals)


def test_triadic_generator():
    seq = build_sequence(UniformFiltration(3), 1, HALF, 2)
    assert seq.e_measure(1) >= F(3, 4)
    rng = random.Random(0)
    for t in seq.sample_e_points(2, rng, 3):
        assert seq.sup_diff_at(t, 2) >= 1


def test_dichotomy_precondition():
    with pytest.raises(ConstructionPreconditionError):
        build_sequence(AccumulatingFiltration(HALF), 1, HALF, 2)


def test_file_filtration_capacity():
    filt = FileFiltration(
        MeasurableUnion.full(),
        [[F(0), F(1)], [F(0), HALF, F(1)], [F(0), F(1, 4), HALF, F(3, 4), F(1)]],
    )
    with pytest.raises(CapacityError):
        build_sequence(filt, 1, HALF, 1)


def test_eta_validation():
    with pytest.raises(PreconditionError):
        build_sequence(dyadic(), 1, F(3, 2), 1)
    with pytest.raises(PreconditionError):
        build_sequence(dyadic(), 1, HALF, 0)


def test_zone_constancy_nearby_points(seq_k1):
    rng = random.Random(3)
    h = F(1, 2 ** seq_k1.m_levels[2])
    for t in seq_k1.sample_e_points(2, rng, 3):
        v = seq_k1.value_at(t, 2)
        assert seq_k1.value_at(t + h / 5, 2) == v
        assert seq_k1.value_at(t - h / 3, 2) == v


def test_eta_quarter_bounds_scale():
    seq = build_sequence(dyadic(), 1, F(1, 4), 2)
    for n in (1, 2):
        assert seq.e_measure(n) >= 1 - F(1, 2**n) * F(1, 4)


def test_json_roundtrip(seq_k1):
    import json

    blob = seq_k1.to_json(trace="full")
    encoded = json.dumps(blob)
    back = json.loads(encoded)
    assert back["k"] == 1
    assert len(back["E"]) == 3
    assert all(not row["failed"] for row in back["trace_summary"])
