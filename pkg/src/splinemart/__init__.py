"""splinemart: martingale spline sequences over interval filtrations.

Library layout:

- ``intervals`` / ``filtration``: exact rational interval measure logic and
  filtration generators.
- ``bspline``: B-spline bases, moments, Gram matrices, knot refinement.
- ``witness``: finitely supported sup-norm vectors and the dyadic bush.
- ``projection``: orthogonal projections onto spline spaces and the L1
  operator-norm estimator.
- ``construction``: the mean-zero / vanishing-moment spline perturbations
  and the divergent-sequence driver.
- ``harness``: verification suites and empirical constant estimators.
"""

from . import errors
from .intervals import Interval, MeasurableUnion, frac, measure_in
from .filtration import (
    AccumulatingFiltration,
    FileFiltration,
    FiltrationOracle,
    UniformFiltration,
    dyadic,
    equal_measure_split,
    gamma_partition,
    load_filtration_file,
    parse_filtration_spec,
    refine_until,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "Interval",
    "MeasurableUnion",
    "frac",
    "measure_in",
    "FiltrationOracle",
    "UniformFiltration",
    "AccumulatingFiltration",
    "FileFiltration",
    "dyadic",
    "equal_measure_split",
    "gamma_partition",
    "load_filtration_file",
    "parse_filtration_spec",
    "refine_until",
]
