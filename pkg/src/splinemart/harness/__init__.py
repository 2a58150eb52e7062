from .verify import CheckEntry, VerificationReport, verify_sequence
from .estimators import (
    constructed_doob_ratio,
    constructed_weak_type_ratio,
    doob_ratio,
    random_martingale,
    scalar_convergence_demo,
    unconditionality_ratio,
    uniform_integrability_profile,
    weak_type_ratio,
)
from .constants import ConstantsTable, shadrin_profile

__all__ = [
    "CheckEntry",
    "VerificationReport",
    "verify_sequence",
    "weak_type_ratio",
    "doob_ratio",
    "constructed_weak_type_ratio",
    "constructed_doob_ratio",
    "unconditionality_ratio",
    "uniform_integrability_profile",
    "scalar_convergence_demo",
    "random_martingale",
    "ConstantsTable",
    "shadrin_profile",
]
