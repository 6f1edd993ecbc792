"""Numerical laboratory for Lipschitz-free spaces over finite pointed metric spaces."""
from .free_norm import (DualCertificate, TransportPlan, duality_gap, free_norm, free_norm_dual,
                        free_norm_primal)
from .metric_core import (LipFunction, Molecule, PointedMetricSpace, ValidationReport, lip_norm,
                          molecule_eval, validate_space)

__all__ = [
    "DualCertificate", "TransportPlan", "duality_gap", "free_norm", "free_norm_dual",
    "free_norm_primal", "LipFunction", "Molecule", "PointedMetricSpace", "ValidationReport",
    "lip_norm", "molecule_eval", "validate_space",
]
