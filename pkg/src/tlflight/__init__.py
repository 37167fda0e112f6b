"""Asymmetrically truncated Levy flights: cumulants, sampling and correlation analysis."""
from .cumulants import CumulantSet, StableParams, cumulants, oracle_cumulants, small_asymmetry_cumulants
from .deformation import DeformationSpec, DeformationError, eval_g, validate
from .distribution import stable_pdf, stable_sf, tail_mass_b, truncated_pdf, normalization_C
from .sampler import WalkEnsemble, generate_walks, sample_stable, sample_truncated
from .walk_theory import Regime, classify_regime, threefold_coefficient, threefold_isoline

__version__ = "0.1.0"

__all__ = [
    "CumulantSet", "StableParams", "cumulants", "oracle_cumulants", "small_asymmetry_cumulants",
    "DeformationSpec", "DeformationError", "eval_g", "validate",
    "stable_pdf", "stable_sf", "tail_mass_b", "truncated_pdf", "normalization_C",
    "WalkEnsemble", "generate_walks", "sample_stable", "sample_truncated",
    "Regime", "classify_regime", "threefold_coefficient", "threefold_isoline",
]
