"""Decide whether a closed curve bounds a positive holomorphic 1-chain, from its moments."""
from .curve import CurveSpec, Loop, TrigSeries, dump_curve, load_curve, make_loop
from .errors import ChainboundError, InputError, NumericalError
from .membership import (BOUNDS, INCONCLUSIVE, REJECTS, FitSettings, Tolerances, Verdict,
                         minimal_level_search, solve_level, solve_level1, test_level0)
from .moments import MomentTable, Quadrature, canonical_transform, cauchy_transform, compute_moments
from .newton import Hierarchy, MomentFamily, extend_hierarchy, verify_family, verify_hierarchy
from .reconstruct import SheetSample, compare_to_truth, reconstruct_sheets
from .series import TruncatedSeries

__all__ = [
    "BOUNDS", "INCONCLUSIVE", "REJECTS", "ChainboundError", "CurveSpec", "FitSettings",
    "Hierarchy", "InputError", "Loop", "MomentFamily", "MomentTable", "NumericalError",
    "Quadrature", "SheetSample", "Tolerances", "TrigSeries", "TruncatedSeries", "Verdict",
    "canonical_transform", "cauchy_transform", "compare_to_truth", "compute_moments",
    "dump_curve", "extend_hierarchy", "load_curve", "make_loop", "minimal_level_search",
    "reconstruct_sheets", "solve_level", "solve_level1", "test_level0", "verify_family",
    "verify_hierarchy",
]
