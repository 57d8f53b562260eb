"""Extended non-binary LDPC codes over GF(2^p) on the binary erasure channel."""

from __future__ import annotations

__version__ = "0.1.0"

from ._core import BACKEND
from .code import MOTHER_CODE, DegreeDistribution, NBCode, TannerGraph, peg_construct, read_code, write_code
from .decoder import DecodeOutcome, ErasurePattern, ExtendedCode, bit_erasure_rate, decode, oracle_decode, transmit
from .density import DEConfig, EnsembleSpec, ThresholdResult, de_converges, normalized_gap, threshold
from .distribution import (ExtendingDistribution, assign_extensions, average_extension, budget_for_rate,
                           clustering_from, extended_rate, spec_for_target_rate, spreading_from)
from .extension import ExtensionMatrix, dmin, expected_eligible, random_extension, select_extension
from .gf import GF, AffineSubspace, field
from .optimizer import OptConfig, optimize, project_to_budget

__all__ = [
    "BACKEND", "MOTHER_CODE", "DegreeDistribution", "NBCode", "TannerGraph", "peg_construct", "read_code",
    "write_code", "DecodeOutcome", "ErasurePattern", "ExtendedCode", "bit_erasure_rate", "decode",
    "oracle_decode", "transmit", "DEConfig", "EnsembleSpec", "ThresholdResult", "de_converges",
    "normalized_gap", "threshold", "ExtendingDistribution", "assign_extensions", "average_extension",
    "budget_for_rate", "clustering_from", "extended_rate", "spec_for_target_rate", "spreading_from", "ExtensionMatrix", "dmin",
    "expected_eligible", "random_extension", "select_extension", "GF", "AffineSubspace", "field",
    "OptConfig", "optimize", "project_to_budget",
]
