"""Linear sketch for l2/l2 sparse recovery with a peeling decoder."""

from __future__ import annotations

from .code import BalancedCode
from .core import (
    EXACT,
    PAPER,
    PRACTICAL,
    DimensionError,
    ParameterError,
    Params,
    SparseApprox,
    classify,
    error_ratio,
    tail_norm_sq,
    top_indices,
)
from .count_sketch import CountSketch
from .decoder import RecoveryOutput, recover, recover_vs_peeling_crosscheck
from .peeling import WeightedHypergraph, census, peel, spreadness
from .signals import SignalModel, generate
from .sketch import Sketch
from .tail import TailSketch

__version__ = "0.1.0"

__all__ = [
    "BalancedCode",
    "CountSketch",
    "DimensionError",
    "EXACT",
    "PAPER",
    "PRACTICAL",
    "ParameterError",
    "Params",
    "RecoveryOutput",
    "Sketch",
    "SignalModel",
    "SparseApprox",
    "TailSketch",
    "WeightedHypergraph",
    "census",
    "classify",
    "error_ratio",
    "generate",
    "peel",
    "recover",
    "recover_vs_peeling_crosscheck",
    "spreadness",
    "tail_norm_sq",
    "top_indices",
]
