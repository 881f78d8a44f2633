"""Joint shortening/puncturing pattern optimisation for QC-LDPC codes."""

from .protograph import BaseMatrix, BinaryMatrix, erase_columns, lift, load_base_matrix, parse_base_matrix
from .pruning import PruningPattern, apply, bit_schedule, pruned_rate, sub_pattern, validate

__all__ = [
    "BaseMatrix",
    "BinaryMatrix",
    "PruningPattern",
    "apply",
    "bit_schedule",
    "erase_columns",
    "lift",
    "load_base_matrix",
    "parse_base_matrix",
    "pruned_rate",
    "sub_pattern",
    "validate",
]
