"""Quantum error-reduction codes from lossless Z-graphs.

Construction and exact Pauli-frame simulation of CSS error-reduction codes
built from four-part bipartite expander graphs, sequential and parallel
flip decoders, and their concatenation into constant-rate code cascades.
"""

from .backend import active_backend
from .gf2 import BitMatrix, BitVec, kernel_basis, mat_mat_mul, mat_vec_mul, rank

__version__ = "0.1.0"

__all__ = [
    "BitMatrix",
    "BitVec",
    "active_backend",
    "kernel_basis",
    "mat_mat_mul",
    "mat_vec_mul",
    "rank",
]
