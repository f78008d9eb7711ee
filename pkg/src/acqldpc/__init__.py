"""Affine-coset quantum LDPC toolkit.

Constructs the explicit [[512,174,8]] CSS base matrix pair from affine
cosets of three 3-dimensional subspaces of F_2^9, lifts it with circulant
permutation matrices, decodes with belief propagation plus OSD-style
post-processing, and benchmarks frame error rates under code-capacity
depolarizing noise.
"""

from .gf2 import BitMatrix, BitVector, RowEchelonCache
from .basecode import BaseCode, BasisChoice, build_base, standard_basis, random_basis
from .lift import LiftSpec, QcLiftedCode

__all__ = [
    "BitMatrix",
    "BitVector",
    "RowEchelonCache",
    "BaseCode",
    "BasisChoice",
    "build_base",
    "standard_basis",
    "random_basis",
    "LiftSpec",
    "QcLiftedCode",
]
