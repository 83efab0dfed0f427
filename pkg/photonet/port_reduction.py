"""
Reduction of Ĥ to ports of interest with 0/1 selector matrices Â.

Âᵀ is a plain transpose: the entries are real 0/1, so transpose and
conjugate transpose coincide. Reductions are done by index selection, not by
matrix products, so reduced entries are bit-identical to entries of Ĥ.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from photonet.errors import DimensionError
from photonet.matrix_core import ComplexMatrix, ComplexVector, as_matrix, as_vector


@dataclass(frozen=True)
class ReductionSelector:
    """Ordered retained global ports out of m; implies Â of shape 2k×2m."""
    retained_global_ports: Tuple[int, ...]
    m: int

    def __post_init__(self):
        ports = tuple(int(p) for p in self.retained_global_ports)
        if len(set(ports)) != len(ports):
            raise DimensionError(f"retained ports {list(ports)} contain duplicates")
        for p in ports:
            if not 1 <= p <= self.m:
                raise DimensionError(f"port {p} outside 1..{self.m}")
        object.__setattr__(self, "retained_global_ports", ports)

    @property
    def coordinates(self) -> NDArray[np.intp]:
        """0-based coordinates of Ĥ kept by Â, in selector order."""
        return np.array([c for p in self.retained_global_ports for c in (2 * p - 2, 2 * p - 1)], dtype=np.intp)

    @property
    def matrix(self) -> NDArray[np.float64]:
        a = np.zeros((2 * len(self.retained_global_ports), 2 * self.m))
        a[np.arange(a.shape[0]), self.coordinates] = 1.0
        return a


def selector_for_ports(ports: Sequence[int], m: int) -> ReductionSelector:
    return ReductionSelector(tuple(ports), m)


def _check_h(selector: ReductionSelector, H: ComplexMatrix) -> None:
    if H.shape != (2 * selector.m, 2 * selector.m):
        raise DimensionError(f"H is {H.shape[0]}x{H.shape[1]}, selector expects {2 * selector.m}x{2 * selector.m}")


def reduce_transfer(selector: ReductionSelector, H: ArrayLike) -> ComplexMatrix:
    """H' = Â·H·Âᵀ, realized as a sub-matrix selection."""
    H = as_matrix(H)
    _check_h(selector, H)
    idx = selector.coordinates
    return H[np.ix_(idx, idx)]


def extract_jones(k_out: int, j_in: int, H: ArrayLike) -> ComplexMatrix:
    """2×2 Jones matrix Â_k·H·Â_jᵀ from input port j to output port k."""
    H = as_matrix(H)
    if H.shape[0] != H.shape[1] or H.shape[0] % 2:
        raise DimensionError(f"H must be square with even dimension, got {H.shape}")
    m = H.shape[0] // 2
    for p in (k_out, j_in):
        if not 1 <= p <= m:
            raise DimensionError(f"port {p} outside 1..{m}")
    rows = slice(2 * k_out - 2, 2 * k_out)
    cols = slice(2 * j_in - 2, 2 * j_in)
    return H[rows, cols].copy()


def reduce_vector(selector: ReductionSelector, E: ArrayLike) -> ComplexVector:
    """E' = Â·E."""
    E = as_vector(E)
    if E.shape[0] != 2 * selector.m:
        raise DimensionError(f"vector has {E.shape[0]} entries, selector expects {2 * selector.m}")
    return E[selector.coordinates]


def embed_vector(selector: ReductionSelector, E_reduced: ArrayLike) -> ComplexVector:
    """Âᵀ·E': place a reduced vector back into the full 2m space."""
    E_reduced = as_vector(E_reduced)
    idx = selector.coordinates
    if E_reduced.shape[0] != idx.shape[0]:
        raise DimensionError(f"reduced vector has {E_reduced.shape[0]} entries, expected {idx.shape[0]}")
    full = np.zeros(2 * selector.m, dtype=np.complex128)
    full[idx] = E_reduced
    return full
