"""
Dense complex matrix and vector arithmetic for the network solver.
ComplexMatrix / ComplexVector are plain numpy complex128 arrays; this module
validates shapes, factors with partial-pivoting LU (scipy.linalg) and guards
every solve with an infinity-norm condition estimate.
"""

import logging
import warnings
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import LinAlgWarning, get_lapack_funcs, lu_factor, lu_solve

from photonet.errors import DimensionError, SingularMatrixError

logger = logging.getLogger(__name__)

ComplexMatrix = NDArray[np.complex128]
ComplexVector = NDArray[np.complex128]

# Above this the system is reported as singular (lossless resonance, rank loss).
SINGULAR_CONDITION_THRESHOLD = 1e12


def as_matrix(a: ArrayLike) -> ComplexMatrix:
    """Coerce to a 2-D complex128 array with finite entries."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("matrix has non-finite entries")
    return arr


def as_vector(v: ArrayLike) -> ComplexVector:
    """Coerce to a 1-D complex128 array with finite entries."""
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("vector has non-finite entries")
    return arr


def identity(n: int) -> ComplexMatrix:
    return np.eye(n, dtype=np.complex128)


def _require_square(a: ComplexMatrix) -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got {a.shape[0]}x{a.shape[1]}")


def multiply(a: ArrayLike, b: ArrayLike) -> ComplexMatrix:
    """Standard matrix product a·b."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def _factor(a: ComplexMatrix) -> Tuple[Tuple[NDArray, NDArray], float]:
    """
    LU-factor a square matrix and estimate its infinity-norm condition number.
    Returns ((lu, piv), condition). Exactly singular input gives condition = inf.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a, check_finite=False)
    if np.any(np.diag(lu) == 0):
        return (lu, piv), float("inf")
    anorm = float(np.linalg.norm(a, np.inf))
    if anorm == 0.0:
        return (lu, piv), float("inf")
    gecon, = get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, anorm, norm="I")
    if info != 0 or not np.isfinite(rcond) or rcond <= 0.0:
        return (lu, piv), float("inf")
    return (lu, piv), float(1.0 / rcond)


def _checked_factor(a: ComplexMatrix) -> Tuple[Tuple[NDArray, NDArray], float]:
    lu_piv, cond = _factor(a)
    if cond > SINGULAR_CONDITION_THRESHOLD:
        raise SingularMatrixError(
            f"matrix is singular to working precision (condition estimate {cond:.3e})",
            condition=cond,
        )
    return lu_piv, cond


def condition_estimate(a: ArrayLike) -> float:
    """Estimate of ‖a‖∞·‖a⁻¹‖∞ from the LU factors (LAPACK gecon)."""
    a = as_matrix(a)
    _require_square(a)
    _, cond = _factor(a)
    return cond


def solve_with_condition(a: ArrayLike, b: ArrayLike) -> Tuple[ComplexMatrix, float]:
    """
    Solve a·x = b for x (b may be a matrix or a vector).
    Returns (x, condition_estimate); raises SingularMatrixError above the threshold.
    """
    a = as_matrix(a)
    _require_square(a)
    b_arr = np.asarray(b, dtype=np.complex128)
    if b_arr.ndim not in (1, 2) or b_arr.shape[0] != a.shape[0]:
        raise DimensionError(f"right-hand side with {b_arr.shape} rows does not match {a.shape[0]}x{a.shape[1]}")
    if not np.all(np.isfinite(b_arr)):
        raise DimensionError("right-hand side has non-finite entries")
    lu_piv, cond = _checked_factor(a)
    logger.debug("solve n=%d condition=%.3e", a.shape[0], cond)
    return lu_solve(lu_piv, b_arr, check_finite=False), cond


def solve(a: ArrayLike, b: ArrayLike) -> ComplexMatrix:
    """Solve a·x = b with partial-pivoting LU."""
    x, _ = solve_with_condition(a, b)
    return x


def invert(a: ArrayLike) -> ComplexMatrix:
    """Explicit inverse of a square, non-singular matrix."""
    a = as_matrix(a)
    _require_square(a)
    lu_piv, _ = _checked_factor(a)
    return lu_solve(lu_piv, identity(a.shape[0]), check_finite=False)
