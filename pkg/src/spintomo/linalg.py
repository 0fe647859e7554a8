"""Small dense complex matrix helpers.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``. The
functions here add the shape and domain checks the rest of the package
relies on; the arithmetic itself is numpy's.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError

MAX_DIM = 81
HERMITIAN_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    """Coerce *a* to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    if max(m.shape) > MAX_DIM:
        raise ShapeError(f"dimension {max(m.shape)} exceeds the supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a, b) -> np.ndarray:
    """Kronecker product; the first factor indexes the blocks."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(factors) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def trace(a) -> complex:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"trace of non-square matrix {a.shape}")
    return complex(np.trace(a))


def dagger(a) -> np.ndarray:
    return as_matrix(a).conj().T


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def hermitian_eigvalsh(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"eigenvalues of non-square matrix {a.shape}")
    if not is_hermitian(a, tol):
        raise DomainError("matrix is not Hermitian")
    return np.linalg.eigvalsh(0.5 * (a + a.conj().T))


def is_psd(a, tol: float = 1e-9) -> bool:
    """True iff every eigenvalue of the Hermitian matrix *a* is >= -tol.

    Non-Hermitian input raises :class:`DomainError`.
    """
    return bool(hermitian_eigvalsh(a, max(tol, HERMITIAN_TOL))[0] >= -tol)
