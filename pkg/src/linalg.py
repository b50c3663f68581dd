"""Dense complex linear algebra for small Hilbert spaces.

Vectors and matrices are plain numpy ``complex128`` arrays. Everything built
here is returned read-only, so values can be shared between threads without
copies. Operator predicates use the Frobenius norm throughout.
"""

from __future__ import annotations

from functools import reduce
from typing import TypeAlias

import numpy as np
from numpy.typing import ArrayLike

from .exceptions import DimensionError

CVector: TypeAlias = np.ndarray
CMatrix: TypeAlias = np.ndarray

DEFAULT_TOL = 1e-10


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def as_vector(v: ArrayLike) -> CVector:
    """Return ``v`` as a read-only 1-d complex vector."""
    arr = np.array(v, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"Expected a non-empty 1-d vector, got shape {arr.shape}")
    return _frozen(arr)


def as_matrix(m: ArrayLike) -> CMatrix:
    """Return ``m`` as a read-only 2-d complex matrix."""
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"Expected a non-empty 2-d matrix, got shape {arr.shape}")
    return _frozen(arr)


def _square(m: ArrayLike) -> CMatrix:
    mat = as_matrix(m)
    if mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {mat.shape}")
    return mat


def identity(dim: int) -> CMatrix:
    """Identity operator on a ``dim``-dimensional space."""
    if dim < 1:
        raise DimensionError(f"Dimension must be positive, got {dim}")
    return _frozen(np.eye(dim, dtype=complex))


def ket(dim: int, index: int) -> CVector:
    """Computational basis vector ``|index>`` of a ``dim``-dimensional space."""
    if not 0 <= index < dim:
        raise DimensionError(f"Basis index {index} out of range for dimension {dim}")
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return _frozen(v)


def tensor(*factors: ArrayLike) -> np.ndarray:
    """
    Kronecker product of any number of matrices (or of vectors).

    Dimensions multiply; the left factor indexes the slow axis, so for
    ``tensor(a, b)`` the composite index is ``i * dim(b) + j``.
    """
    if not factors:
        raise DimensionError("tensor() needs at least one factor")
    arrays = [np.asarray(f, dtype=complex) for f in factors]
    ndims = {a.ndim for a in arrays}
    if len(ndims) != 1 or ndims.pop() not in (1, 2):
        raise DimensionError("tensor() factors must all be vectors or all be matrices")
    return _frozen(np.array(reduce(np.kron, arrays), dtype=complex))


def adjoint(m: ArrayLike) -> CMatrix:
    """Conjugate transpose."""
    return _frozen(np.array(as_matrix(m).conj().T))


def matmul(a: ArrayLike, b: ArrayLike) -> CMatrix:
    """Matrix product ``a @ b``."""
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape[1] != mb.shape[0]:
        raise DimensionError(f"Cannot multiply {ma.shape} by {mb.shape}")
    return _frozen(ma @ mb)


def apply(m: ArrayLike, v: ArrayLike) -> CVector:
    """Apply operator ``m`` to vector ``v``."""
    mat, vec = as_matrix(m), as_vector(v)
    if mat.shape[1] != vec.shape[0]:
        raise DimensionError(f"Cannot apply {mat.shape} operator to vector of dim {vec.shape[0]}")
    return _frozen(mat @ vec)


def inner(u: ArrayLike, v: ArrayLike) -> complex:
    """Inner product ``<u|v>`` (antilinear in the first slot)."""
    a, b = as_vector(u), as_vector(v)
    if a.shape != b.shape:
        raise DimensionError(f"Vector dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    return complex(np.vdot(a, b))


def norm(v: ArrayLike) -> float:
    """Euclidean norm of a vector."""
    return float(np.linalg.norm(as_vector(v)))


def outer(u: ArrayLike, v: ArrayLike) -> CMatrix:
    """Outer product ``|u><v|``."""
    return _frozen(np.outer(as_vector(u), as_vector(v).conj()))


def frobenius_norm(m: ArrayLike) -> float:
    """Frobenius norm of a matrix."""
    return float(np.linalg.norm(as_matrix(m), ord="fro"))


def is_hermitian(m: ArrayLike, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``||m^dagger - m||_F <= tol``."""
    mat = _square(m)
    return float(np.linalg.norm(mat.conj().T - mat, ord="fro")) <= tol


def is_projector(m: ArrayLike, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``m`` is idempotent and self-adjoint, both within ``tol``."""
    mat = _square(m)
    idempotent = float(np.linalg.norm(mat @ mat - mat, ord="fro")) <= tol
    return idempotent and is_hermitian(mat, tol)


def commutator_norm(a: ArrayLike, b: ArrayLike) -> float:
    """Frobenius norm of ``ab - ba``."""
    ma, mb = _square(a), _square(b)
    if ma.shape != mb.shape:
        raise DimensionError(f"Operator dimensions differ: {ma.shape} vs {mb.shape}")
    return float(np.linalg.norm(ma @ mb - mb @ ma, ord="fro"))


def eigenvalues_hermitian(m: ArrayLike) -> np.ndarray:
    """Ascending real spectrum of a self-adjoint matrix."""
    return np.linalg.eigvalsh(_square(m))


def rank_of_projector(p: ArrayLike, tol: float = DEFAULT_TOL) -> int:
    """Number of eigenvalues of ``p`` near 1."""
    return int(np.sum(np.abs(eigenvalues_hermitian(p) - 1.0) <= max(tol, 1e-8)))


def expectation(m: ArrayLike, v: ArrayLike) -> float:
    """Real part of ``<v|m v>``."""
    return inner(v, apply(m, v)).real


def allclose(a: ArrayLike, b: ArrayLike, tol: float = DEFAULT_TOL) -> bool:
    """Frobenius (or Euclidean) distance between two arrays is within ``tol``."""
    x, y = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if x.shape != y.shape:
        return False
    return float(np.linalg.norm(x - y)) <= tol
