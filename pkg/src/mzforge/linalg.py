"""Dense Hermitian linear algebra shared by the design, frame and recovery code.

Every spectral quantity (determinant, distance to the identity, inverse
square root) goes through a single eigendecomposition.
"""
from __future__ import annotations

import numpy as np

from .errors import IllConditioned, InvalidInput, NotPSD

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
LOGDET_FLOOR = 1e-300


class HermitianMatrix:
    """Immutable dense complex Hermitian matrix.

    Input is symmetrized as ``(A + A^*) / 2``.  The raw input must already
    be Hermitian up to ``1e-12`` relative to its size, so rounding drift is
    absorbed but a genuinely non-Hermitian matrix is rejected.
    """

    __slots__ = ("_a", "_eig")

    def __init__(self, entries, *, check: bool = True):
        a = np.array(entries, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InvalidInput(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInput("matrix has non-finite entries")
        if check:
            skew = np.abs(a - a.conj().T).max()
            if skew > HERMITIAN_TOL * (1.0 + np.abs(a).max()):
                raise InvalidInput(f"matrix is not Hermitian (skew {skew:.2e})")
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        self._a = a
        self._eig = None

    @property
    def entries(self) -> np.ndarray:
        return self._a

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self._a if dtype is None else self._a.astype(dtype)

    def __repr__(self) -> str:
        return f"HermitianMatrix(dim={self.dim})"

    def eigh(self):
        if self._eig is None:
            lam, U = np.linalg.eigh(self._a)
            lam.setflags(write=False)
            U.setflags(write=False)
            self._eig = (lam, U)
        return self._eig


def as_hermitian(A) -> HermitianMatrix:
    return A if isinstance(A, HermitianMatrix) else HermitianMatrix(A)


def hermitian_eigh(A):
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix."""
    return as_hermitian(A).eigh()


def spectral_distance_to_identity(A) -> float:
    """Operator 2-norm of ``A - I``, i.e. the largest ``|lambda_k - 1|``."""
    lam, _ = hermitian_eigh(A)
    return float(np.max(np.abs(lam - 1.0)))


def log_det(A) -> float:
    """Log-determinant of a positive semi-definite matrix.

    Returns ``-inf`` when some eigenvalue is below ``1e-300`` and raises
    :class:`NotPSD` when an eigenvalue is below ``-1e-10``.
    """
    lam, _ = hermitian_eigh(A)
    if lam[0] < -PSD_TOL:
        raise NotPSD(lam[0])
    if lam[0] < LOGDET_FLOOR:
        return -np.inf
    return float(np.sum(np.log(lam)))


def inverse_sqrt(A, eps: float = 1e-10) -> HermitianMatrix:
    """``A^{-1/2}`` for a positive definite matrix with spectrum above ``eps``."""
    lam, U = hermitian_eigh(A)
    if lam[0] < eps:
        raise IllConditioned(lam[0], eps)
    B = (U / np.sqrt(lam)) @ U.conj().T
    return HermitianMatrix(B, check=False)
