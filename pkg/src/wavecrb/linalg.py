"""Dense complex linear algebra kernel.

Thin, contract-checked wrappers around LAPACK (via numpy) covering exactly
what the rest of the library needs: the normalized DFT matrix, Hermitian
eigendecomposition, inversion with a singularity guard, the PSD square
root, the exponential of a skew-Hermitian matrix, and reciprocal condition
estimation.

All functions are pure; inputs are never mutated. Matrices spanning many
orders of magnitude are expected, so every tolerance is relative to the
Frobenius norm of the input.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidDimensionError,
    LinalgDomainError,
    NotPSDError,
    SingularMatrixError,
)

# Matrices with a reciprocal condition number below this are treated as
# singular everywhere in the library (inversion, FIM skip policy).
RCOND_SINGULAR = 1e-12

_HERMITIAN_TOL = 1e-9


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition of a Hermitian matrix.

    ``eigenvalues`` are real and ascending; ``eigenvectors`` holds the
    orthonormal eigenvectors as columns, so that
    ``eigenvectors @ diag(eigenvalues) @ eigenvectors.conj().T``
    reconstructs the (symmetrized) input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidDimensionError(f"{name} must be a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag if np.iscomplexobj(a) else a.real)):
        raise LinalgDomainError(f"{name} contains non-finite entries")
    return a


def _hermitian_deviation(a: np.ndarray) -> float:
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return 0.0
    return np.linalg.norm(a - a.conj().T) / scale


def dft_matrix(n: int) -> np.ndarray:
    """Normalized n-point DFT matrix, entry (m, k) = exp(-2j*pi*m*k/n)/sqrt(n).

    The result is unitary: F @ F.conj().T == I up to rounding.
    """
    if n < 1:
        raise InvalidDimensionError("DFT size must be at least 1")
    grid = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(grid, grid) / n) / np.sqrt(n)


def hermitian_eig(a) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix, ascending eigenvalues.

    The input is symmetrized internally; inputs farther than a relative
    1e-9 from Hermitian are rejected.
    """
    a = _as_square(a, "matrix")
    if _hermitian_deviation(a) > _HERMITIAN_TOL:
        raise LinalgDomainError("matrix is not Hermitian within tolerance")
    sym = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(sym)
    return HermitianEig(eigenvalues=w, eigenvectors=v)


def rcond_estimate(a) -> float:
    """Reciprocal condition number lambda_min/lambda_max of a Hermitian matrix.

    Returns 0 when the largest eigenvalue is zero. For PSD inputs the value
    lies in [0, 1] up to rounding.
    """
    w = hermitian_eig(a).eigenvalues
    if w[-1] == 0.0:
        return 0.0
    return float(w[0] / w[-1])


def inverse(a) -> np.ndarray:
    """Matrix inverse with an explicit singularity guard.

    Hermitian inputs take the eigendecomposition route, which preserves
    symmetry exactly and reuses the eigenvalue ratio as the singularity
    check. General matrices use an LU solve guarded by an SVD-based
    reciprocal condition estimate. Raises SingularMatrixError (carrying the
    rcond estimate) below RCOND_SINGULAR.
    """
    a = _as_square(a, "matrix")
    if _hermitian_deviation(a) <= _HERMITIAN_TOL:
        eig = hermitian_eig(a)
        w, v = eig.eigenvalues, eig.eigenvectors
        absw = np.abs(w)
        rcond = float(absw.min() / absw.max()) if absw.max() > 0 else 0.0
        if rcond < RCOND_SINGULAR:
            raise SingularMatrixError(f"matrix is singular (rcond={rcond:.3e})", rcond)
        inv = (v / w) @ v.conj().T
        inv = (inv + inv.conj().T) / 2
        return inv.real if not np.iscomplexobj(a) else inv
    s = np.linalg.svd(a, compute_uv=False)
    rcond = float(s[-1] / s[0]) if s[0] > 0 else 0.0
    if rcond < RCOND_SINGULAR:
        raise SingularMatrixError(f"matrix is singular (rcond={rcond:.3e})", rcond)
    return np.linalg.solve(a, np.eye(a.shape[0], dtype=a.dtype))


def psd_sqrt(a) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues within -1e-6 * lambda_max of zero are clamped to zero
    (rounding artifacts of PSD-by-construction inputs); anything more
    negative raises NotPSDError.
    """
    eig = hermitian_eig(a)
    w, v = eig.eigenvalues, eig.eigenvectors
    lmax = max(w[-1], 0.0)
    if w[0] < -1e-6 * lmax:
        raise NotPSDError(f"matrix is not PSD: lambda_min={w[0]:.3e}, lambda_max={lmax:.3e}")
    w = np.clip(w, 0.0, None)
    root = (v * np.sqrt(w)) @ v.conj().T
    root = (root + root.conj().T) / 2
    return root.real if not np.iscomplexobj(np.asarray(a)) else root


def inv_sqrt_psd(a) -> np.ndarray:
    """Inverse PSD square root, with the same singularity guard as inverse()."""
    eig = hermitian_eig(a)
    w, v = eig.eigenvalues, eig.eigenvectors
    rcond = float(w[0] / w[-1]) if w[-1] > 0 else 0.0
    if rcond < RCOND_SINGULAR:
        raise SingularMatrixError(f"matrix is singular (rcond={rcond:.3e})", rcond)
    inv_root = (v / np.sqrt(w)) @ v.conj().T
    inv_root = (inv_root + inv_root.conj().T) / 2
    return inv_root.real if not np.iscomplexobj(np.asarray(a)) else inv_root


def exp_skew(k, t: float) -> np.ndarray:
    """exp(t*K) for a skew-Hermitian K, computed via the Hermitian matrix j*K.

    j*K is Hermitian when K is skew-Hermitian, so exp(t*K) =
    V diag(exp(-j*t*w)) V^H with (w, V) the eigensystem of j*K. The result
    is unitary up to rounding.
    """
    k = _as_square(k, "direction")
    scale = max(1.0, np.linalg.norm(k))
    if np.linalg.norm(k + k.conj().T) > 1e-9 * scale:
        raise LinalgDomainError("direction matrix is not skew-Hermitian within tolerance")
    herm = 1j * k
    herm = (herm + herm.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    return (v * np.exp(-1j * t * w)) @ v.conj().T
