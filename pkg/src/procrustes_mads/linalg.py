"""Dense matrix primitives and the three matrix norms.

All functions take and return plain ``numpy`` arrays. Decompositions are
delegated to LAPACK through :mod:`numpy.linalg` and :mod:`scipy.linalg`, which is deterministic for
a fixed input on a fixed build.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .exceptions import ContractError, NumericalError

__all__ = [
    "SvdResult",
    "SymEigResult",
    "as_matrix",
    "svd",
    "eig_sym_topk",
    "frobenius_norm",
    "spectral_norm",
    "robust_norm",
]


class SvdResult(NamedTuple):
    """Full SVD ``M = U @ diag(sigma) @ V.T`` (``sigma`` padded to min shape)."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


class SymEigResult(NamedTuple):
    """Eigenpairs ordered by decreasing ``abs(values)``; ``vectors[:, i]`` pairs with ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray


def as_matrix(M, name: str = "M") -> np.ndarray:
    """Return ``M`` as a finite 2-D float array or raise :class:`ContractError`."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ContractError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ContractError(f"{name} contains non-finite entries")
    return M


def svd(M) -> SvdResult:
    """Full singular value decomposition.

    Raises
    ------
    NumericalError
        If the LAPACK driver does not converge.
    """
    M = as_matrix(M)
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return SvdResult(U, s, Vt.T)


def eig_sym_topk(M, k: int) -> SymEigResult:
    """The ``k`` eigenpairs of a symmetric matrix with largest ``|lambda|``.

    For ``4k <= n`` only the ``k`` algebraically largest and ``k`` smallest
    eigenpairs are computed (the top ``k`` by magnitude are among them);
    otherwise a full decomposition is truncated. Ties in ``|lambda|`` are
    broken by the larger signed value first so the order is reproducible.
    """
    M = as_matrix(M)
    n = M.shape[0]
    if M.shape[1] != n:
        raise ContractError(f"matrix must be square, got shape {M.shape}")
    if not 1 <= k <= n:
        raise ContractError(f"k must lie in [1, {n}], got {k}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > 1e-12 * scale:
        raise ContractError("matrix is not symmetric")
    try:
        if 4 * k <= n:
            lo, Vlo = scipy.linalg.eigh(M, subset_by_index=[0, k - 1])
            hi, Vhi = scipy.linalg.eigh(M, subset_by_index=[n - k, n - 1])
            w, V = np.concatenate([lo, hi]), np.hstack([Vlo, Vhi])
        else:
            w, V = np.linalg.eigh(M)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(f"symmetric eigendecomposition failed: {exc}") from exc
    order = np.lexsort((-w, -np.abs(w)))[:k]
    return SymEigResult(w[order], V[:, order])


def _scaled(M: np.ndarray):
    # divide by the largest magnitude so squaring neither underflows nor overflows
    s = float(np.max(np.abs(M)))
    return (M / s, s) if s > 0 else (M, 0.0)


def frobenius_norm(M) -> float:
    S, s = _scaled(as_matrix(M))
    return s * float(np.sqrt(np.sum(S * S)))


def spectral_norm(M) -> float:
    """Largest singular value of ``M``."""
    return float(svd(M).sigma[0])


def robust_norm(M) -> float:
    r"""Mixed :math:`\ell_{2,1}` norm: the sum of the Euclidean norms of the columns."""
    S, s = _scaled(as_matrix(M))
    return s * float(np.sum(np.sqrt(np.sum(S * S, axis=0))))
