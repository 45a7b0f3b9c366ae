"""The two-dimensional "duck" point set and its perturbed copies.

``A`` holds ten planar points, ``B = R(ALPHA_STAR) A`` is the rotated copy,
and the perturbations of ``B`` are:

* ``C``, ``D``, ``E``: two outlier columns (indices 1 and 7, zero-based);
* ``Ctilde = B + u v^T`` and ``Dtilde = B + u v^T / 2 + noise``, with
  ``v`` from the null space of ``B`` and ``u = (1, 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import linalg
from .exceptions import ContractError
from .manifold import rotation_2d, rotation_angle

__all__ = [
    "ALPHA_STAR",
    "OUTLIER_COLUMNS",
    "OUTLIER_SHIFTS",
    "AlignmentErrors",
    "duck_dataset",
    "rotated_duck",
    "make_outlier_set",
    "nullspace_basis",
    "make_nullspace_set",
    "wrapped_distance",
    "recovered_angle",
    "alignment_errors",
]

ALPHA_STAR = 5.0 * np.pi / 8.0
OUTLIER_COLUMNS = (1, 7)

# shifts added to columns 1 and 7 of B
OUTLIER_SHIFTS = {
    "C": ((2.0, 0.0), (0.0, 2.0)),
    "D": ((1.0, 0.0), (0.0, 2.0)),
    "E": ((1.0, 2.0), (0.0, 2.0)),
}


def duck_dataset() -> np.ndarray:
    """The 2 x 10 matrix of duck points."""
    return np.array([
        [-1 / 2, 1 / 2, 1 / 2, -1 / 4, 0, 1 / 4, -3 / 8, -1 / 8, 1 / 8, 3 / 8],
        [1 / 4, -2 / 12, -5 / 12, 1 / 2, 1 / 2, 1 / 2, -1 / 2, -1 / 2, -1 / 2, -1 / 2],
    ])


def rotated_duck(alpha: float = ALPHA_STAR) -> np.ndarray:
    return rotation_2d(alpha) @ duck_dataset()


def make_outlier_set(variant: str, B) -> np.ndarray:
    """Copy of ``B`` with the two outlier shifts of ``variant`` in {"C", "D", "E"}."""
    try:
        shifts = OUTLIER_SHIFTS[variant]
    except KeyError:
        raise ContractError(f"unknown outlier variant {variant!r}") from None
    C = np.array(B, dtype=float)
    if C.shape != (2, 10):
        raise ContractError(f"expected a 2x10 matrix, got shape {C.shape}")
    for col, shift in zip(OUTLIER_COLUMNS, shifts):
        C[:, col] += shift
    return C


def nullspace_basis(B, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal null-space basis of full-row-rank ``B`` as rows.

    Rows are the right singular vectors beyond the rank, each flipped so its
    first entry of magnitude above ``tol`` is positive.
    """
    B = linalg.as_matrix(B, "B")
    res = linalg.svd(B)
    d = B.shape[0]
    if res.sigma[-1] <= tol * max(1.0, res.sigma[0]):
        raise ContractError("B is rank deficient")
    N = res.V[:, d:].T.copy()
    for row in N:
        lead = row[np.flatnonzero(np.abs(row) > tol)[0]]
        if lead < 0:
            row *= -1.0
    return N


def make_nullspace_set(variant: str, B, rng=None) -> np.ndarray:
    """``Ctilde = B + u v^T`` or ``Dtilde = B + u v^T / 2 + R`` with ``R ~ U[0, 1/2]`` iid.

    ``v`` is the sum of the null-space basis vectors of ``B`` and
    ``u = (1, ..., 1)``. ``rng`` is only used for ``Dtilde``.
    """
    B = linalg.as_matrix(B, "B")
    v = nullspace_basis(B).sum(axis=0)
    u = np.ones(B.shape[0])
    if variant == "Ctilde":
        return B + np.outer(u, v)
    if variant == "Dtilde":
        rng = np.random.default_rng(rng)
        return B + 0.5 * np.outer(u, v) + rng.uniform(0.0, 0.5, size=B.shape)
    raise ContractError(f"unknown null-space variant {variant!r}")


@dataclass(frozen=True)
class AlignmentErrors:
    eps_alpha: float
    eps_frobenius: float


def wrapped_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle, in ``[0, pi]``."""
    delta = abs(a - b) % (2.0 * np.pi)
    return float(min(delta, 2.0 * np.pi - delta))


def recovered_angle(W) -> float:
    """Angle ``alpha_n`` with ``W = R(-alpha_n)``, the rotation undone by ``W``."""
    return -rotation_angle(W)


def alignment_errors(W, alpha_star: float, A, C, outlier_cols: Iterable[int] = ()) -> AlignmentErrors:
    """Angle error and Frobenius error of ``A - W C`` on the non-outlier columns."""
    angle = recovered_angle(W)
    A = linalg.as_matrix(A, "A")
    C = linalg.as_matrix(C, "C")
    keep = np.ones(A.shape[1], dtype=bool)
    keep[list(outlier_cols)] = False
    resid = (A - np.asarray(W) @ C)[:, keep]
    return AlignmentErrors(wrapped_distance(alpha_star, angle), float(np.linalg.norm(resid)))
