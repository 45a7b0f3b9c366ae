"""Geometry of the orthogonal group O(d).

Points are plain ``(d, d)`` arrays. Tangent vectors at ``p`` have the form
``p @ Omega`` with ``Omega`` skew-symmetric, and are stored as coefficients
in the fixed orthonormal basis ``E_ij = (e_i e_j^T - e_j e_i^T) / sqrt(2)``
(``i < j``, lexicographic order) under the trace metric
``<X, Y> = tr(Omega_X^T Omega_Y)``.

The metric is bi-invariant, so moving a basis from ``p`` to ``q`` by left
translation keeps the coefficients and is an isometry. O(d) has two
connected components (``det = +1`` and ``det = -1``); nothing here moves a
point between them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .exceptions import ContractError

__all__ = [
    "TangentVector",
    "TangentBasis",
    "tangent_dim",
    "skew_from_coeffs",
    "coeffs_from_skew",
    "check_orthogonal",
    "component",
    "canonical_point",
    "canonical_basis",
    "transport_basis",
    "exp_map",
    "qr_retract",
    "retract",
    "random_orthogonal",
    "rotation_2d",
    "rotation_angle",
    "injectivity_radius",
]

_SQRT2 = np.sqrt(2.0)


def tangent_dim(d: int) -> int:
    return d * (d - 1) // 2


@lru_cache(maxsize=None)
def _pairs(d: int):
    iu, ju = np.triu_indices(d, k=1)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


def skew_from_coeffs(coeffs, d: int) -> np.ndarray:
    """Skew-symmetric matrix with the given basis coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (tangent_dim(d),):
        raise ContractError(f"expected {tangent_dim(d)} coefficients for d={d}, got shape {coeffs.shape}")
    iu, ju = _pairs(d)
    omega = np.zeros((d, d))
    omega[iu, ju] = coeffs / _SQRT2
    omega[ju, iu] = -coeffs / _SQRT2
    return omega


def coeffs_from_skew(omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    iu, ju = _pairs(omega.shape[0])
    return (omega[iu, ju] - omega[ju, iu]) / _SQRT2


def check_orthogonal(W, tol: float = 1e-10, name: str = "W") -> np.ndarray:
    """Validate ``W`` as a point of O(d) and return it as a float array."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] == 0:
        raise ContractError(f"{name} must be square, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ContractError(f"{name} contains non-finite entries")
    err = np.linalg.norm(W.T @ W - np.eye(W.shape[0]))
    if err > tol:
        raise ContractError(f"{name} is not orthogonal: ||W^T W - I||_F = {err:.3e}")
    return W


def component(W) -> int:
    """Determinant sign of an orthogonal matrix, ``+1`` or ``-1``."""
    return 1 if np.linalg.det(W) > 0 else -1


def canonical_point(d: int, sign: int = 1) -> np.ndarray:
    """Identity for ``sign=+1``; ``diag(-1, 1, ..., 1)`` for ``sign=-1``."""
    if sign not in (1, -1):
        raise ContractError(f"component must be +1 or -1, got {sign}")
    P = np.eye(d)
    if sign < 0:
        P[0, 0] = -1.0
    return P


@dataclass(frozen=True)
class TangentVector:
    """Tangent vector ``base @ skew(coeffs)`` anchored at ``base``."""

    base: np.ndarray
    coeffs: np.ndarray

    @property
    def skew(self) -> np.ndarray:
        return skew_from_coeffs(self.coeffs, self.base.shape[0])

    @property
    def ambient(self) -> np.ndarray:
        return self.base @ self.skew

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True)
class TangentBasis:
    """Ordered tangent basis at ``base``; row ``k`` of ``coeffs`` is vector ``k``."""

    base: np.ndarray
    coeffs: np.ndarray

    @property
    def vectors(self) -> list[TangentVector]:
        return [TangentVector(self.base, c) for c in self.coeffs]

    def gram(self) -> np.ndarray:
        # coefficient frame is orthonormal, so the metric is the dot product
        return self.coeffs @ self.coeffs.T

    def to_coeffs(self, weights) -> np.ndarray:
        """Coefficients (in the fixed skew frame) of ``sum_k weights[k] * vector_k``."""
        return np.asarray(weights, dtype=float) @ self.coeffs


def canonical_basis(p) -> TangentBasis:
    p = check_orthogonal(p, name="p")
    m = tangent_dim(p.shape[0])
    return TangentBasis(p, np.eye(m))


def transport_basis(basis: TangentBasis, q) -> TangentBasis:
    """Move ``basis`` to ``q`` by left translation ``p Omega -> q Omega``."""
    q = check_orthogonal(q, tol=1e-8, name="q")
    if q.shape != basis.base.shape:
        raise ContractError("cannot transport between different dimensions")
    if component(q) != component(basis.base):
        raise ContractError("cannot transport a basis across determinant components")
    return TangentBasis(q, basis.coeffs)


def _coeffs_at(p: np.ndarray, X) -> np.ndarray:
    if isinstance(X, TangentVector):
        if X.base is not p and not np.allclose(X.base, p, atol=1e-12):
            raise ContractError("tangent vector is anchored at a different point")
        return np.asarray(X.coeffs, dtype=float)
    return np.asarray(X, dtype=float)


def _expm_skew(omega: np.ndarray) -> np.ndarray:
    d = omega.shape[0]
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        return _rot2(float(omega[0, 1]))
    if d == 3:
        return _rodrigues(float(omega[2, 1]), float(omega[0, 2]), float(omega[1, 0]))
    return scipy.linalg.expm(omega)


def _rot2(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, s], [-s, c]])


def _rodrigues(x: float, y: float, z: float) -> np.ndarray:
    """``expm`` of the cross-product matrix of ``(x, y, z)``."""
    t2 = x * x + y * y + z * z
    if t2 < 1e-16:
        a, b = 1.0 - t2 / 6.0, 0.5 - t2 / 24.0
    else:
        t = math.sqrt(t2)
        a, b = math.sin(t) / t, (1.0 - math.cos(t)) / t2
    return np.array([
        [1.0 - b * (y * y + z * z), b * x * y - a * z, b * x * z + a * y],
        [b * x * y + a * z, 1.0 - b * (x * x + z * z), b * y * z - a * x],
        [b * x * z - a * y, b * y * z + a * x, 1.0 - b * (x * x + y * y)],
    ])


def _expm_coeffs(c: np.ndarray, d: int) -> np.ndarray:
    if d == 2:
        return _rot2(float(c[0]) / _SQRT2)
    if d == 3:
        # coefficients order (0,1), (0,2), (1,2); axis vector of the skew matrix
        return _rodrigues(-float(c[2]) / _SQRT2, float(c[1]) / _SQRT2, -float(c[0]) / _SQRT2)
    return _expm_skew(skew_from_coeffs(c, d))


def exp_map(p, X) -> np.ndarray:
    """Riemannian exponential ``p @ expm(Omega)``; ``X`` is a TangentVector or coefficient array."""
    p = np.asarray(p, dtype=float)
    c = _coeffs_at(p, X)
    d = p.shape[0]
    if c.shape != (tangent_dim(d),):
        raise ContractError(f"expected {tangent_dim(d)} coefficients for d={d}, got shape {c.shape}")
    return p @ _expm_coeffs(c, d)


def qr_retract(p, X) -> np.ndarray:
    """Q factor of ``p @ (I + Omega)`` with the positive-diagonal convention for R."""
    p = np.asarray(p, dtype=float)
    d = p.shape[0]
    c = _coeffs_at(p, X)
    Q, R = np.linalg.qr(np.eye(d) + skew_from_coeffs(c, d))
    # I + Omega is invertible for skew Omega, so diag(R) has no zeros
    Q = Q * np.sign(np.diag(R))
    return p @ Q


def retract(p, X, method: str = "auto") -> np.ndarray:
    """Dispatch to :func:`exp_map` (``d <= 8``) or :func:`qr_retract`."""
    if method == "auto":
        method = "exp" if np.shape(p)[0] <= 8 else "qr"
    if method == "exp":
        return exp_map(p, X)
    if method == "qr":
        return qr_retract(p, X)
    raise ContractError(f"unknown retraction {method!r}")


def random_orthogonal(d: int, sign: int = 1, rng=None) -> np.ndarray:
    """Haar-distributed draw from the ``det = sign`` component of O(d)."""
    if d < 1:
        raise ContractError(f"d must be >= 1, got {d}")
    if sign not in (1, -1):
        raise ContractError(f"component must be +1 or -1, got {sign}")
    rng = np.random.default_rng(rng)
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    Q = Q * np.sign(np.diag(R))
    if component(Q) != sign:
        Q[:, 0] = -Q[:, 0]
    return Q


def rotation_2d(alpha: float) -> np.ndarray:
    """``[[cos a, sin a], [-sin a, cos a]]`` (note: ``sin`` in the upper right)."""
    c, s = np.cos(alpha), np.sin(alpha)
    return np.array([[c, s], [-s, c]])


def rotation_angle(W) -> float:
    """Inverse of :func:`rotation_2d` on SO(2), in ``(-pi, pi]``."""
    W = np.asarray(W, dtype=float)
    if W.shape != (2, 2):
        raise ContractError(f"expected a 2x2 matrix, got shape {W.shape}")
    if np.linalg.det(W) < 0:
        raise ContractError("rotation angle is undefined for a reflection (det = -1)")
    return float(np.arctan2(W[0, 1], W[0, 0]))


def injectivity_radius(d: int) -> float:
    """Safe lower bound on the injectivity radius of O(d) under the trace metric.

    A plane rotation by angle ``t`` has tangent norm ``sqrt(2) * t``, and
    ``exp`` is injective while every such angle stays below ``pi``; the
    constant ``pi`` is therefore conservative for every ``d >= 2``.
    """
    if d < 2:
        raise ContractError(f"O({d}) has no positive-dimensional tangent space")
    return float(np.pi)
