"""Procrustes alignment under the Frobenius, spectral and robust norms.

Given ``A, B`` of shape ``(d, n)`` (columns are corresponding points), find
an orthogonal ``W`` minimizing ``||A - W B||`` for the chosen norm. The
Frobenius problem has the closed form ``W = V U^T`` from the SVD
``B A^T = U S V^T``. The spectral and robust problems are nonsmooth and are
solved with :func:`procrustes_mads.mads.minimize` from several starts on
both determinant components.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .exceptions import ContractError
from .mads import MadsParams, MadsResult, minimize
from .manifold import canonical_point, component, random_orthogonal, rotation_angle
from .rng import derive_rng

__all__ = [
    "NormKind",
    "ProcrustesSolution",
    "AngleSweep",
    "cost",
    "solve_frobenius",
    "solve_mads",
    "solve",
    "angle_sweep",
]


class NormKind(str, enum.Enum):
    FROBENIUS = "frobenius"
    SPECTRAL = "spectral"
    ROBUST = "robust"

    @classmethod
    def parse(cls, value) -> "NormKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"f": cls.FROBENIUS, "s": cls.SPECTRAL, "r": cls.ROBUST}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ContractError(f"unknown norm {value!r}") from None

    @property
    def short(self) -> str:
        return self.value[0].upper()


_NORMS = {
    NormKind.FROBENIUS: linalg.frobenius_norm,
    NormKind.SPECTRAL: linalg.spectral_norm,
    NormKind.ROBUST: linalg.robust_norm,
}


@dataclass
class ProcrustesSolution:
    W: np.ndarray
    cost: float
    norm: NormKind
    method: str  # "closed_form" | "mads"
    starts_used: int = 0
    component_of_best: int = 1
    runs: list = field(default_factory=list, repr=False)


def _check_pair(A, B):
    A = linalg.as_matrix(A, "A")
    B = linalg.as_matrix(B, "B")
    if A.shape != B.shape:
        raise ContractError(f"A and B must have the same shape, got {A.shape} and {B.shape}")
    return A, B


def cost(norm, W, A, B) -> float:
    """``||A - W B||`` in the requested norm."""
    norm = NormKind.parse(norm)
    A, B = _check_pair(A, B)
    W = np.asarray(W, dtype=float)
    if W.shape != (A.shape[0], A.shape[0]):
        raise ContractError(f"W must be {A.shape[0]}x{A.shape[0]}, got {W.shape}")
    return _NORMS[norm](A - W @ B)


def _top_eig_sym3(G: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric 3x3 matrix (trigonometric closed form)."""
    a, b, c = G[0, 0], G[1, 1], G[2, 2]
    d, e, f = G[0, 1], G[0, 2], G[1, 2]
    p1 = d * d + e * e + f * f
    q = (a + b + c) / 3.0
    p2 = (a - q) ** 2 + (b - q) ** 2 + (c - q) ** 2 + 2.0 * p1
    if p2 <= 0.0:
        return q
    p = math.sqrt(p2 / 6.0)
    a, b, c = (a - q) / p, (b - q) / p, (c - q) / p
    d, e, f = d / p, e / p, f / p
    r = 0.5 * (a * (b * c - f * f) - d * (d * c - f * e) + e * (d * f - b * e))
    r = min(1.0, max(-1.0, r))
    return q + 2.0 * p * math.cos(math.acos(r) / 3.0)


def _top_eig_sym2(G: np.ndarray) -> float:
    half = 0.5 * (G[0, 0] + G[1, 1])
    diff = 0.5 * (G[0, 0] - G[1, 1])
    return half + math.hypot(diff, G[0, 1])


def _objective(norm: NormKind, A: np.ndarray, B: np.ndarray):
    # lean versions of the core norms for the inner loop; final costs go through cost()
    if norm is NormKind.FROBENIUS:
        return lambda W: math.sqrt(float(np.einsum("ij,ij->", R := A - W @ B, R)))
    if norm is NormKind.SPECTRAL:
        d, n = A.shape
        if n >= d and d in (2, 3):
            # sigma_max(R)^2 = lambda_max(R R^T); R is formed directly so precision is relative
            top = _top_eig_sym2 if d == 2 else _top_eig_sym3

            def spectral(W):
                R = A - W @ B
                return math.sqrt(max(top(R @ R.T), 0.0))

            return spectral
        return lambda W: float(np.linalg.svd(A - W @ B, compute_uv=False)[0])
    return lambda W: float(np.sqrt(np.einsum("ij,ij->j", R := A - W @ B, R)).sum())


def solve_frobenius(A, B) -> ProcrustesSolution:
    """Closed-form orthogonal Procrustes; global minimizer over all of O(d)."""
    A, B = _check_pair(A, B)
    # W depends only on the singular vectors, so scale first to keep B A^T finite
    sa, sb = np.abs(A).max() or 1.0, np.abs(B).max() or 1.0
    res = linalg.svd((B / sb) @ (A / sa).T)
    W = res.V @ res.U.T
    return ProcrustesSolution(W, cost(NormKind.FROBENIUS, W, A, B), NormKind.FROBENIUS,
                              "closed_form", 0, component(W))


def solve_mads(norm, A, B, params: Optional[MadsParams] = None, n_starts: int = 8, *,
               components: Sequence[int] = (1, -1), frobenius: Optional[ProcrustesSolution] = None,
               ) -> ProcrustesSolution:
    """Multi-start LTMADS for the spectral or robust problem.

    Starts, in order: the Frobenius minimizer ``W_F`` (if its component is
    searched), then for each component in ``components`` the canonical
    point followed by ``n_starts`` Haar-random points. ``W_F`` itself is
    always a candidate, so the returned cost never exceeds
    ``cost(norm, W_F, A, B)``. Ties go to the earliest start.

    Parameters
    ----------
    norm : NormKind or str
    A, B : ndarray, shape (d, n)
    params : MadsParams, optional
        Solver settings; ``params.seed`` seeds both the random starts and
        the per-start poll streams.
    n_starts : int
        Random starts per component.
    components : sequence of {+1, -1}
    frobenius : ProcrustesSolution, optional
        Precomputed Frobenius solution for ``(A, B)``.
    """
    norm = NormKind.parse(norm)
    A, B = _check_pair(A, B)
    params = MadsParams() if params is None else params
    d = A.shape[0]
    wf = solve_frobenius(A, B) if frobenius is None else frobenius
    seed = 0 if params.seed is None else params.seed

    starts = []
    if component(wf.W) in components:
        starts.append(wf.W)
    for sign in components:
        starts.append(canonical_point(d, sign))
        rng = derive_rng(seed, "random-starts", 1 if sign > 0 else 0)
        starts.extend(random_orthogonal(d, sign, rng) for _ in range(n_starts))

    f = _objective(norm, A, B)
    best_W, best_cost = wf.W, cost(norm, wf.W, A, B)
    runs: list[MadsResult] = []
    for k, W0 in enumerate(starts):
        run = minimize(f, W0, replace(params, seed=int(derive_rng(seed, "poll", k).integers(2**63))))
        runs.append(run)
        c = cost(norm, run.minimizer, A, B)
        if c < best_cost:
            best_W, best_cost = run.minimizer, c
    return ProcrustesSolution(best_W, best_cost, norm, "mads", len(starts), component(best_W), runs)


def solve(norm, A, B, params: Optional[MadsParams] = None, n_starts: int = 8, **kwargs) -> ProcrustesSolution:
    """Closed form for the Frobenius norm, multi-start LTMADS otherwise."""
    norm = NormKind.parse(norm)
    if norm is NormKind.FROBENIUS:
        return solve_frobenius(A, B)
    return solve_mads(norm, A, B, params, n_starts, **kwargs)


@dataclass
class AngleSweep:
    """Cost ``f(R(alpha))`` over an angle grid, with optional solver markers.

    ``markers`` maps a label to ``(angle, cost)``: ``"T"`` is the norm's own
    minimizer, ``"T_hat"`` the Frobenius minimizer evaluated in this norm.
    """

    norm: NormKind
    alpha: np.ndarray
    cost: np.ndarray
    markers: dict = field(default_factory=dict)

    def argmin(self) -> float:
        return float(self.alpha[np.argmin(self.cost)])


def _sweep_costs(norm: NormKind, A, B, alpha: np.ndarray, chunk: int = 1 << 16) -> np.ndarray:
    # R(a) B = cos(a) B + sin(a) J B with J = [[0, 1], [-1, 0]]
    JB = np.vstack([B[1], -B[0]])
    out = np.empty(alpha.shape[0])
    for lo in range(0, alpha.shape[0], chunk):
        a = alpha[lo:lo + chunk, None]
        c, s = np.cos(a), np.sin(a)
        rx = A[0] - c * B[0] - s * JB[0]
        ry = A[1] - c * B[1] - s * JB[1]
        if norm is NormKind.ROBUST:
            out[lo:lo + chunk] = np.sqrt(rx * rx + ry * ry).sum(axis=1)
            continue
        gxx, gyy, gxy = (rx * rx).sum(1), (ry * ry).sum(1), (rx * ry).sum(1)
        if norm is NormKind.FROBENIUS:
            out[lo:lo + chunk] = np.sqrt(gxx + gyy)
        else:
            half = 0.5 * (gxx + gyy)
            out[lo:lo + chunk] = np.sqrt(half + np.sqrt(np.maximum(half**2 - (gxx * gyy - gxy**2), 0.0)))
    return out


def angle_sweep(norm, A, B, grid, *, markers: bool = False, params: Optional[MadsParams] = None,
                n_starts: int = 8) -> AngleSweep:
    """Evaluate ``f_norm(R(alpha))`` on ``grid`` for ``d = 2``."""
    norm = NormKind.parse(norm)
    A, B = _check_pair(A, B)
    if A.shape[0] != 2:
        raise ContractError(f"angle sweep needs d = 2, got d = {A.shape[0]}")
    alpha = np.asarray(grid, dtype=float).ravel()
    sweep = AngleSweep(norm, alpha, _sweep_costs(norm, A, B, alpha))
    if markers:
        wf = solve_frobenius(A, B)
        sol = solve(norm, A, B, params, n_starts, components=(1,)) if norm is not NormKind.FROBENIUS else wf
        sweep.markers["T"] = (rotation_angle(sol.W), sol.cost)
        if wf.component_of_best > 0:
            sweep.markers["T_hat"] = (rotation_angle(wf.W), cost(norm, wf.W, A, B))
    return sweep
