"""Lower-triangular mesh-adaptive direct search (LTMADS) on O(d).

Directions live in coefficient space with respect to a tangent basis at the
current iterate. One iteration is:

1. generate ``2m`` poll directions (``m = d(d-1)/2``) from a random
   lower-triangular integer matrix and its negation;
2. poll: accept the first direction ``d_j`` with
   ``f(R_p(mesh * d_j)) < f(p)``;
3. on success, search: try ``R_p(4 * mesh * d_j)`` from the same base point
   and keep it if it improves further;
4. transport the basis to the new iterate;
5. update the mesh: quarter it on failure, quadruple it on success while it
   is below 1/4, otherwise keep it.

The loop stops once the mesh drops below ``min_mesh`` or after
``max_iters`` iterations. The solver is derivative-free and returns a
stationary point, not necessarily a global minimizer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .exceptions import ContractError
from .manifold import (
    TangentBasis,
    check_orthogonal,
    component,
    _expm_coeffs,
    injectivity_radius,
    qr_retract,
    tangent_dim,
    transport_basis,
)

__all__ = [
    "MadsParams",
    "MeshState",
    "MadsResult",
    "generate_poll_directions",
    "poll_step",
    "search_step",
    "update_mesh",
    "minimize",
]

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class MadsParams:
    initial_mesh: float = 1.0
    min_mesh: float = 1e-14
    max_iters: int = 10_000
    global_scale: Optional[float] = None  # None -> injectivity radius
    seed: Optional[int] = 0
    retraction: str = "auto"
    record_trace: bool = False

    def __post_init__(self):
        if not 0 < self.min_mesh < self.initial_mesh:
            raise ContractError("need 0 < min_mesh < initial_mesh")
        if self.max_iters < 1:
            raise ContractError("max_iters must be positive")
        if self.global_scale is not None and self.global_scale <= 0:
            raise ContractError("global_scale must be positive")

    def scale_for(self, d: int) -> float:
        cap = injectivity_radius(d)
        if self.global_scale is None:
            return cap
        if self.global_scale > cap:
            raise ContractError(f"global_scale {self.global_scale} exceeds injectivity radius {cap}")
        return self.global_scale


@dataclass
class MeshState:
    point: np.ndarray
    basis: TangentBasis
    mesh: float
    cost: float
    last_success_dir: Optional[np.ndarray] = None
    iter: int = 0


@dataclass
class MadsResult:
    minimizer: np.ndarray
    cost: float
    iterations: int
    termination: str  # "mesh_below_threshold" | "iter_budget"
    evaluations: int = 0
    nonfinite_evaluations: int = 0
    # (iter, cost, mesh, improved) after each iteration; mesh is the value used in that iteration
    trace: list = field(default_factory=list)


class _Counted:
    """Objective wrapper: counts calls and maps non-finite values to +inf."""

    def __init__(self, f: Objective):
        self.f = f
        self.calls = 0
        self.nonfinite = 0

    def __call__(self, W) -> float:
        self.calls += 1
        v = float(self.f(W))
        if not math.isfinite(v):
            self.nonfinite += 1
            return math.inf
        return v


def _mesh_index(mesh: float) -> tuple[int, int]:
    """(diagonal magnitude, largest off-diagonal magnitude) for the current mesh."""
    k = 1.0 / math.sqrt(mesh)
    diag = max(1, math.floor(k + 1e-9))
    # integers strictly inside (-k, k)
    off = max(0, math.ceil(k - 1e-9) - 1)
    return diag, off


def generate_poll_directions(state: MeshState, rng) -> np.ndarray:
    """``2m`` directions (rows) in basis coordinates: columns of an LTMADS basis, then their negatives.

    ``b`` gets a random pivot index with entry ``+-diag`` and bounded random
    integers elsewhere; the remaining ``m - 1`` coordinates carry a
    lower-triangular ``L`` (diagonal ``+-diag``) under a random row
    permutation; columns are shuffled at the end.
    """
    m = state.basis.coeffs.shape[0]
    diag, off = _mesh_index(state.mesh)
    # one uniform batch: m*m integers, m signs, the pivot, then two permutation keys
    u = np.random.default_rng(rng).random(m * m + 3 * m)
    ints = np.floor(u[: m * m] * (2 * off + 1)) - off
    signs = np.where(u[m * m: m * m + m] < 0.5, -1.0, 1.0)
    pivot = min(int(u[m * m + m] * m), m - 1)
    row_keys = u[m * m + m + 1: m * m + 2 * m]
    col_keys = u[m * m + 2 * m:]

    b = ints[:m]
    b[pivot] = diag * signs[0]
    basis = np.empty((m, m))
    basis[:, m - 1] = b
    if m > 1:
        L = np.tril(ints[m:].reshape(m - 1, m)[:, : m - 1], k=-1)
        L[np.diag_indices(m - 1)] = diag * signs[1:]
        rows = np.array([i for i in range(m) if i != pivot])[np.argsort(row_keys)]
        basis[rows, : m - 1] = L
        basis[pivot, : m - 1] = 0.0
        basis = basis[:, np.argsort(col_keys)]
    return np.vstack([basis.T, -basis.T])


def _resolve_retraction(method, d: int):
    """Retraction callable ``(point, coefficient step) -> point``."""
    if callable(method):
        return method
    return _named_retraction(method, d)


@lru_cache(maxsize=None)
def _named_retraction(method: str, d: int):
    if method == "auto":
        method = "exp" if d <= 8 else "qr"
    if method == "exp":
        return lambda p, c: p @ _expm_coeffs(c, d)
    if method == "qr":
        return qr_retract
    raise ContractError(f"unknown retraction {method!r}")


def _step_coeffs(state: MeshState, direction, length: float, global_scale: float) -> np.ndarray:
    step = state.basis.to_coeffs(length * np.asarray(direction, dtype=float))
    norm = math.sqrt(float(step @ step))
    if norm > global_scale:
        step *= global_scale / norm
    return step


def poll_step(objective: Objective, state: MeshState, dirs, *, global_scale: float = math.pi,
              retraction: str = "auto"):
    """First improving poll point as ``(point, cost, direction)``, or ``None``."""
    step_to = _resolve_retraction(retraction, state.point.shape[0])
    for dj in dirs:
        q = step_to(state.point, _step_coeffs(state, dj, state.mesh, global_scale))
        fq = objective(q)
        if not math.isfinite(fq):
            continue
        if fq < state.cost:
            return q, fq, np.asarray(dj, dtype=float)
    return None


def search_step(objective: Objective, state: MeshState, direction=None, cost_to_beat=None, *,
                global_scale: float = math.pi, retraction: str = "auto"):
    """Try the long step ``R_p(4 * mesh * direction)``.

    ``direction`` defaults to ``state.last_success_dir``; with no direction
    the step is skipped. The trial is accepted only if it is strictly below
    ``cost_to_beat`` (default ``state.cost``).
    """
    if direction is None:
        direction = state.last_success_dir
    if direction is None:
        return None
    if cost_to_beat is None:
        cost_to_beat = state.cost
    step_to = _resolve_retraction(retraction, state.point.shape[0])
    q = step_to(state.point, _step_coeffs(state, direction, 4.0 * state.mesh, global_scale))
    fq = objective(q)
    if math.isfinite(fq) and fq < cost_to_beat:
        return q, fq
    return None


def update_mesh(mesh: float, improved: bool) -> float:
    if not improved:
        return 0.25 * mesh
    if mesh < 0.25:
        return 4.0 * mesh
    return mesh


def minimize(objective: Objective, start, params: MadsParams = MadsParams(), *,
             sign: Optional[int] = None) -> MadsResult:
    """Minimize ``objective`` over the determinant component containing ``start``.

    Parameters
    ----------
    objective : callable
        Maps a ``(d, d)`` orthogonal matrix to a real cost. Non-finite
        values count as non-improving.
    start : ndarray
        Initial point; must be orthogonal to within ``1e-8``.
    params : MadsParams
    sign : {+1, -1}, optional
        Expected component of ``start``; checked if given.
    """
    start = check_orthogonal(start, tol=1e-8, name="start")
    d = start.shape[0]
    if sign is not None and component(start) != sign:
        raise ContractError(f"start lies on the det={component(start):+d} component, expected {sign:+d}")
    f = _Counted(objective)
    state = MeshState(point=start, basis=TangentBasis(start, np.eye(tangent_dim(d))), mesh=float(params.initial_mesh),
                      cost=f(start))
    if tangent_dim(d) == 0:
        return MadsResult(start, state.cost, 0, "mesh_below_threshold", f.calls, f.nonfinite)

    scale = params.scale_for(d)
    rng = np.random.default_rng(params.seed)
    trace = []
    while state.mesh >= params.min_mesh and state.iter < params.max_iters:
        dirs = generate_poll_directions(state, rng)
        polled = poll_step(f, state, dirs, global_scale=scale, retraction=params.retraction)
        improved = polled is not None
        if improved:
            q, fq, dj = polled
            searched = search_step(f, state, dj, fq, global_scale=scale, retraction=params.retraction)
            if searched is not None:
                q, fq = searched
            state.basis = transport_basis(state.basis, q)
            state.point, state.cost, state.last_success_dir = q, fq, dj
        if params.record_trace:
            trace.append((state.iter, state.cost, state.mesh, improved))
        state.mesh = update_mesh(state.mesh, improved)
        state.iter += 1

    termination = "mesh_below_threshold" if state.mesh < params.min_mesh else "iter_budget"
    return MadsResult(state.point, state.cost, state.iter, termination, f.calls, f.nonfinite, trace)
