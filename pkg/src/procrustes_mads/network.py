"""Two-sample testing for random dot product graphs with Procrustes statistics.

Latent positions are ``(n, d)`` arrays (rows are vertices). An RDPG draws
each edge ``{u, v}`` independently with probability ``<x_u, x_v>``, clamped
to ``[0, 1]``. Two graphs are compared by embedding both with the adjacency
spectral embedding (ASE) and aligning the embeddings:

    T_C = min_W || X1^T - W X2^T ||_C

for the Frobenius (``TF``), spectral (``TS``) and robust (``TR``) norms,
plus the plug-in variants ``TS_hat``/``TR_hat`` that evaluate the spectral
or robust norm at the Frobenius minimizer. Critical values come from a
parametric bootstrap and power is the exceedance rate under an alternative.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import linalg
from .exceptions import ContractError
from .mads import MadsParams
from .procrustes import NormKind, cost, solve_frobenius, solve_mads

__all__ = [
    "StatKind",
    "ALL_STATS",
    "StatOptions",
    "AlternativeSpec",
    "Alternative",
    "PowerReplicate",
    "PowerCurve",
    "sample_sbm_latent",
    "sample_rdpg",
    "ase",
    "test_statistics",
    "test_statistic",
    "make_alternative",
    "apply_alternative",
    "bootstrap_statistics",
    "bootstrap_critical_value",
    "bootstrap_critical_value_from_adjacency",
    "empirical_quantile",
    "power_curve",
    "power_curves",
    "aggregate_curves",
]


class StatKind(str, enum.Enum):
    TF = "TF"
    TS = "TS"
    TR = "TR"
    TS_HAT = "TS_hat"
    TR_HAT = "TR_hat"

    @classmethod
    def parse(cls, value) -> "StatKind":
        if isinstance(value, cls):
            return value
        for kind in cls:
            if kind.value.lower() == str(value).strip().lower():
                return kind
        raise ContractError(f"unknown statistic {value!r}")


ALL_STATS = tuple(StatKind)


@dataclass(frozen=True)
class StatOptions:
    """Solver settings for ``TS``/``TR``.

    The defaults favour throughput: each solve starts from the Frobenius
    minimizer and from the canonical point of each component, with a
    coarser stopping mesh than the general-purpose solver.
    """

    params: MadsParams = MadsParams(min_mesh=1e-7)
    n_starts: int = 0
    components: tuple = (1, -1)


# --------------------------------------------------------------------------- models


def sample_sbm_latent(n: int, r: int, rng=None, *, return_labels: bool = False,
                      return_model: bool = False):
    """Latent positions of a random ``r``-block SBM with ``n`` vertices.

    Block labels are uniform over ``r`` blocks. The block matrix has
    Uniform(0, 1/r) off-diagonal entries and Uniform(0, 1 - 1/r) diagonal
    entries; its eigenvalues are replaced by their absolute values, and
    ``X = U |S|^{1/2}`` for ``P = Z |B| Z^T / sqrt(n) = U S U^T`` (rank ``r``).

    Returns ``X``; ``(X, labels)`` with ``return_labels``; and
    ``(X, labels, |B|)`` with ``return_model``.
    """
    if r < 2 or n < r:
        raise ContractError(f"need r >= 2 and n >= r, got n={n}, r={r}")
    rng = np.random.default_rng(rng)
    labels = rng.integers(r, size=n)
    B = np.zeros((r, r))
    iu = np.triu_indices(r, k=1)
    B[iu] = rng.uniform(0.0, 1.0 / r, size=len(iu[0]))
    B = B + B.T
    B[np.diag_indices(r)] = rng.uniform(0.0, 1.0 - 1.0 / r, size=r)
    w, V = np.linalg.eigh(B)
    B_abs = (V * np.abs(w)) @ V.T
    Z = np.zeros((n, r))
    Z[np.arange(n), labels] = 1.0
    P = Z @ B_abs @ Z.T / np.sqrt(n)
    P = 0.5 * (P + P.T)
    eig = linalg.eig_sym_topk(P, r)
    X = eig.vectors * np.sqrt(np.abs(eig.values))
    if return_model:
        return X, labels, B_abs
    return (X, labels) if return_labels else X


def sample_rdpg(X, rng=None) -> np.ndarray:
    """Symmetric 0/1 adjacency with zero diagonal and edge probabilities ``clip(X X^T, 0, 1)``."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    rng = np.random.default_rng(rng)
    iu, ju = np.triu_indices(n, k=1)
    p = np.clip(np.einsum("ij,ij->i", X[iu], X[ju]), 0.0, 1.0)
    A = np.zeros((n, n))
    A[iu, ju] = rng.random(p.shape[0]) < p
    return A + A.T


def ase(A, d: int) -> np.ndarray:
    """Adjacency spectral embedding ``U |S|^{1/2}`` from the top-``d`` eigenpairs by ``|lambda|``."""
    eig = linalg.eig_sym_topk(A, d)
    return eig.vectors * np.sqrt(np.abs(eig.values))


# --------------------------------------------------------------------------- statistics


def test_statistics(X1, X2, kinds: Iterable = ALL_STATS, opts: StatOptions = StatOptions()) -> dict:
    """All requested statistics for one pair of embeddings, sharing the Frobenius solve.

    Returns a dict ``{StatKind: value}``.
    """
    X1 = linalg.as_matrix(X1, "X1")
    X2 = linalg.as_matrix(X2, "X2")
    if X1.shape != X2.shape:
        raise ContractError(f"embeddings must have equal shapes, got {X1.shape} and {X2.shape}")
    kinds = [StatKind.parse(k) for k in kinds]
    A, B = X1.T, X2.T
    wf = solve_frobenius(A, B)
    out = {}
    for kind in kinds:
        if kind is StatKind.TF:
            out[kind] = wf.cost
        elif kind is StatKind.TS_HAT:
            out[kind] = cost(NormKind.SPECTRAL, wf.W, A, B)
        elif kind is StatKind.TR_HAT:
            out[kind] = cost(NormKind.ROBUST, wf.W, A, B)
        else:
            norm = NormKind.SPECTRAL if kind is StatKind.TS else NormKind.ROBUST
            sol = solve_mads(norm, A, B, opts.params, opts.n_starts, components=opts.components, frobenius=wf)
            out[kind] = sol.cost
    return out


# keep pytest from collecting the public name as a test
test_statistics.__test__ = False


def test_statistic(kind, X1, X2, opts: StatOptions = StatOptions()) -> float:
    kind = StatKind.parse(kind)
    return test_statistics(X1, X2, (kind,), opts)[kind]


test_statistic.__test__ = False


# --------------------------------------------------------------------------- alternatives


@dataclass(frozen=True)
class AlternativeSpec:
    """Alternative family.

    ``kind`` is ``"diffuse"``, ``"rank_one"`` or ``"salt_pepper"``.
    ``theta`` is the angle between the rank-one direction and ``span(X)``.
    ``noise_var`` overrides the per-coordinate noise variance (default
    ``1 / (2 sqrt(n))``); ``rank_one_scale`` is the size of ``u v^T``.
    """

    kind: str = "diffuse"
    theta: float = 0.0
    noise_var: Optional[float] = None
    rank_one_scale: float = 0.5

    def __post_init__(self):
        if self.kind not in ("diffuse", "rank_one", "salt_pepper"):
            raise ContractError(f"unknown alternative kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "rank_one":
            return f"rank_one_theta{self.theta:.4g}"
        return self.kind


@dataclass
class Alternative:
    """A drawn alternative: ``X`` and its fully perturbed ``Y``, interpolated by :meth:`at`."""

    spec: AlternativeSpec
    X: np.ndarray
    Y: np.ndarray
    order: Optional[np.ndarray] = None  # row replacement order (salt-and-pepper)

    def at(self, t: float) -> np.ndarray:
        if not 0.0 <= t <= 1.0:
            raise ContractError(f"alternative strength must lie in [0, 1], got {t}")
        if t == 0.0:
            return self.X.copy()
        if self.spec.kind == "salt_pepper":
            n_t = math.floor(round(t * self.X.shape[0], 9))
            Yt = self.X.copy()
            rows = self.order[:n_t]
            Yt[rows] = self.Y[rows]
            return Yt
        return (1.0 - t) * self.X + t * self.Y


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def make_alternative(spec: AlternativeSpec, X, rng=None) -> Alternative:
    """Draw the random parts of an alternative once, for use across a whole strength grid.

    * diffuse: ``Y = X + E`` with iid ``N(0, noise_var I)`` rows;
    * rank-one: ``Y = X + scale * u v^T`` with ``u = cos(theta) a + sin(theta) c``,
      ``a = Qz`` in ``span(X)`` and ``c = (I - QQ^T) b`` orthogonal to it
      (``Q`` from the QR factorization of ``X``; ``a``, ``c``, ``v`` unit);
    * salt-and-pepper: ``Y`` as for diffuse, plus a random row order; the
      first ``floor(t n)`` rows in that order are taken from ``Y``.
    """
    X = linalg.as_matrix(X, "X")
    n, d = X.shape
    rng = np.random.default_rng(rng)
    var = spec.noise_var if spec.noise_var is not None else 1.0 / (2.0 * np.sqrt(n))
    if spec.kind in ("diffuse", "salt_pepper"):
        Y = X + rng.normal(0.0, np.sqrt(var), size=X.shape)
        order = rng.permutation(n) if spec.kind == "salt_pepper" else None
        return Alternative(spec, X, Y, order)
    Q, _ = np.linalg.qr(X)
    a = _unit(Q @ rng.standard_normal(d))
    v = _unit(rng.standard_normal(d))
    b = rng.standard_normal(n)
    c = _unit(b - Q @ (Q.T @ b))
    u = np.cos(spec.theta) * a + np.sin(spec.theta) * c
    return Alternative(spec, X, X + spec.rank_one_scale * np.outer(u, v))


def apply_alternative(spec: AlternativeSpec, X, t: float, rng=None) -> np.ndarray:
    """``Y_t`` for a single strength; draws a fresh alternative each call."""
    if not 0.0 <= t <= 1.0:
        raise ContractError(f"alternative strength must lie in [0, 1], got {t}")
    return make_alternative(spec, X, rng).at(t)


# --------------------------------------------------------------------------- bootstrap and power


def empirical_quantile(values, level: float) -> float:
    """Order statistic ``x_(ceil(level * N))`` (1-based) of ``values``."""
    x = np.sort(np.asarray(values, dtype=float))
    k = max(1, math.ceil(level * x.shape[0] - 1e-12))
    return float(x[k - 1])


def _pair_statistics(X, Y, d, kinds, opts, rng) -> dict:
    X1 = ase(sample_rdpg(X, rng), d)
    X2 = ase(sample_rdpg(Y, rng), d)
    return test_statistics(X1, X2, kinds, opts)


def _spawn(rng, n: int):
    return np.random.default_rng(rng).spawn(n)


def bootstrap_statistics(X, Y, kinds: Sequence = ALL_STATS, n_boot: int = 200, rng=None, *,
                         d: Optional[int] = None, opts: StatOptions = StatOptions()) -> dict:
    """``n_boot`` statistic values for pairs ``A ~ RDPG(X)``, ``B ~ RDPG(Y)`` (embedded in ``d`` dims).

    Each draw uses its own child generator, so draw ``i`` depends only on
    ``rng`` and ``i``.
    """
    kinds = [StatKind.parse(k) for k in kinds]
    d = X.shape[1] if d is None else d
    out = {k: np.empty(n_boot) for k in kinds}
    for i, child in enumerate(_spawn(rng, n_boot)):
        stats = _pair_statistics(X, Y, d, kinds, opts, child)
        for k in kinds:
            out[k][i] = stats[k]
    return out


def bootstrap_critical_value(X, kinds: Sequence = ALL_STATS, n_boot: int = 200, alpha: float = 0.05,
                             rng=None, *, d: Optional[int] = None, opts: StatOptions = StatOptions(),
                             return_samples: bool = False):
    """Per-statistic ``(1 - alpha)`` critical values from pairs of graphs drawn from RDPG(X)."""
    if n_boot < 1:
        raise ContractError("n_boot must be positive")
    if not 0.0 < alpha < 1.0:
        raise ContractError("alpha must lie in (0, 1)")
    X = linalg.as_matrix(X, "X")
    samples = bootstrap_statistics(X, X, kinds, n_boot, rng, d=d, opts=opts)
    crit = {k: empirical_quantile(v, 1.0 - alpha) for k, v in samples.items()}
    return (crit, samples) if return_samples else crit


def bootstrap_critical_value_from_adjacency(A1, A2, d: int, kinds: Sequence = ALL_STATS, n_boot: int = 200,
                                            alpha: float = 0.05, rng=None, *,
                                            opts: StatOptions = StatOptions()) -> dict:
    """Critical values when only the observed graphs are available.

    Each graph is embedded, ``P_hat = X_hat X_hat^T`` (clamped to ``[0, 1]``
    when sampling) drives its own bootstrap, and the larger of the two
    critical values is kept per statistic.
    """
    r1, r2 = np.random.default_rng(rng).spawn(2)
    c1 = bootstrap_critical_value(ase(A1, d), kinds, n_boot, alpha, r1, d=d, opts=opts)
    c2 = bootstrap_critical_value(ase(A2, d), kinds, n_boot, alpha, r2, d=d, opts=opts)
    return {k: max(c1[k], c2[k]) for k in c1}


@dataclass
class PowerReplicate:
    t_grid: np.ndarray
    power: dict  # StatKind -> array over t_grid
    critical: dict = field(default_factory=dict)


def power_curves(X, specs: Sequence[AlternativeSpec], t_grid, n_boot: int = 200, alpha: float = 0.05,
                 rng=None, *, kinds: Sequence = ALL_STATS, d: Optional[int] = None,
                 opts: StatOptions = StatOptions()) -> list:
    """One power-curve replicate per alternative, sharing the null bootstrap of ``X``.

    Critical values come from ``n_boot`` null pairs drawn from ``X``; then,
    for each alternative and every grid strength ``t`` (including ``t = 0``),
    ``n_boot`` fresh pairs ``A ~ RDPG(X)``, ``B ~ RDPG(Y_t)`` give the
    exceedance rate. Each alternative draws from its own child stream, so
    its curve does not depend on which other alternatives are requested.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ContractError("t_grid must be a non-empty 1-D sequence")
    if np.any((t_grid < 0) | (t_grid > 1)):
        raise ContractError("t_grid must lie within [0, 1]")
    kinds = [StatKind.parse(k) for k in kinds]
    X = linalg.as_matrix(X, "X")
    r_null, r_specs = np.random.default_rng(rng).spawn(2)
    crit = bootstrap_critical_value(X, kinds, n_boot, alpha, r_null, d=d, opts=opts)
    out = []
    for spec, r_spec in zip(specs, r_specs.spawn(len(specs))):
        r_alt, *r_grid = r_spec.spawn(1 + len(t_grid))
        alt = make_alternative(spec, X, r_alt)
        power = {k: np.empty(len(t_grid)) for k in kinds}
        for j, (t, r) in enumerate(zip(t_grid, r_grid)):
            stats = bootstrap_statistics(X, alt.at(float(t)), kinds, n_boot, r, d=d, opts=opts)
            for k in kinds:
                power[k][j] = np.mean(stats[k] > crit[k])
        out.append(PowerReplicate(t_grid, power, crit))
    return out


def power_curve(X, spec: AlternativeSpec, t_grid, n_boot: int = 200, alpha: float = 0.05, rng=None, *,
                kinds: Sequence = ALL_STATS, d: Optional[int] = None,
                opts: StatOptions = StatOptions()) -> PowerReplicate:
    """Single-alternative form of :func:`power_curves`."""
    return power_curves(X, [spec], t_grid, n_boot, alpha, rng, kinds=kinds, d=d, opts=opts)[0]


@dataclass
class PowerCurve:
    t_grid: np.ndarray
    mean: dict
    lower: dict
    upper: dict
    n_mc: int
    n_boot: Optional[int] = None
    alpha_level: Optional[float] = None


def aggregate_curves(replicates: Sequence[PowerReplicate], *, n_boot: Optional[int] = None,
                     alpha: Optional[float] = None) -> PowerCurve:
    """Pointwise mean with band ``mean +- 1.96 sd / sqrt(n_mc)`` (sample sd), clipped to ``[0, 1]``."""
    if len(replicates) < 2:
        raise ContractError("need at least two replicates")
    grid = np.asarray(replicates[0].t_grid, dtype=float)
    kinds = list(replicates[0].power)
    for rep in replicates[1:]:
        if not np.array_equal(np.asarray(rep.t_grid, dtype=float), grid):
            raise ContractError("replicates have different strength grids")
        if list(rep.power) != kinds:
            raise ContractError("replicates report different statistics")
    n_mc = len(replicates)
    mean, lower, upper = {}, {}, {}
    for k in kinds:
        P = np.vstack([rep.power[k] for rep in replicates])
        m = P.mean(axis=0)
        half = 1.96 / np.sqrt(n_mc) * P.std(axis=0, ddof=1)
        mean[k] = m
        lower[k] = np.clip(m - half, 0.0, 1.0)
        upper[k] = np.clip(m + half, 0.0, 1.0)
    return PowerCurve(grid, mean, lower, upper, n_mc, n_boot, alpha)
