"""Experiment configuration, CSV tables and the experiment runners behind the CLI.

Every runner takes an :class:`ExperimentConfig`, returns a dict mapping a
file name to a :class:`CsvTable`, and writes those tables into
``config.out_dir`` when it is set. Outputs depend only on the config: all
randomness is derived from ``config.seed`` through index-addressed
substreams, and parallel power runs reduce in replicate order.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import duck, network
from .exceptions import ContractError, InputError
from .mads import MadsParams
from .manifold import component
from .procrustes import NormKind, ProcrustesSolution, angle_sweep, solve
from .rng import derive_rng

__all__ = [
    "EXPERIMENTS",
    "PRESETS",
    "ExperimentConfig",
    "CsvTable",
    "parse_config_text",
    "load_config_file",
    "build_config",
    "read_matrix_csv",
    "run_duck_outliers",
    "run_duck_nullspace",
    "run_angle_sweep",
    "run_power_curve",
    "power_replicates",
    "run_solve",
    "format_solution",
]

EXPERIMENTS = ("duck_outliers", "duck_nullspace", "angle_sweep", "power_curve", "solve")

PRESETS = {
    "desk": {"n": 200, "n_boot": 200, "n_mc": 20},
    # hours of CPU time even with many workers
    "full": {"n": 1000, "n_boot": 1000, "n_mc": 100},
}

ALTERNATIVES = ("diffuse", "rank_one", "salt_pepper")
SWEEP_VARIANTS = ("A", "B", "C", "D", "E", "Ctilde")


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one experiment run.

    Only the fields used by ``experiment`` matter; the rest keep their
    defaults. ``d`` defaults to ``r``. ``norm`` of ``None`` means all three
    norms where a runner supports that.
    """

    experiment: str = "solve"
    n: int = 200
    r: int = 3
    d: Optional[int] = None
    n_boot: int = 200
    n_mc: int = 20
    alpha: float = 0.05
    t_grid: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    alternatives: tuple = ("diffuse",)
    theta: float = 0.0
    norm: Optional[str] = None
    variant: str = "C"
    n_starts: int = 8
    n_seeds: int = 20
    grid_points: int = 100_000
    seed: int = 0
    out_dir: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ContractError(f"unknown experiment {self.experiment!r}")
        for name in ("n", "r", "n_boot", "n_mc", "n_seeds", "grid_points", "threads"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d is not None and self.d < 1:
            raise ContractError(f"d must be positive, got {self.d}")
        if self.n_starts < 0:
            raise ContractError(f"n_starts must be non-negative, got {self.n_starts}")
        if not 0.0 < self.alpha < 1.0:
            raise ContractError(f"alpha must lie in (0, 1), got {self.alpha}")
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or t.size == 0 or np.any((t < 0) | (t > 1)) or np.any(np.diff(t) < 0):
            raise ContractError(f"t_grid must be a sorted non-empty subset of [0, 1], got {self.t_grid}")
        for alt in self.alternatives:
            if alt not in ALTERNATIVES:
                raise ContractError(f"unknown alternative {alt!r}; choose from {', '.join(ALTERNATIVES)}")
        if self.norm is not None:
            NormKind.parse(self.norm)
        if self.variant not in SWEEP_VARIANTS:
            raise ContractError(f"unknown variant {self.variant!r}; choose from {', '.join(SWEEP_VARIANTS)}")

    @property
    def embed_dim(self) -> int:
        return self.r if self.d is None else self.d

    def norms(self) -> list[NormKind]:
        return list(NormKind) if self.norm is None else [NormKind.parse(self.norm)]

    def mads_params(self) -> MadsParams:
        return MadsParams(seed=self.seed)


# --------------------------------------------------------------------------- configuration


def _field_types() -> dict:
    return {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key: str, raw: str):
    """Convert a config string to the type of field ``key``."""
    kind = _field_types()[key]
    raw = raw.strip()
    if kind == "tuple":
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if key == "t_grid":
            return tuple(float(s) for s in items)
        return tuple(items)
    if kind == "Optional[int]":
        return None if raw.lower() in ("", "none") else int(raw)
    if kind == "Optional[str]":
        return None if raw.lower() in ("", "none", "all") else raw
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config_text(text: str, path="<config>") -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    known = _field_types()
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"expected key = value, got {line!r}", path, lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise InputError(f"unknown setting {key!r}", path, lineno)
        try:
            values[key] = _coerce(key, raw)
        except ValueError:
            raise InputError(f"cannot parse {key} = {raw!r}", path, lineno) from None
    return values


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config: {exc.strerror or exc}", path) from None
    return parse_config_text(text, path)


def build_config(experiment: str, preset: Optional[str] = None, file_values: Optional[dict] = None,
                 overrides: Optional[dict] = None) -> ExperimentConfig:
    """Defaults, then the preset, then the config file, then explicit overrides (flags win)."""
    values = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ContractError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        values.update(PRESETS[preset])
    values.update(file_values or {})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    values["experiment"] = experiment
    return ExperimentConfig(**values)


# --------------------------------------------------------------------------- CSV


def _format_cell(x) -> str:
    if isinstance(x, str):
        if any(c in x for c in ",\n\r\""):
            raise ContractError(f"CSV cell may not contain separators or quotes: {x!r}")
        return x
    # repr gives the shortest string that round-trips to the same double
    return repr(float(x))


def _parse_cell(s: str):
    try:
        return float(s)
    except ValueError:
        return s


def _same_cell(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b


@dataclass
class CsvTable:
    """Rectangular table of named columns; numeric cells are floats, the rest strings."""

    header: tuple
    rows: list = field(default_factory=list)

    def __post_init__(self):
        self.header = tuple(self.header)
        self.rows = [tuple(r) for r in self.rows]
        for r in self.rows:
            if len(r) != len(self.header):
                raise ContractError(f"row {r} has {len(r)} cells, header has {len(self.header)}")

    def column(self, name: str) -> list:
        j = self.header.index(name)
        return [r[j] for r in self.rows]

    def emit(self) -> str:
        lines = [",".join(_format_cell(h) for h in self.header)]
        lines += [",".join(_format_cell(x) for x in r) for r in self.rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str, path="<csv>") -> "CsvTable":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise InputError("empty CSV", path)
        header = tuple(lines[0].split(","))
        rows = []
        for i, line in enumerate(lines[1:], start=2):
            cells = line.split(",")
            if len(cells) != len(header):
                raise InputError(f"expected {len(header)} cells, got {len(cells)}", path, i)
            rows.append(tuple(_parse_cell(c) for c in cells))
        return cls(header, rows)

    def __eq__(self, other):
        if not isinstance(other, CsvTable):
            return NotImplemented
        if self.header != other.header or len(self.rows) != len(other.rows):
            return False
        return all(len(r) == len(q) and all(map(_same_cell, r, q)) for r, q in zip(self.rows, other.rows))

    def write(self, path) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(self.emit())
        except OSError as exc:
            raise InputError(f"cannot write CSV: {exc.strerror or exc}", path) from None
        return path

    @classmethod
    def read(cls, path) -> "CsvTable":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read CSV: {exc.strerror or exc}", path) from None
        return cls.parse(text, path)


def read_matrix_csv(path) -> np.ndarray:
    """Numeric matrix from a headerless CSV file; one row of the matrix per line.

    Blank lines are skipped. Errors name the file and the 1-based line.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read matrix: {exc.strerror or exc}", path) from None
    rows, width = [], None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = [float(c) for c in line.split(",")]
        except ValueError:
            raise InputError(f"non-numeric entry in {line.strip()!r}", path, lineno) from None
        if not all(math.isfinite(x) for x in row):
            raise InputError("non-finite entry", path, lineno)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputError(f"expected {width} entries, got {len(row)}", path, lineno)
        rows.append(row)
    if not rows:
        raise InputError("no data rows", path)
    return np.array(rows)


def _matrix_table(M: np.ndarray, header: Sequence[str]) -> CsvTable:
    return CsvTable(tuple(header), [tuple(r) for r in np.asarray(M, dtype=float)])


def _points_table(P: np.ndarray) -> CsvTable:
    # d x n point matrix -> one (x, y) row per point
    return _matrix_table(np.asarray(P).T, ("x", "y"))


def _save(config: ExperimentConfig, tables: dict) -> dict:
    if config.out_dir is not None:
        for name, table in tables.items():
            table.write(Path(config.out_dir) / name)
    return tables


# --------------------------------------------------------------------------- duck experiments


def _angle_error(W, A, C, cols=()) -> tuple[float, float]:
    if component(W) < 0:
        # a reflection has no rotation angle; report the residual only
        keep = np.setdiff1d(np.arange(A.shape[1]), list(cols))
        return math.nan, float(np.linalg.norm((A - W @ C)[:, keep]))
    e = duck.alignment_errors(W, duck.ALPHA_STAR, A, C, cols)
    return e.eps_alpha, e.eps_frobenius


def run_duck_outliers(config: ExperimentConfig) -> dict:
    """Align the duck to its outlier-corrupted rotations C, D, E under each norm.

    Tables: ``duck_errors.csv`` (variant, norm, eps_alpha, eps_F) with eps_F
    over the non-outlier points, the point sets ``duck_A.csv`` and
    ``duck_<V>.csv``, and the aligned sets ``duck_<V>_aligned_<N>.csv``
    (``W C``) as x, y columns. When the best ``W`` is a reflection it has
    no rotation angle and ``eps_alpha`` is ``nan``.
    """
    A = duck.duck_dataset()
    B = duck.rotated_duck()
    tables = {"duck_A.csv": _points_table(A)}
    errors = CsvTable(("variant", "norm", "eps_alpha", "eps_F"))
    for variant in ("C", "D", "E"):
        C = duck.make_outlier_set(variant, B)
        tables[f"duck_{variant}.csv"] = _points_table(C)
        for norm in config.norms():
            sol = solve(norm, A, C, config.mads_params(), config.n_starts)
            ea, ef = _angle_error(sol.W, A, C, duck.OUTLIER_COLUMNS)
            errors.rows.append((variant, norm.short, ea, ef))
            tables[f"duck_{variant}_aligned_{norm.short}.csv"] = _points_table(sol.W @ C)
    tables["duck_errors.csv"] = errors
    return _save(config, tables)


def _sweep_grid(points: int) -> np.ndarray:
    return np.linspace(-np.pi, np.pi, points, endpoint=False)


def _markers_rows(label: str, sweep) -> list:
    return [(label, sweep.norm.short, name, a, c) for name, (a, c) in sweep.markers.items()]


def run_duck_nullspace(config: ExperimentConfig) -> dict:
    """Null-space perturbations of the rotated duck.

    ``Ctilde`` is deterministic; ``Dtilde`` adds uniform noise and is
    repeated for ``config.n_seeds`` seeds. Tables:

    * ``nullspace_errors.csv``: variant, replicate, norm, eps_alpha, eps_F;
    * ``nullspace_medians.csv``: variant, norm, median eps_alpha over the
      replicates whose best ``W`` is a rotation, and that count;
    * ``nullspace_sweep.csv``: alpha, f_F, f_S over ``config.grid_points``
      rotation angles for ``Ctilde``;
    * ``nullspace_markers.csv``: variant, norm, marker, alpha, cost, where
      ``T`` is the norm's own minimizer and ``T_hat`` the Frobenius one.
    """
    A = duck.duck_dataset()
    B = duck.rotated_duck()
    errors = CsvTable(("variant", "replicate", "norm", "eps_alpha", "eps_F"))
    sets = [("Ctilde", 0, duck.make_nullspace_set("Ctilde", B))]
    for i in range(config.n_seeds):
        sets.append(("Dtilde", i, duck.make_nullspace_set("Dtilde", B, derive_rng(config.seed, "dtilde", i))))
    for variant, rep, C in sets:
        for norm in config.norms():
            sol = solve(norm, A, C, config.mads_params(), config.n_starts)
            errors.rows.append((variant, float(rep), norm.short, *_angle_error(sol.W, A, C)))

    medians = CsvTable(("variant", "norm", "median_eps_alpha", "rotations"))
    for variant in ("Ctilde", "Dtilde"):
        for norm in config.norms():
            vals = [r[3] for r in errors.rows if r[0] == variant and r[2] == norm.short and not math.isnan(r[3])]
            med = float(np.median(vals)) if vals else math.nan
            medians.rows.append((variant, norm.short, med, float(len(vals))))

    C = sets[0][2]
    grid = _sweep_grid(config.grid_points)
    params = config.mads_params()
    f_sweep = angle_sweep(NormKind.FROBENIUS, A, C, grid, markers=True, params=params, n_starts=config.n_starts)
    s_sweep = angle_sweep(NormKind.SPECTRAL, A, C, grid, markers=True, params=params, n_starts=config.n_starts)
    sweep = CsvTable(("alpha", "f_F", "f_S"), list(zip(grid, f_sweep.cost, s_sweep.cost)))
    markers = CsvTable(("variant", "norm", "marker", "alpha", "cost"),
                       _markers_rows("Ctilde", f_sweep) + _markers_rows("Ctilde", s_sweep))
    return _save(config, {
        "nullspace_errors.csv": errors,
        "nullspace_medians.csv": medians,
        "nullspace_sweep.csv": sweep,
        "nullspace_markers.csv": markers,
    })


def _variant_set(variant: str) -> np.ndarray:
    B = duck.rotated_duck()
    if variant == "A":
        return duck.duck_dataset()
    if variant == "B":
        return B
    if variant == "Ctilde":
        return duck.make_nullspace_set("Ctilde", B)
    return duck.make_outlier_set(variant, B)


def run_angle_sweep(config: ExperimentConfig) -> dict:
    """Cost of aligning the duck to ``config.variant`` over all planar rotations.

    One ``sweep_<variant>_<N>.csv`` (x = angle, y = cost) per norm plus
    ``sweep_<variant>_markers.csv`` with the solver markers.
    """
    A = duck.duck_dataset()
    C = _variant_set(config.variant)
    grid = _sweep_grid(config.grid_points)
    tables, marks = {}, []
    for norm in config.norms():
        sw = angle_sweep(norm, A, C, grid, markers=True, params=config.mads_params(), n_starts=config.n_starts)
        tables[f"sweep_{config.variant}_{norm.short}.csv"] = CsvTable(("x", "y"), list(zip(sw.alpha, sw.cost)))
        marks += _markers_rows(config.variant, sw)
    tables[f"sweep_{config.variant}_markers.csv"] = CsvTable(("variant", "norm", "marker", "alpha", "cost"), marks)
    return _save(config, tables)


# --------------------------------------------------------------------------- power curves


def _specs(config: ExperimentConfig) -> list:
    return [network.AlternativeSpec(kind, theta=config.theta if kind == "rank_one" else 0.0)
            for kind in config.alternatives]


def _power_replicate(config: ExperimentConfig, i: int) -> list:
    """Replicate ``i``: a fresh SBM and one power curve per alternative."""
    r_latent, r_power = derive_rng(config.seed, "replicate", i).spawn(2)
    X = network.sample_sbm_latent(config.n, config.r, r_latent)
    return network.power_curves(X, _specs(config), config.t_grid, config.n_boot, config.alpha, r_power,
                                d=config.embed_dim)


def _power_replicate_job(args):
    return _power_replicate(*args)


def power_replicates(config: ExperimentConfig) -> list:
    """All ``n_mc`` replicates in index order; ``config.threads`` worker processes."""
    jobs = [(config, i) for i in range(config.n_mc)]
    if config.threads == 1 or config.n_mc == 1:
        return [_power_replicate_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(config.threads, config.n_mc)) as pool:
        # map() yields in submission order, so the reduction below is order-fixed
        return list(pool.map(_power_replicate_job, jobs))


def run_power_curve(config: ExperimentConfig, *, return_curves: bool = False):
    """Monte Carlo power curves for every alternative in ``config.alternatives``.

    Writes ``power_<alternative>_<stat>.csv`` with columns t (strength),
    c (mean power), l and u (band) per statistic. With
    ``return_curves=True`` also returns ``{alternative label: PowerCurve}``.
    """
    reps = power_replicates(config)
    tables, curves = {}, {}
    for j, spec in enumerate(_specs(config)):
        curve = network.aggregate_curves([r[j] for r in reps], n_boot=config.n_boot, alpha=config.alpha)
        curves[spec.label] = curve
        for kind in curve.mean:
            rows = zip(curve.t_grid, curve.mean[kind], curve.lower[kind], curve.upper[kind])
            tables[f"power_{spec.label}_{kind.value}.csv"] = CsvTable(("t", "c", "l", "u"), list(rows))
    _save(config, tables)
    return (tables, curves) if return_curves else tables


# --------------------------------------------------------------------------- ad-hoc solve


def run_solve(config: ExperimentConfig, a_path, b_path) -> ProcrustesSolution:
    """Align the matrices in two CSV files (``d`` rows, ``n`` columns each)."""
    A = read_matrix_csv(a_path)
    B = read_matrix_csv(b_path)
    if A.shape != B.shape:
        raise InputError(f"shape {B.shape} does not match {A.shape} from {a_path}", b_path)
    norm = NormKind.FROBENIUS if config.norm is None else NormKind.parse(config.norm)
    return solve(norm, A, B, config.mads_params(), config.n_starts)


def format_solution(sol: ProcrustesSolution) -> str:
    """Plain-text report: ``W`` as CSV lines, then ``key: value`` lines."""
    lines = [",".join(_format_cell(x) for x in row) for row in sol.W]
    lines += [
        f"cost: {_format_cell(sol.cost)}",
        f"norm: {sol.norm.value}",
        f"method: {sol.method}",
        f"starts: {sol.starts_used}",
        f"component: {sol.component_of_best:+d}",
    ]
    if sol.W.shape == (2, 2) and sol.component_of_best > 0:
        lines.append(f"angle: {_format_cell(duck.recovered_angle(sol.W))}")
    return "\n".join(lines) + "\n"
