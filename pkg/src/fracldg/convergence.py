"""Manufactured-solution solves and mesh-refinement convergence studies."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .basis import reference_basis
from .ldg import FluxVariant, assemble_ldg, assemble_spatial_operator
from .manufactured import ManufacturedProblem
from .mesh import Mesh, disk_mesh, load_mesh
from .riesz import QuadratureOrders, assemble_riesz_gram
from .timestep import ConfigError, ShiftedSystem, SolverConfig, SolverError, run

log = logging.getLogger(__name__)

CSV_COLUMNS = ("s", "k", "flux", "theta", "h", "K", "dofs", "tau", "l2_error", "rate")

# refinement level -> square divisions of the disk generator; h is about
# 0.60, 0.33, 0.15, 0.099, 0.075
LEVEL_DIVISIONS = (4, 8, 18, 28, 36)


class StudyError(RuntimeError):
    """A solve inside a convergence study failed; the message names the configuration."""


def rate(e1: float, e2: float, h1: float, h2: float) -> float:
    """Observed order ``ln(e1 / e2) / ln(h1 / h2)`` between two meshes."""
    for name, v in (("e1", e1), ("e2", e2), ("h1", h1), ("h2", h2)):
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{name} = {v!r} must be positive and finite")
    if h1 == h2:
        raise ValueError("h1 and h2 must differ")
    return math.log(e1 / e2) / math.log(h1 / h2)


def level_mesh(level: int) -> Mesh:
    if not 0 <= level < len(LEVEL_DIVISIONS):
        raise ConfigError(f"mesh level must lie in 0..{len(LEVEL_DIVISIONS) - 1}, got {level}")
    return disk_mesh(LEVEL_DIVISIONS[level])


# -- single solve ---------------------------------------------------------------

@dataclass
class SolveResult:
    s: float
    k: int
    flux: str
    theta: float
    h: float
    K: int
    dofs: int
    tau: float
    l2_error: float
    u: np.ndarray = field(repr=False)
    seconds: float = 0.0


def solve_manufactured(mesh: Mesh, config: SolverConfig, p: float,
                       orders: QuadratureOrders | None = None, threads: int = 1,
                       cache_dir=None) -> SolveResult:
    """Run the manufactured problem with exponent ``p`` to ``config.T``; report the L2 error."""
    t0 = time.perf_counter()
    basis = reference_basis(config.k)
    orders = orders or QuadratureOrders.default(config.k)
    ops = assemble_ldg(mesh, basis, config.flux, config.theta)
    S = assemble_riesz_gram(mesh, basis, config.s, orders, threads=threads, cache_dir=cache_dir)
    A = assemble_spatial_operator(ops.G, ops.M, S, ops.P, dense=config.linear_solver != "cg")
    system = ShiftedSystem(ops.M, A, config)
    man = ManufacturedProblem(p, config.s)
    state = run(config, man.problem(mesh, basis), system)
    err = man.error(state.u, mesh, basis, state.t)
    return SolveResult(config.s, config.k, config.flux.value, config.theta, mesh.h,
                       mesh.n_triangles, ops.n, config.tau, err, state.u,
                       time.perf_counter() - t0)


# -- studies -----------------------------------------------------------------------

@dataclass(frozen=True)
class StudyConfig:
    s_values: tuple[float, ...]
    k: int = 1
    flux: str = "minus"
    levels: tuple[int, ...] = (0, 1, 2)
    divisions: tuple[int, ...] | None = None
    mesh_paths: tuple[str, ...] | None = None
    p: float = 6.0
    theta: float = 5.0
    tau: float = 2.5e-4
    T: float = 1.0
    quad_order: int | None = None
    rtol: float = 1e-12
    linear_solver: str = "modal"
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "flux", FluxVariant.parse(self.flux).value)
        if not self.s_values:
            raise ConfigError("at least one s is required")
        if self.p < 0:
            raise ConfigError("p must be nonnegative")
        if self.quad_order is not None and self.quad_order < 2:
            raise ConfigError("quadrature order must be at least 2")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        meshes = self.mesh_paths or self.divisions or self.levels
        if len(meshes) < 2:
            raise ConfigError("a convergence study needs at least two meshes")
        if len(set(meshes)) != len(meshes):
            raise ConfigError(f"mesh levels must be distinct, got {list(meshes)}")
        for s in self.s_values:
            self.solver_config(s)

    def solver_config(self, s: float) -> SolverConfig:
        return SolverConfig(s=s, k=self.k, flux=self.flux, theta=self.theta, tau=self.tau,
                            T=self.T, rtol=self.rtol, linear_solver=self.linear_solver)

    def orders(self) -> QuadratureOrders:
        return QuadratureOrders.default(self.k, self.quad_order)

    def meshes(self) -> list[Mesh]:
        if self.mesh_paths:
            return [load_mesh(Path(p)) for p in self.mesh_paths]
        if self.divisions:
            return [disk_mesh(n) for n in self.divisions]
        return [level_mesh(lv) for lv in self.levels]

    def metadata(self) -> dict:
        d = asdict(self)
        d["quad_orders"] = self.orders().key()
        d["version"] = __version__
        return d

    @classmethod
    def from_metadata(cls, meta: dict) -> "StudyConfig":
        keys = cls.__dataclass_fields__.keys()
        kw = {k: v for k, v in meta.items() if k in keys}
        for k in ("s_values", "levels", "divisions", "mesh_paths"):
            if kw.get(k) is not None:
                kw[k] = tuple(kw[k])
        return cls(**kw)


@dataclass(frozen=True)
class ReportRow:
    s: float
    k: int
    flux: str
    theta: float
    h: float
    K: int
    dofs: int
    tau: float
    l2_error: float
    rate: float | None = None


@dataclass
class ConvergenceReport:
    rows: list[ReportRow]
    metadata: dict = field(default_factory=dict)

    def rates(self, s: float) -> list[float]:
        return [r.rate for r in self.rows if r.s == s and r.rate is not None]

    def errors(self, s: float) -> list[float]:
        return [r.l2_error for r in self.rows if r.s == s]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, metadata: dict | None = None) -> "ConvergenceReport":
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        conv = (float, int, str, float, float, int, int, float, float, float)
        rows = []
        for rec in reader:
            if not rec:
                continue
            vals = [None if (c is float and v == "" and name == "rate") else c(v)
                    for c, v, name in zip(conv, rec, CSV_COLUMNS)]
            rows.append(ReportRow(*vals))
        return cls(rows, dict(metadata or {}))

    def write(self, path) -> Path:
        """Write the CSV and a ``.meta.json`` sidecar holding the metadata."""
        path = Path(path)
        path.write_text(self.to_csv())
        meta_path = path.with_name(path.name + ".meta.json")
        meta_path.write_text(json.dumps(self.metadata, indent=2, sort_keys=True))
        return path

    @classmethod
    def read(cls, path) -> "ConvergenceReport":
        path = Path(path)
        meta_path = path.with_name(path.name + ".meta.json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        return cls.from_csv(path.read_text(), meta)

    def table(self) -> str:
        lines = [f"{'s':>5} {'k':>2} {'flux':>5} {'h':>9} {'K':>6} {'dofs':>6} {'L2 error':>12} {'rate':>8}"]
        for r in self.rows:
            rt = "" if r.rate is None else f"{r.rate:8.4f}"
            lines.append(f"{r.s:5.2f} {r.k:2d} {r.flux:>5} {r.h:9.5f} {r.K:6d} {r.dofs:6d} "
                         f"{r.l2_error:12.4e} {rt:>8}")
        return "\n".join(lines)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def run_convergence(study: StudyConfig, cache_dir=None) -> ConvergenceReport:
    """One solve per ``(s, mesh)``; rows ordered by ``s`` then by mesh."""
    meshes = study.meshes()
    orders = study.orders()
    rows: list[ReportRow] = []
    for s in study.s_values:
        cfg = study.solver_config(s)
        prev = None
        for i, mesh in enumerate(meshes):
            try:
                res = solve_manufactured(mesh, cfg, study.p, orders, study.threads, cache_dir)
            except SolverError as exc:
                raise StudyError(f"solve failed for s={s}, mesh #{i} (h={mesh.h:.4f}, "
                                 f"K={mesh.n_triangles}), k={study.k}, flux={study.flux}, "
                                 f"tau={study.tau}: {exc}") from exc
            r = None if prev is None else rate(prev.l2_error, res.l2_error, prev.h, res.h)
            log.info("s=%g h=%.4f K=%d error=%.4e rate=%s (%.1fs)", s, res.h, res.K,
                     res.l2_error, r, res.seconds)
            row = ReportRow(float(s), study.k, study.flux, study.theta, res.h, res.K, res.dofs,
                            study.tau, res.l2_error, r)
            rows.append(row)
            prev = row
    return ConvergenceReport(rows, study.metadata())


def parse_list(text: str, kind=float) -> tuple:
    try:
        return tuple(kind(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse list {text!r}: {exc}") from None


__all__: Sequence[str] = (
    "CSV_COLUMNS", "LEVEL_DIVISIONS", "ConvergenceReport", "ReportRow", "SolveResult",
    "StudyConfig", "StudyError", "level_mesh", "parse_list", "rate", "run_convergence",
    "solve_manufactured",
)
