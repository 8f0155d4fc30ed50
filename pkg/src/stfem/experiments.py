"""Refinement sweeps over the registered examples and their table output."""
import csv
import io
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import norms
from .assembly import DofMap, assemble_system
from .exceptions import ResourceLimitError, STFemError
from .linsolve import SolverConfig, solve
from .manufactured import example
from .mesh import build_mesh
from .norms import DiscreteField, ErrorReport, convergence_order
from .vtk import write_vtk

log = logging.getLogger(__name__)

FORMATS = ("csv", "markdown", "plotdata", "vtk")
MAX_LEVEL = {1: 9, 2: 6}  # by spatial dimension; desk-scale memory guard
NORMS = ("l2T", "l2Q", "h1Q", "hnorm")
EXPECTED_SLOPE = {"l2T": 2.0, "l2Q": 2.0, "h1Q": 1.0, "hnorm": 1.0}
_REPORT_FIELD = {
    "l2T": "err_l2_terminal",
    "l2Q": "err_l2_cylinder",
    "h1Q": "err_h1_cylinder",
    "hnorm": "err_hnorm",
}


class LevelFailure(STFemError):
    def __init__(self, n, cause):
        super().__init__(f"level N={n} failed: {cause}")
        self.n = n
        self.cause = cause


@dataclass
class RunConfig:
    example: int
    l_min: int = 2
    l_max: int = 5
    solver: SolverConfig = field(default_factory=SolverConfig)
    include_hnorm: bool = False
    out_dir: Optional[Path] = None
    formats: tuple = ("csv",)

    def __post_init__(self):
        sol = example(self.example)
        if self.l_min < 1:
            raise ValueError("l_min must be at least 1")
        if self.l_max < self.l_min:
            raise ValueError("l_max must not be smaller than l_min")
        cap = MAX_LEVEL[sol.dim]
        if self.l_max > cap:
            raise ValueError(
                f"example {self.example} is capped at level {cap} (N = {2 ** cap})"
            )
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ValueError(f"unknown output formats: {sorted(bad)}")

    @property
    def levels(self):
        return [2**lvl for lvl in range(self.l_min, self.l_max + 1)]


@dataclass
class ConvergenceTable:
    reports: list
    has_hnorm: bool = False

    @property
    def norms(self):
        return NORMS if self.has_hnorm else NORMS[:3]

    def errors(self, norm):
        return [getattr(r, _REPORT_FIELD[norm]) for r in self.reports]

    def orders(self, norm):
        """Orders between consecutive rows; ``None`` for the first row."""
        e = self.errors(norm)
        return [None] + [convergence_order(a, b) for a, b in zip(e, e[1:])]

    def final_orders(self):
        return {k: self.orders(k)[-1] for k in self.norms}


# Sparse LU fill on tetrahedral space-time meshes outgrows a few GB of memory
# beyond roughly this many unknowns (N = 64 has about 254k).
LU_MAX_UNKNOWNS_3D = 150_000


def effective_solver(solver, mesh, n_free):
    """The configured solver, or GMRES + ILU(0) when a direct factorization of a
    tetrahedral system this large would not fit in memory."""
    solver = solver or SolverConfig()
    if solver.method == "lu" and mesh.dim == 2 and n_free > LU_MAX_UNKNOWNS_3D:
        log.warning(
            "N=%d: %d unknowns exceed the direct-solver limit, using GMRES+ILU(0)",
            mesh.n, n_free,
        )
        return replace(solver, method="gmres", preconditioner="ilu0")
    return solver


def solve_level(sol, n, solver=None):
    """Mesh, assemble and solve one refinement level; returns mesh, dofmap,
    free coefficients and the nodal field."""
    mesh = build_mesh(sol.geometry, n)
    dofmap = DofMap.for_solution(mesh, sol)
    system = assemble_system(mesh, dofmap, sol.coefficient, sol.f)
    x = solve(system, effective_solver(solver, mesh, dofmap.n_free))
    return mesh, dofmap, x, DiscreteField(mesh, dofmap.expand(x))


def error_report(sol, mesh, dofmap, uh, include_hnorm=False):
    l2q, h1q = norms.errors_l2_h1(uh, sol)
    hn = None
    if include_hnorm:
        hn = norms.h_norm_error(uh, sol, dofmap, sol.coefficient)
    return ErrorReport(
        n=mesh.n,
        h=1.0 / mesh.n,
        err_l2_terminal=norms.l2_error_terminal(uh, sol),
        err_l2_cylinder=l2q,
        err_h1_cylinder=h1q,
        err_hnorm=hn,
    )


def run(config):
    sol = example(config.example)
    reports = []
    last = None
    for n in config.levels:
        t0 = time.perf_counter()
        try:
            mesh, dofmap, _, uh = solve_level(sol, n, config.solver)
            reports.append(error_report(sol, mesh, dofmap, uh, config.include_hnorm))
        except MemoryError as exc:
            raise ResourceLimitError(f"level N={n} ran out of memory") from exc
        except STFemError as exc:
            raise LevelFailure(n, exc) from exc
        log.info(
            "N=%d  dofs=%d  geometric h=%.6g  %.2fs",
            n, dofmap.n_free, mesh.h, time.perf_counter() - t0,
        )
        last = (mesh, uh)
    table = ConvergenceTable(reports, config.include_hnorm)
    if config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"example{config.example}"
        for fmt in config.formats:
            if fmt == "vtk":
                emit_solution_vtk(last[0], last[1], out / f"{stem}_N{last[0].n}.vtk")
            else:
                emit_table(table, fmt, out / stem)
    return table


def _fmt(x):
    return "" if x is None else repr(float(x))


def table_csv(table):
    header = ["N", "h"]
    for k in table.norms:
        header += [f"err_{k}", f"order_{k}"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    orders = {k: table.orders(k) for k in table.norms}
    for i, r in enumerate(table.reports):
        row = [str(r.n), _fmt(r.h)]
        for k in table.norms:
            row += [_fmt(getattr(r, _REPORT_FIELD[k])), _fmt(orders[k][i])]
        w.writerow(row)
    return buf.getvalue()


_MD_TITLE = {
    "l2T": "‖(u-u_h)(·,T)‖_L2(Ω)",
    "l2Q": "‖u-u_h‖_L2(Ω_T)",
    "h1Q": "‖u-u_h‖_H1(Ω_T)",
    "hnorm": "‖u-u_h‖_h",
}


def table_markdown(table):
    head = ["h"]
    for k in table.norms:
        head += [_MD_TITLE[k], "Order"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    orders = {k: table.orders(k) for k in table.norms}
    for i, r in enumerate(table.reports):
        lvl = int(round(np.log2(r.n)))
        cells = [f"2^-{lvl}"]
        for k in table.norms:
            o = orders[k][i]
            cells += [f"{getattr(r, _REPORT_FIELD[k]):.3e}", "-" if o is None else f"{o:.3f}"]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def table_plotdata(table, norm):
    """Columns ``log10(h) log10(err) log10(ref)``; the reference line has the
    expected slope and passes through the first point."""
    h = np.array([r.h for r in table.reports])
    e = np.array(table.errors(norm))
    slope = EXPECTED_SLOPE[norm]
    ref = np.log10(e[0]) + slope * (np.log10(h) - np.log10(h[0]))
    lines = [f"# norm={norm} reference_slope={slope}", "# log10_h log10_err log10_ref"]
    for a, b, c in zip(np.log10(h), np.log10(e), ref):
        lines.append(f"{float(a)!r} {float(b)!r} {float(c)!r}")
    return "\n".join(lines) + "\n"


def emit_table(table, fmt, stem):
    """Write ``table`` next to ``stem`` (a path without suffix); returns the
    written paths."""
    if not table.reports:
        raise ValueError("cannot emit an empty table")
    stem = Path(stem)
    if fmt == "csv":
        paths = {stem.with_suffix(".csv"): table_csv(table)}
    elif fmt == "markdown":
        paths = {stem.with_suffix(".md"): table_markdown(table)}
    elif fmt == "plotdata":
        paths = {
            stem.parent / f"{stem.name}_{k}.dat": table_plotdata(table, k)
            for k in table.norms
        }
    else:
        raise ValueError(f"unknown table format {fmt!r}")
    for path, text in paths.items():
        path.write_text(text)
    return list(paths)


def emit_solution_vtk(mesh, field, path):
    write_vtk(path, mesh, {"u_h": field.values}, title="discrete solution u_h")
    return Path(path)
