"""
Manufactured-solution verification on the unit square.

Exact solution ``u = (sin x, sin y) e^{-t}``, ``p = sin(x+y) e^{-t}``, with
Dirichlet data for ``u`` and ``p`` on the sides x=1 (tag 1) and x=0 (tag 3),
and traction and flux data on y=0 (tag 2) and y=1 (tag 4).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .biot import BiotMaterial, ProblemData, build_spaces, run_transient
from .fem import error_norms
from .mesh import Mesh, refine_uniform, unit_square_mesh

__all__ = [
    "T_FINAL",
    "DIRICHLET_TAGS",
    "NEUMANN_TAGS",
    "manufactured_material",
    "exact_fields",
    "ExactSolution",
    "manufactured_data",
    "compute_order",
    "LevelErrors",
    "ConvergenceTable",
    "convergence_study",
    "mesh_sequence",
]

T_FINAL = 1e-3
DIRICHLET_TAGS = (1, 3)
NEUMANN_TAGS = (2, 4)


def manufactured_material(nu: float = 0.3, K: float = 1.0, E: float = 1000.0, c0: float = 1.0, alpha: float = 1.0) -> BiotMaterial:
    return BiotMaterial.with_conductivity(E=E, nu=nu, K=K, alpha=alpha, c0=c0)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form fields of the benchmark for one material."""

    mat: BiotMaterial

    def u(self, x, y, t):
        e = np.exp(-t)
        return np.sin(x) * e, np.sin(y) * e

    def grad_u(self, x, y, t):
        e = np.exp(-t)
        z = 0.0 * x
        return (np.cos(x) * e, z), (z, np.cos(y) * e)

    def p(self, x, y, t):
        return np.sin(x + y) * np.exp(-t)

    def grad_p(self, x, y, t):
        g = np.cos(x + y) * np.exp(-t)
        return g, g

    def xi(self, x, y, t):
        return self.mat.alpha * self.p(x, y, t) - self.mat.lam * (np.cos(x) + np.cos(y)) * np.exp(-t)

    def grad_xi(self, x, y, t):
        e = np.exp(-t)
        g = self.mat.alpha * np.cos(x + y) * e
        return g + self.mat.lam * np.sin(x) * e, g + self.mat.lam * np.sin(y) * e


def exact_fields(x, y, t, mat: BiotMaterial | None = None):
    """``(u, p, xi, grad_u, grad_p)`` of the benchmark at ``(x, y, t)``."""
    ex = ExactSolution(mat or manufactured_material())
    return ex.u(x, y, t), ex.p(x, y, t), ex.xi(x, y, t), ex.grad_u(x, y, t), ex.grad_p(x, y, t)


def manufactured_data(mat: BiotMaterial, load_time: str = "next") -> ProblemData:
    """Body force, source and boundary data reproducing the exact solution."""
    lam, mu, a, K, c0 = mat.lam, mat.mu, mat.alpha, mat.K, mat.c0
    ex = ExactSolution(mat)

    def body_force(x, y, t):
        e = np.exp(-t)
        s = a * np.cos(x + y) * e
        return (lam + 2 * mu) * np.sin(x) * e + s, (lam + 2 * mu) * np.sin(y) * e + s

    def source(x, y, t):
        e = np.exp(-t)
        return (-c0 + 2 * K) * np.sin(x + y) * e - a * (np.cos(x) + np.cos(y)) * e

    def traction(x, y, t, nx, ny):
        e = np.exp(-t)
        div = (np.cos(x) + np.cos(y)) * e
        ps = a * np.sin(x + y) * e
        hx = 2 * mu * np.cos(x) * e * nx + (lam * div - ps) * nx
        hy = 2 * mu * np.cos(y) * e * ny + (lam * div - ps) * ny
        return hx, hy

    def flux(x, y, t, nx, ny):
        # weak term <K grad p . n, psi>
        return K * np.cos(x + y) * np.exp(-t) * (nx + ny)

    return ProblemData(
        body_force=body_force,
        source=source,
        traction={tag: traction for tag in NEUMANN_TAGS},
        flux={tag: flux for tag in NEUMANN_TAGS},
        u_dirichlet={tag: ex.u for tag in DIRICHLET_TAGS},
        p_dirichlet={tag: ex.p for tag in DIRICHLET_TAGS},
        load_time=load_time,
    )


def compute_order(e_coarse: float, e_fine: float) -> float:
    """Observed order ``log2(e_coarse / e_fine)`` for one halving of h."""
    if not (e_coarse > 0 and e_fine > 0):
        raise ValueError("errors must be positive to compute an order")
    if e_coarse == e_fine:
        return 0.0
    return math.log2(e_coarse / e_fine)


@dataclass
class LevelErrors:
    elements: int
    h1_u: float
    l2_xi: float
    h1_xi: float
    l2_p: float
    h1_p: float
    h1semi_u: float = float("nan")
    h1semi_xi: float = float("nan")
    h1semi_p: float = float("nan")
    l2_recovered_p: float = float("nan")


COLUMNS = ("h1_u", "l2_xi", "h1_xi", "l2_p", "h1_p")
SEMI_COLUMNS = ("h1semi_u", "h1semi_xi", "h1semi_p")


@dataclass
class ConvergenceTable:
    """Errors per refinement level and observed orders between levels."""

    levels: list = field(default_factory=list)

    def orders(self, column: str) -> list[float]:
        vals = [getattr(lv, column) for lv in self.levels]
        return [compute_order(a, b) for a, b in zip(vals[:-1], vals[1:])]

    def column(self, column: str) -> list[float]:
        return [getattr(lv, column) for lv in self.levels]

    def to_csv(self, path: str | Path | None = None, seminorms: bool = False) -> str:
        header = ["elements"]
        cols = COLUMNS + (SEMI_COLUMNS if seminorms else ())
        for c in cols:
            header += [c, f"ord_{c}"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        orders = {c: self.orders(c) for c in cols}
        for i, lv in enumerate(self.levels):
            row = [lv.elements]
            for c in cols:
                row += [f"{getattr(lv, c):.6e}", "" if i == 0 else f"{orders[c][i - 1]:.4f}"]
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def format(self) -> str:
        lines = [f"{'elements':>9} {'H1(u)':>10} {'ord':>5} {'L2(xi)':>10} {'ord':>5} {'H1(xi)':>10} {'ord':>5} {'L2(p)':>10} {'ord':>5} {'H1(p)':>10} {'ord':>5}"]
        orders = {c: self.orders(c) for c in COLUMNS}
        for i, lv in enumerate(self.levels):
            parts = [f"{lv.elements:>9d}"]
            for c in COLUMNS:
                o = "" if i == 0 else f"{orders[c][i - 1]:.2f}"
                parts.append(f"{getattr(lv, c):>10.3e} {o:>5}")
            lines.append(" ".join(parts))
        return "\n".join(lines)


def mesh_sequence(n0: int, levels: int) -> list[Mesh]:
    meshes = [unit_square_mesh(n0)]
    for _ in range(levels - 1):
        meshes.append(refine_uniform(meshes[-1]))
    return meshes


def level_errors(mesh: Mesh, mat: BiotMaterial, algorithm: str, dt: float, T: float = T_FINAL, initial: str = "interpolate-exact", load_time: str = "next") -> LevelErrors:
    from .biot import recover_pressure

    ex = ExactSolution(mat)
    data = manufactured_data(mat, load_time)
    spaces = build_spaces(mesh)
    traj = run_transient(mesh, mat, data, dt, T, algorithm, initial=initial, u0=ex.u, p0=ex.p, spaces=spaces)
    s = traj.final
    eu = error_norms(s.u, ex.u, ex.grad_u, s.t)
    ex_ = error_norms(s.xi, ex.xi, ex.grad_xi, s.t)
    ep = error_norms(s.p, ex.p, ex.grad_p, s.t)
    prec = recover_pressure(s.xi, s.u, mat, spaces.W)
    diff = prec.values - s.p.values
    from .biot import operators

    l2_rec = math.sqrt(max(float(diff @ (operators(spaces).mass @ diff)), 0.0))
    return LevelErrors(mesh.n_triangles, eu.h1, ex_.l2, ex_.h1, ep.l2, ep.h1, eu.h1_semi, ex_.h1_semi, ep.h1_semi, l2_rec)


def convergence_study(
    algorithm: str = "coupled",
    nu: float = 0.3,
    K: float = 1.0,
    levels: int = 4,
    dt: float = 1e-5,
    n0: int = 17,
    T: float = T_FINAL,
    initial: str = "interpolate-exact",
    load_time: str = "next",
    progress=None,
    E: float = 1000.0,
    c0: float = 1.0,
    alpha: float = 1.0,
) -> ConvergenceTable:
    """Errors at ``T`` on ``levels`` uniformly refined unit-square meshes."""
    if levels < 2:
        raise ValueError("a convergence study needs at least 2 levels")
    mat = manufactured_material(nu=nu, K=K, E=E, c0=c0, alpha=alpha)
    table = ConvergenceTable()
    for mesh in mesh_sequence(n0, levels):
        table.levels.append(level_errors(mesh, mat, algorithm, dt, T, initial, load_time))
        if progress is not None:
            progress(table.levels[-1])
    return table
