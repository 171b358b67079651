"""
Command-line entry points: ``biotedema verify`` and ``biotedema edema``.

Run settings come from a flat ``key = value`` file (``#`` starts a comment)
and are overridden by explicit flags. Exit status is 0 on success, 1 for
bad flags, configuration or input errors, and 2 when a linear solve fails.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import solver
from .biot import BiotSpaces, TransientState, build_spaces, lame_from_E_nu
from .edema import (
    SWEEP_PARAMS,
    EdemaConfig,
    max_icp_vs_rate,
    parameter_sweep,
    rates_to_csv,
    run_normal_state,
    run_tbi,
    sweep_to_csv,
)
from .fem import CoefficientVector
from .mesh import Mesh, MeshError, load_mesh, synthetic_brain_mesh
from .solver import SingularMatrixError
from .verify import convergence_study

__all__ = ["RunConfig", "ConfigError", "load_config", "parse_config", "write_vtk", "write_dofs", "main"]

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Raised for unknown keys or unparsable values in a run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of the two commands, with its default."""

    # brain tissue and boundary data (mm, min, Pa)
    E: float = 9010.0
    nu: float = 0.35
    alpha: float = 1.0
    c0: float = 4.5e-7
    kappa: float = 1.4e-9
    mu_f: float = 1.48e-5
    c_b: float = 3.0e-5
    p_sas: float = 1070.0
    p_vent: float = 1100.0
    q_injured: float = 9.0e-3
    dt: float = 1.0
    t_max: float = 3000.0
    plateau_tol: float = 1e-6
    peak_fraction: float = 0.99
    algorithm: str = "coupled"
    # synthetic brain geometry
    mesh_width: float = 124.0
    mesh_height: float = 104.0
    ventricle_scale: float = 0.25
    injured_fraction: float = 0.018
    target_elements: int = 9155
    # sweeps; empty value lists select the built-in grids
    sweep_param: str = "kappa"
    sweep_values: str = ""
    rates: str = "0.00225,0.0045,0.009,0.018,0.036"
    # manufactured-solution study
    verify_algorithm: str = "coupled"
    verify_nu: float = 0.3
    verify_K: float = 1.0
    verify_E: float = 1000.0
    verify_c0: float = 1.0
    verify_alpha: float = 1.0
    verify_dt: float = 1e-5
    verify_T: float = 1e-3
    verify_levels: int = 4
    verify_n0: int = 17
    verify_initial: str = "interpolate-exact"
    verify_load_time: str = "next"
    verify_seminorms: bool = False
    # linear algebra and output
    pivoting: str = "auto"
    write_vtk: bool = True
    dump_dofs: bool = False

    def edema(self) -> EdemaConfig:
        names = {f.name for f in fields(EdemaConfig)}
        return EdemaConfig(**{k: getattr(self, k) for k in names})

    def sweep_grid(self, param: str) -> list[float]:
        if self.sweep_values.strip():
            return _float_list(self.sweep_values, "sweep_values")
        if param == "E":
            return [0.2 * self.E, self.E, 10.0 * self.E]
        if param == "nu":
            return [0.3, 0.35, 0.499]
        return [0.1 * self.kappa, self.kappa, 10.0 * self.kappa]

    def rate_list(self) -> list[float]:
        return _float_list(self.rates, "rates")


CONFIG_KEYS = tuple(f.name for f in fields(RunConfig))
_TYPES = {f.name: type(f.default) for f in fields(RunConfig)}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _float_list(text: str, key: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    try:
        if kind is bool:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError
        if kind is int:
            return int(raw)
        if kind is float:
            # float() ignores locale, so only '.' is accepted as decimal point
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None
    return raw


def parse_config(text: str, base: RunConfig | None = None, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    return replace(base or RunConfig(), **values)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), source=str(path))


def config_help() -> str:
    lines = ["configuration keys (key = value, defaults shown):"]
    for f in fields(RunConfig):
        lines.append(f"  {f.name} = {f.default!r}" if isinstance(f.default, str) else f"  {f.name} = {f.default}")
    return "\n".join(lines)


def _field_arrays(name: str, field) -> tuple[str, np.ndarray]:
    vals = field.vertex_values() if isinstance(field, CoefficientVector) else np.asarray(field, dtype=float)
    if any(c.isspace() for c in name) or not name:
        raise ValueError(f"invalid VTK field name {name!r}")
    return name, vals


def write_vtk(path: str | Path, mesh: Mesh, named_fields: dict) -> None:
    """Legacy ASCII VTK unstructured grid with vertex data.

    ``named_fields`` maps names to coefficient vectors or vertex arrays of
    shape (N,) (scalars) or (N, 2) (vectors). P2 fields keep only their vertex
    values. Numbers are written in shortest round-trip form, so reading them
    back is exact.
    """
    nv = mesh.n_vertices
    out = io.StringIO()
    out.write("# vtk DataFile Version 3.0\nbiotedema field output\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    out.write(f"POINTS {nv} double\n")
    for x, y in mesh.vertices:
        out.write(f"{float(x)!r} {float(y)!r} 0\n")
    nt = mesh.n_triangles
    out.write(f"CELLS {nt} {4 * nt}\n")
    for a, b, c in mesh.triangles:
        out.write(f"3 {a} {b} {c}\n")
    out.write(f"CELL_TYPES {nt}\n")
    out.write("5\n" * nt)
    out.write(f"CELL_DATA {nt}\nSCALARS region int 1\nLOOKUP_TABLE default\n")
    out.write("\n".join(str(int(r)) for r in mesh.regions) + "\n")
    if named_fields:
        out.write(f"POINT_DATA {nv}\n")
    for name, field in named_fields.items():
        name, vals = _field_arrays(name, field)
        if vals.shape == (nv,):
            out.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            out.write("\n".join(repr(float(v)) for v in vals) + "\n")
        elif vals.shape == (nv, 2):
            out.write(f"VECTORS {name} double\n")
            out.write("".join(f"{float(a)!r} {float(b)!r} 0\n" for a, b in vals))
        else:
            raise ValueError(f"field {name!r} has shape {vals.shape}; expected ({nv},) or ({nv}, 2)")
    Path(path).write_text(out.getvalue())


def write_dofs(path: str | Path, field: CoefficientVector) -> None:
    """Every DOF value with its node coordinates (full P2 data for vectors)."""
    space = field.space
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    vals = field.node_values()
    if space.family == "P1":
        w.writerow(["node", "x", "y", "value"])
        for i, ((x, y), v) in enumerate(zip(space.nodes, vals)):
            w.writerow([i, repr(float(x)), repr(float(y)), repr(float(v))])
    else:
        w.writerow(["node", "x", "y", "value_x", "value_y"])
        for i, ((x, y), (vx, vy)) in enumerate(zip(space.nodes, vals)):
            w.writerow([i, repr(float(x)), repr(float(y)), repr(float(vx)), repr(float(vy))])
    Path(path).write_text(buf.getvalue())


def _write_state(out: Path, stem: str, mesh: Mesh, state: TransientState, cfg: RunConfig) -> list[Path]:
    written = []
    fields_ = {"u": state.u, "xi": state.xi, "p": state.p}
    if cfg.write_vtk:
        path = out / f"{stem}.vtk"
        write_vtk(path, mesh, fields_)
        written.append(path)
    if cfg.dump_dofs:
        for name, f in fields_.items():
            path = out / f"{stem}_dofs_{name}.csv"
            write_dofs(path, f)
            written.append(path)
    return written


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    epilog = config_help()
    fmt = argparse.RawDescriptionHelpFormatter
    parser = _Parser(prog="biotedema", description="Three-field Biot solver: verification and brain-edema runs.", epilog=epilog, formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    v = sub.add_parser("verify", help="manufactured-solution convergence study", epilog=epilog, formatter_class=fmt)
    v.add_argument("--config", help="key = value run configuration file")
    v.add_argument("--algorithm", choices=("coupled", "decoupled"))
    v.add_argument("--nu", type=float)
    v.add_argument("--K", type=float)
    v.add_argument("--dt", type=float)
    v.add_argument("--levels", type=int)
    v.add_argument("--n0", type=int, help="cells per side of the coarsest mesh")
    v.add_argument("--initial", choices=("interpolate-exact", "zero-u"))
    v.add_argument("--load-time", choices=("next", "current"))
    v.add_argument("--seminorms", action="store_true", default=None, help="add H1 seminorm columns")
    v.add_argument("--out", default="convergence.csv", help="CSV output path")

    e = sub.add_parser("edema", help="brain-edema scenarios", epilog=epilog, formatter_class=fmt)
    e.add_argument("--mode", choices=("normal", "tbi", "rate-sweep", "param-sweep"), default="normal")
    e.add_argument("--mesh", default="synthetic", help="mesh file, or 'synthetic'")
    e.add_argument("--config", help="key = value run configuration file")
    e.add_argument("--param", choices=SWEEP_PARAMS, help="parameter for param-sweep")
    e.add_argument("--dump-dofs", action="store_true", default=None, help="also write every DOF value as CSV")
    e.add_argument("--out", default=".", help="output directory")
    return parser


def _verify(args, cfg: RunConfig) -> int:
    overrides = {
        "verify_algorithm": args.algorithm,
        "verify_nu": args.nu,
        "verify_K": args.K,
        "verify_dt": args.dt,
        "verify_levels": args.levels,
        "verify_n0": args.n0,
        "verify_initial": args.initial,
        "verify_load_time": args.load_time,
        "verify_seminorms": args.seminorms,
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    if cfg.verify_levels < 2:
        raise ConfigError(f"levels must be at least 2, got {cfg.verify_levels}")
    if cfg.verify_n0 < 1:
        raise ConfigError(f"n0 must be positive, got {cfg.verify_n0}")
    if not cfg.verify_dt > 0:
        raise ConfigError(f"dt must be positive, got {cfg.verify_dt}")
    lame_from_E_nu(cfg.verify_E, cfg.verify_nu)

    def progress(level):
        log.info("level %d elements: H1(u) %.3e  L2(p) %.3e", level.elements, level.h1_u, level.l2_p)

    table = convergence_study(
        cfg.verify_algorithm,
        nu=cfg.verify_nu,
        K=cfg.verify_K,
        levels=cfg.verify_levels,
        dt=cfg.verify_dt,
        n0=cfg.verify_n0,
        T=cfg.verify_T,
        initial=cfg.verify_initial,
        load_time=cfg.verify_load_time,
        progress=progress,
        E=cfg.verify_E,
        c0=cfg.verify_c0,
        alpha=cfg.verify_alpha,
    )
    out = Path(args.out)
    if out.parent != Path("."):
        out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, seminorms=cfg.verify_seminorms)
    print(table.format())
    print(f"wrote {out}")
    return 0


def _edema_mesh(source: str, cfg: RunConfig) -> Mesh:
    if source == "synthetic":
        return synthetic_brain_mesh(cfg.mesh_width, cfg.mesh_height, cfg.ventricle_scale, cfg.injured_fraction, cfg.target_elements)
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"mesh file not found: {path}")
    return load_mesh(path)


def _edema(args, cfg: RunConfig) -> int:
    if args.dump_dofs is not None:
        cfg = replace(cfg, dump_dofs=args.dump_dofs)
    param = args.param or cfg.sweep_param
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep_param must be one of {SWEEP_PARAMS}, got {param!r}")
    if cfg.algorithm not in ("coupled", "decoupled"):
        raise ConfigError(f"algorithm must be 'coupled' or 'decoupled', got {cfg.algorithm!r}")
    ecfg = cfg.edema()
    ecfg.material  # validates E, nu and friends before any meshing
    mesh = _edema_mesh(args.mesh, cfg)
    spaces: BiotSpaces = build_spaces(mesh)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if args.mode == "normal":
        state = run_normal_state(mesh, ecfg, spaces)
        written += _write_state(out, "normal", mesh, state, cfg)
        p = state.p.values
        print(f"normal state: p in [{p.min():.6f}, {p.max():.6f}] Pa")
    elif args.mode == "tbi":
        res = run_tbi(mesh, ecfg, spaces)
        path = out / "tbi_timeseries.csv"
        res.series.to_csv(path)
        written.append(path)
        written += _write_state(out, "tbi_final", mesh, res.final, cfg)
        print(f"tbi: p_max {res.p_max:.4f} Pa, u_max {res.u_max:.6f} mm, t_peak {res.t_peak(ecfg.peak_fraction):g} min, plateau {'reached' if res.plateau_reached else 'not reached'}")
    elif args.mode == "rate-sweep":
        rates = cfg.rate_list()
        if not rates:
            raise ConfigError("rates is empty")
        table = max_icp_vs_rate(mesh, ecfg, rates, spaces)
        path = out / "rates.csv"
        rates_to_csv(table, path)
        written.append(path)
        for rate, icp in table:
            print(f"rate {rate:g}: max ICP {icp:.4f} Pa")
    else:
        rows = parameter_sweep(mesh, ecfg, param, cfg.sweep_grid(param), spaces)
        path = out / f"sweep_{param}.csv"
        sweep_to_csv(rows, path)
        written.append(path)
        for r in rows:
            print(f"{param} = {r.value:g}: u_max {r.u_max:.6f} mm, p_max {r.p_max:.4f} Pa, t_peak {r.t_peak:g} min")
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        solver.set_default_pivoting(cfg.pivoting)
        if args.command == "verify":
            return _verify(args, cfg)
        return _edema(args, cfg)
    except SingularMatrixError as exc:
        print(f"biotedema: solver failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, MeshError, ValueError, OSError) as exc:
        print(f"biotedema: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
