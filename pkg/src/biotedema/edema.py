"""
Brain edema on a 2D slice: normal state, post-injury swelling and
parameter studies.

Units are mm, min and Pa throughout. Boundary tag 1 is the skull side
(fixed displacement, Robin absorption into the subarachnoid space), tag 2 the
ventricle wall (fixed CSF pressure, balancing normal traction). After injury
a constant fluid source acts on the triangles with region tag 1.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .biot import (
    BiotMaterial,
    BiotSpaces,
    ProblemData,
    TransientState,
    advance,
    build_spaces,
    make_solver,
    solve_steady,
    total_pressure_init,
)
from .mesh import Mesh

log = logging.getLogger(__name__)

__all__ = [
    "SKULL",
    "VENTRICLE",
    "INJURED",
    "EdemaConfig",
    "conductance",
    "edema_boundary_data",
    "run_normal_state",
    "TimeSeries",
    "TbiResult",
    "run_tbi",
    "max_icp_vs_rate",
    "SweepRow",
    "parameter_sweep",
    "max_displacement",
]

SKULL = 1
VENTRICLE = 2
INJURED = 1
ML_TO_MM3 = 1000.0


@dataclass(frozen=True)
class EdemaConfig:
    """Baseline brain-tissue parameters and run controls.

    ``q_injured`` is a source density per unit area of the injured patch
    (2D slice of unit thickness).
    """

    E: float = 9010.0  # Pa
    nu: float = 0.35
    alpha: float = 1.0
    c0: float = 4.5e-7  # 1/Pa
    kappa: float = 1.4e-9  # mm^2
    mu_f: float = 1.48e-5  # Pa min
    c_b: float = 3.0e-5  # mm / (min Pa)
    p_sas: float = 1070.0  # Pa
    p_vent: float = 1100.0  # Pa
    q_injured: float = 9.0e-3  # mm^3/min per mm^2
    dt: float = 1.0  # min
    t_max: float = 3000.0  # min
    plateau_tol: float = 1e-6
    peak_fraction: float = 0.99
    algorithm: str = "coupled"

    @classmethod
    def baseline(cls) -> "EdemaConfig":
        return cls()

    @property
    def material(self) -> BiotMaterial:
        return BiotMaterial(E=self.E, nu=self.nu, alpha=self.alpha, c0=self.c0, kappa=self.kappa, mu_f=self.mu_f)

    def replace(self, **changes) -> "EdemaConfig":
        return replace(self, **changes)


def conductance(Q0: float, p_d: float, A_SAS: float) -> float:
    """Boundary conductance ``Q0 / (p_d * A_SAS)``.

    With ``Q0`` in mm^3/min, ``p_d`` in Pa and ``A_SAS`` in mm^2 the result is
    in mm/(min Pa).
    """
    if not (Q0 > 0 and p_d > 0 and A_SAS > 0):
        raise ValueError("conductance inputs must be positive")
    return Q0 / (p_d * A_SAS)


def edema_boundary_data(config: EdemaConfig, source: bool = False) -> ProblemData:
    """Boundary conditions of the brain slice, optionally with the injury source."""
    p_vent = config.p_vent

    def ventricle_traction(x, y, t, nx, ny):
        return -p_vent * nx, -p_vent * ny

    data = ProblemData(
        u_dirichlet={SKULL: None},
        robin={SKULL: (config.c_b, config.p_sas)},
        p_dirichlet={VENTRICLE: p_vent},
        traction={VENTRICLE: ventricle_traction},
        time_independent=True,
    )
    if source:
        q = config.q_injured
        data = data.replace(source=lambda x, y, t: np.full(np.shape(x), q), source_region=INJURED)
    return data


def run_normal_state(mesh: Mesh, config: EdemaConfig, spaces: BiotSpaces | None = None) -> TransientState:
    """Steady state without injury source."""
    spaces = spaces or build_spaces(mesh)
    return solve_steady(spaces, config.material, edema_boundary_data(config))


def max_displacement(state: TransientState) -> float:
    """Largest Euclidean displacement over all P2 nodes."""
    u = state.u.node_values()
    return float(np.hypot(u[:, 0], u[:, 1]).max())


@dataclass
class TimeSeries:
    times: list = field(default_factory=list)
    max_icp: list = field(default_factory=list)
    max_disp: list = field(default_factory=list)

    def append(self, state: TransientState) -> None:
        self.times.append(float(state.t))
        self.max_icp.append(float(state.p.values.max()))
        self.max_disp.append(max_displacement(state))

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_min", "max_icp_pa", "max_disp_mm"])
        for row in zip(self.times, self.max_icp, self.max_disp):
            w.writerow([repr(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass
class TbiResult:
    series: TimeSeries
    initial: TransientState
    final: TransientState
    plateau_reached: bool

    @property
    def p_max(self) -> float:
        return self.series.max_icp[-1]

    @property
    def u_max(self) -> float:
        return self.series.max_disp[-1]

    def t_peak(self, fraction: float = 0.99) -> float:
        """First time the ICP rise reaches ``fraction`` of its plateau value."""
        icp = np.asarray(self.series.max_icp)
        rise = icp - icp[0]
        total = rise[-1]
        if total <= 0:
            return 0.0
        k = int(np.flatnonzero(rise >= fraction * total)[0])
        return self.series.times[k]


def run_tbi(mesh: Mesh, config: EdemaConfig, spaces: BiotSpaces | None = None, normal: TransientState | None = None) -> TbiResult:
    """Swelling after injury, started from the normal steady state.

    Steps until the per-step relative change of the maximum ICP drops below
    ``config.plateau_tol`` or ``config.t_max`` is reached.
    """
    if not np.any(mesh.regions == INJURED):
        raise ValueError("mesh has no injured region (region tag 1)")
    spaces = spaces or build_spaces(mesh)
    mat = config.material
    normal = normal or run_normal_state(mesh, config, spaces)
    xi0 = total_pressure_init(normal.u, normal.p, mat, spaces.Q)
    state = TransientState(0.0, normal.u, xi0, normal.p)
    data = edema_boundary_data(config, source=True)
    solver = make_solver(spaces, mat, config.dt, data, config.algorithm)
    series = TimeSeries()
    series.append(state)
    initial = state
    plateau = False
    n_max = int(math.ceil(config.t_max / config.dt - 1e-9))
    for _ in range(n_max):
        state = advance(state, solver)
        series.append(state)
        prev, cur = series.max_icp[-2], series.max_icp[-1]
        if abs(cur - prev) <= config.plateau_tol * abs(cur):
            plateau = True
            break
    if not plateau:
        log.warning("no plateau within t_max=%g min (last relative change %.2e)", config.t_max, abs(cur - prev) / abs(cur))
    return TbiResult(series, initial, state, plateau)


def max_icp_vs_rate(mesh: Mesh, config: EdemaConfig, rates, spaces: BiotSpaces | None = None) -> list[tuple[float, float]]:
    """Plateau maximum ICP for each injury source rate, sorted by rate."""
    spaces = spaces or build_spaces(mesh)
    normal = run_normal_state(mesh, config, spaces)
    out = []
    for rate in sorted(rates):
        if rate < 0:
            raise ValueError("source rates must be non-negative")
        if rate == 0:
            out.append((0.0, float(normal.p.values.max())))
            continue
        res = run_tbi(mesh, config.replace(q_injured=float(rate)), spaces, normal)
        out.append((float(rate), res.p_max))
    return out


@dataclass
class SweepRow:
    value: float
    mu: float
    inv_lambda: float
    u_max: float
    p_max: float
    t_peak: float


SWEEP_PARAMS = ("E", "nu", "kappa")


def parameter_sweep(mesh: Mesh, config: EdemaConfig, param: str, values, spaces: BiotSpaces | None = None) -> list[SweepRow]:
    """One injury run per value of ``param``, other parameters at ``config``."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"cannot sweep {param!r}; choose from {SWEEP_PARAMS}")
    spaces = spaces or build_spaces(mesh)
    rows = []
    for v in values:
        cfg = config.replace(**{param: float(v)})
        mat = cfg.material
        res = run_tbi(mesh, cfg, spaces)
        rows.append(SweepRow(float(v), mat.mu, 1.0 / mat.lam, res.u_max, res.p_max, res.t_peak(cfg.peak_fraction)))
    return rows


def sweep_to_csv(rows: list[SweepRow], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "mu", "inv_lambda", "u_max_mm", "p_max_pa", "t_peak_min"])
    for r in rows:
        w.writerow([repr(r.value), repr(r.mu), repr(r.inv_lambda), repr(r.u_max), repr(r.p_max), repr(r.t_peak)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def rates_to_csv(table, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rate", "max_icp_pa"])
    for rate, icp in table:
        w.writerow([repr(rate), repr(icp)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
