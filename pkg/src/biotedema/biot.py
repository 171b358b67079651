"""
Three-field (displacement, total pressure, fluid pressure) Biot solver.

With the total pressure ``xi = alpha p - lambda div u`` the quasi-static Biot
system becomes a generalized Stokes problem for ``(u, xi)`` coupled to a
reaction-diffusion equation for ``p``:

    -2 mu div eps(u) + grad xi                          = f
    -div u - xi / lambda + alpha p / lambda             = 0
    ((c0 + alpha^2/lambda) p - alpha xi / lambda)_t - K lap p = Q_s

Spaces are Taylor-Hood P2/P1 for ``(u, xi)`` and P1 for ``p``; time
stepping is backward Euler, either monolithic (:func:`coupled_step`) or
split into a Stokes solve with lagged pressure followed by a diffusion solve
(:func:`decoupled_step`). All matrices are time independent and are factored
once per run.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp

from . import fem
from .fem import CoefficientVector, FeSpace, build_space, interpolate
from .mesh import Mesh
from .solver import Factorization, factorize

log = logging.getLogger(__name__)

__all__ = [
    "BiotMaterial",
    "lame_from_E_nu",
    "ProblemData",
    "BiotSpaces",
    "build_spaces",
    "TransientState",
    "BiotOperators",
    "ConstrainedSystem",
    "assemble_coupled_system",
    "assemble_coupled_rhs",
    "assemble_stokes_system",
    "assemble_diffusion_system",
    "CoupledSolver",
    "DecoupledSolver",
    "coupled_step",
    "decoupled_step",
    "total_pressure_init",
    "recover_pressure",
    "solve_steady",
    "run_transient",
    "Trajectory",
]


def lame_from_E_nu(E: float, nu: float) -> tuple[float, float]:
    """Lame constants ``(lambda, mu)`` from Young's modulus and Poisson ratio."""
    if not E > 0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if not 0.0 < nu < 0.5:
        raise ValueError(f"Poisson ratio must lie in (0, 0.5), got {nu}")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


@dataclass(frozen=True)
class BiotMaterial:
    """Poroelastic parameters; ``K = kappa / mu_f``."""

    E: float
    nu: float
    alpha: float = 1.0
    c0: float = 1.0
    kappa: float = 1.0
    mu_f: float = 1.0

    def __post_init__(self):
        lame_from_E_nu(self.E, self.nu)
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"Biot-Willis constant must lie in (0, 1], got {self.alpha}")
        if self.c0 < 0:
            raise ValueError(f"storage coefficient must be non-negative, got {self.c0}")
        if not (self.kappa > 0 and self.mu_f > 0):
            raise ValueError("permeability and fluid viscosity must be positive")

    @classmethod
    def with_conductivity(cls, E: float, nu: float, K: float, alpha: float = 1.0, c0: float = 1.0) -> "BiotMaterial":
        return cls(E=E, nu=nu, alpha=alpha, c0=c0, kappa=K, mu_f=1.0)

    @property
    def lam(self) -> float:
        return lame_from_E_nu(self.E, self.nu)[0]

    @property
    def mu(self) -> float:
        return lame_from_E_nu(self.E, self.nu)[1]

    @property
    def K(self) -> float:
        return self.kappa / self.mu_f

    @property
    def storage(self) -> float:
        """Effective storage ``c0 + alpha^2 / lambda``."""
        return self.c0 + self.alpha**2 / self.lam

    def replace(self, **changes) -> "BiotMaterial":
        return replace(self, **changes)


@dataclass
class ProblemData:
    """Loads and boundary conditions.

    Callables take arrays ``(x, y, t)``; boundary callables additionally get
    the outward normal ``(nx, ny)``. Vector-valued callables return pairs.

    Attributes
    ----------
    body_force : f(x, y, t) -> (fx, fy), or None
    source : Q_s(x, y, t), or None
    source_region : restrict the source to triangles with this region tag
    traction : tag -> h(x, y, t, nx, ny) -> (hx, hy)
    flux : tag -> g2(x, y, t, nx, ny), the weak term is ``<g2, psi>``
    robin : tag -> (c_b, p_ext), adds ``c_b <p - p_ext, psi>``
    u_dirichlet : tag -> u(x, y, t) -> (ux, uy), or None for zero
    p_dirichlet : tag -> p(x, y, t) or a constant
    load_time : ``"next"`` evaluates loads at t_{n+1}, ``"current"`` at t_n
    time_independent : loads do not depend on t and are assembled once
    """

    body_force: Callable | None = None
    source: Callable | None = None
    source_region: int | None = None
    traction: dict = field(default_factory=dict)
    flux: dict = field(default_factory=dict)
    robin: dict = field(default_factory=dict)
    u_dirichlet: dict = field(default_factory=dict)
    p_dirichlet: dict = field(default_factory=dict)
    load_time: str = "next"
    time_independent: bool = False
    _load_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def check(self, mesh: Mesh) -> None:
        tags = set(mesh.boundary_tags())
        for name in ("traction", "flux", "robin", "u_dirichlet", "p_dirichlet"):
            for tag in getattr(self, name):
                if tag not in tags:
                    raise KeyError(f"{name} refers to boundary tag {tag}, mesh has {sorted(tags)}")
        if self.load_time not in ("next", "current"):
            raise ValueError("load_time must be 'next' or 'current'")
        if self.source_region is not None and not np.any(mesh.regions == self.source_region):
            raise ValueError(f"no triangles carry region tag {self.source_region}")

    def replace(self, **changes) -> "ProblemData":
        return replace(self, _load_cache={}, **changes)


class BiotSpaces(NamedTuple):
    V: FeSpace  # displacement, P2 vector
    Q: FeSpace  # total pressure, P1
    W: FeSpace  # fluid pressure, P1

    @property
    def mesh(self) -> Mesh:
        return self.V.mesh

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.V.n_dofs, self.Q.n_dofs, self.W.n_dofs

    @property
    def n_dofs(self) -> int:
        return sum(self.sizes)

    def split(self, x: np.ndarray):
        nv, nq, _ = self.sizes
        return x[:nv], x[nv : nv + nq], x[nv + nq :]


def build_spaces(mesh: Mesh) -> BiotSpaces:
    return BiotSpaces(build_space(mesh, "P2v"), build_space(mesh, "P1"), build_space(mesh, "P1"))


@dataclass(frozen=True, eq=False)
class TransientState:
    t: float
    u: CoefficientVector
    xi: CoefficientVector
    p: CoefficientVector

    def vector(self) -> np.ndarray:
        return np.concatenate([self.u.values, self.xi.values, self.p.values])

    @classmethod
    def from_vector(cls, spaces: BiotSpaces, t: float, x: np.ndarray) -> "TransientState":
        u, xi, p = spaces.split(x)
        return cls(t, CoefficientVector(spaces.V, u.copy()), CoefficientVector(spaces.Q, xi.copy()), CoefficientVector(spaces.W, p.copy()))

    @classmethod
    def zero(cls, spaces: BiotSpaces, t: float = 0.0) -> "TransientState":
        return cls.from_vector(spaces, t, np.zeros(spaces.n_dofs))


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


class BiotOperators:
    """Parameter-free building blocks, assembled once per mesh."""

    def __init__(self, spaces: BiotSpaces):
        self.spaces = spaces
        self.strain = fem.strain_matrix(spaces.V)  # (eps(u), eps(v))
        self.div = fem.divergence_matrix(spaces.V, spaces.Q)  # (div u, phi)
        self.mass = fem.mass_matrix(spaces.W)
        self.stiff = fem.stiffness_matrix(spaces.W)
        self._robin: dict[int, sp.csr_matrix] = {}
        self._mass_fact: Factorization | None = None

    def robin_mass(self, tag: int) -> sp.csr_matrix:
        if tag not in self._robin:
            self._robin[tag] = fem.boundary_mass_matrix(self.spaces.W, tag)
        return self._robin[tag]

    def project(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``M x = rhs`` with the P1 mass matrix."""
        if self._mass_fact is None:
            self._mass_fact = factorize(self.mass)
        return self._mass_fact.solve(rhs)


_OPS_KEY = "biot_operators"


def operators(spaces: BiotSpaces) -> BiotOperators:
    cache = spaces.mesh._cache
    ops = cache.get(_OPS_KEY)
    if ops is None or any(a is not b for a, b in zip(ops.spaces, spaces)):
        ops = BiotOperators(spaces)
        cache[_OPS_KEY] = ops
    return ops


@dataclass(eq=False)
class ConstrainedSystem:
    """Matrix with Dirichlet rows and columns eliminated symmetrically.

    ``matrix`` has identity rows/columns at ``constrained``; ``full`` keeps
    the unconstrained operator for moving Dirichlet columns to the
    right-hand side.
    """

    matrix: sp.csr_matrix
    full: sp.csr_matrix
    constrained: np.ndarray

    @classmethod
    def build(cls, full: sp.csr_matrix, constrained: np.ndarray) -> "ConstrainedSystem":
        full = sp.csr_matrix(full)
        free = np.ones(full.shape[0])
        free[constrained] = 0.0
        F = sp.diags(free)
        matrix = sp.csr_matrix(F @ full @ F + sp.diags(1.0 - free))
        matrix.sum_duplicates()
        matrix.sort_indices()
        return cls(matrix, full, np.asarray(constrained, dtype=np.int64))

    def lift(self, rhs: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Apply Dirichlet ``values`` (given at ``constrained``) to ``rhs``."""
        g = np.zeros(self.full.shape[0])
        g[self.constrained] = values
        out = rhs - self.full @ g
        out[self.constrained] = values
        return out


def _u_dirichlet(spaces: BiotSpaces, data: ProblemData, t: float):
    V = spaces.V
    dofs, vals = [], []
    for tag, fn in sorted(data.u_dirichlet.items()):
        idx = V.boundary_dof_index[tag]
        nodes = idx[:, 0] // 2
        x, y = V.nodes[nodes, 0], V.nodes[nodes, 1]
        if fn is None:
            v = np.zeros(len(idx))
        else:
            ux, uy = fn(x, y, t)
            ux = np.broadcast_to(ux, x.shape)
            uy = np.broadcast_to(uy, x.shape)
            v = np.where(idx[:, 1] == 0, ux, uy)
        dofs.append(idx[:, 0])
        vals.append(v)
    return _merge(dofs, vals)


def _p_dirichlet(spaces: BiotSpaces, data: ProblemData, t: float, offset: int = 0):
    W = spaces.W
    dofs, vals = [], []
    for tag, fn in sorted(data.p_dirichlet.items()):
        idx = W.boundary_dof_index[tag][:, 0]
        x, y = W.nodes[idx, 0], W.nodes[idx, 1]
        v = np.broadcast_to(fn(x, y, t) if callable(fn) else float(fn), x.shape)
        dofs.append(idx + offset)
        vals.append(np.asarray(v, dtype=float))
    return _merge(dofs, vals)


def _merge(dofs, vals):
    if not dofs:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    d = np.concatenate(dofs)
    v = np.concatenate(vals)
    # later tags win on shared corner DOFs
    last = {int(k): i for i, k in enumerate(d)}
    keys = np.array(sorted(last), dtype=np.int64)
    return keys, v[[last[int(k)] for k in keys]]


def _coupled_matrix(spaces: BiotSpaces, mat: BiotMaterial, inv_dt: float, data: ProblemData) -> sp.csr_matrix:
    ops = operators(spaces)
    lam, a = mat.lam, mat.alpha
    Kp = mat.K * ops.stiff + inv_dt * mat.storage * ops.mass
    for tag, (cb, _) in sorted(data.robin.items()):
        Kp = Kp + cb * ops.robin_mass(tag)
    blocks = [
        [2.0 * mat.mu * ops.strain, -ops.div.T, None],
        [-ops.div, (-1.0 / lam) * ops.mass, (a / lam) * ops.mass],
        [None, (-inv_dt * a / lam) * ops.mass, Kp],
    ]
    return sp.bmat(blocks, format="csr")


def _coupled_constraints(spaces: BiotSpaces, data: ProblemData, t: float):
    du, vu = _u_dirichlet(spaces, data, t)
    nv, nq, _ = spaces.sizes
    dp, vp = _p_dirichlet(spaces, data, t, offset=nv + nq)
    return np.concatenate([du, dp]), np.concatenate([vu, vp])


def assemble_coupled_system(spaces: BiotSpaces, mat: BiotMaterial, dt: float, data: ProblemData) -> ConstrainedSystem:
    """Left-hand side of one monolithic backward-Euler step.

    Block rows are the momentum, total-pressure and mass-balance equations,
    the last one carrying its ``1/dt`` factors as written. ``dt = inf``
    drops the time-derivative terms and gives the steady operator.
    """
    if not dt > 0:
        raise ValueError("time step must be positive")
    data.check(spaces.mesh)
    inv_dt = 0.0 if math.isinf(dt) else 1.0 / dt
    full = _coupled_matrix(spaces, mat, inv_dt, data)
    dofs, _ = _coupled_constraints(spaces, data, 0.0)
    return ConstrainedSystem.build(full, dofs)


def _load_time(data: ProblemData, t_now: float, t_next: float) -> float:
    return t_next if data.load_time == "next" else t_now


def _cached(kind):
    def wrap(fn):
        def inner(spaces, data, t):
            if not data.time_independent:
                return fn(spaces, data, t)
            key = (kind, id(spaces.V), id(spaces.W))
            if key not in data._load_cache:
                data._load_cache[key] = fn(spaces, data, t)
            return data._load_cache[key].copy()

        return inner

    return wrap


@_cached("momentum")
def _momentum_load(spaces: BiotSpaces, data: ProblemData, t: float) -> np.ndarray:
    b = np.zeros(spaces.V.n_dofs)
    if data.body_force is not None:
        b += fem.load_vector(spaces.V, data.body_force, t)
    for tag, h in sorted(data.traction.items()):
        b += fem.boundary_load(spaces.V, tag, h, t)
    return b


@_cached("mass")
def _mass_balance_load(spaces: BiotSpaces, data: ProblemData, t: float) -> np.ndarray:
    b = np.zeros(spaces.W.n_dofs)
    if data.source is not None:
        b += fem.load_vector(spaces.W, data.source, t, region=data.source_region)
    for tag, g2 in sorted(data.flux.items()):
        b += fem.boundary_load(spaces.W, tag, g2, t)
    for tag, (cb, p_ext) in sorted(data.robin.items()):
        b += fem.boundary_load(spaces.W, tag, lambda x, y, t, nx, ny, v=p_ext: cb * v + 0.0 * x, t)
    return b


def assemble_coupled_rhs(state: TransientState, mat: BiotMaterial, dt: float, data: ProblemData, t_next: float, system: ConstrainedSystem | None = None) -> np.ndarray:
    """Right-hand side of the monolithic step from ``state`` to ``t_next``.

    Without ``system`` the vector is returned before Dirichlet lifting.
    """
    spaces = BiotSpaces(state.u.space, state.xi.space, state.p.space)
    ops = operators(spaces)
    tl = _load_time(data, state.t, t_next)
    inv_dt = 0.0 if math.isinf(dt) else 1.0 / dt
    bu = _momentum_load(spaces, data, tl)
    bxi = np.zeros(spaces.Q.n_dofs)
    bp = _mass_balance_load(spaces, data, tl)
    if inv_dt:
        bp += inv_dt * (ops.mass @ (mat.storage * state.p.values - (mat.alpha / mat.lam) * state.xi.values))
    rhs = np.concatenate([bu, bxi, bp])
    if system is None:
        return rhs
    _, values = _coupled_constraints(spaces, data, t_next)
    return system.lift(rhs, values)


def assemble_stokes_system(spaces: BiotSpaces, mat: BiotMaterial, data: ProblemData) -> ConstrainedSystem:
    """Generalized Stokes block over ``(u, xi)`` with displacement constraints."""
    ops = operators(spaces)
    full = sp.bmat(
        [[2.0 * mat.mu * ops.strain, -ops.div.T], [-ops.div, (-1.0 / mat.lam) * ops.mass]],
        format="csr",
    )
    dofs, _ = _u_dirichlet(spaces, data, 0.0)
    return ConstrainedSystem.build(full, dofs)


def assemble_diffusion_system(spaces: BiotSpaces, mat: BiotMaterial, dt: float, data: ProblemData) -> ConstrainedSystem:
    """Reaction-diffusion block over ``p`` with pressure constraints."""
    ops = operators(spaces)
    A = mat.K * ops.stiff + (mat.storage / dt) * ops.mass
    for tag, (cb, _) in sorted(data.robin.items()):
        A = A + cb * ops.robin_mass(tag)
    dofs, _ = _p_dirichlet(spaces, data, 0.0)
    return ConstrainedSystem.build(A, dofs)


# ---------------------------------------------------------------------------
# Time steppers
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class CoupledSolver:
    """Factored monolithic system for fixed ``(mat, dt, data)``."""

    spaces: BiotSpaces
    mat: BiotMaterial
    dt: float
    data: ProblemData
    system: ConstrainedSystem
    fact: Factorization

    @classmethod
    def build(cls, spaces, mat, dt, data) -> "CoupledSolver":
        system = assemble_coupled_system(spaces, mat, dt, data)
        return cls(spaces, mat, dt, data, system, factorize(system.matrix))


@dataclass(eq=False)
class DecoupledSolver:
    """Factored Stokes and diffusion systems for fixed ``(mat, dt, data)``."""

    spaces: BiotSpaces
    mat: BiotMaterial
    dt: float
    data: ProblemData
    stokes: ConstrainedSystem
    diffusion: ConstrainedSystem
    stokes_fact: Factorization
    diffusion_fact: Factorization

    @classmethod
    def build(cls, spaces, mat, dt, data) -> "DecoupledSolver":
        data.check(spaces.mesh)
        stokes = assemble_stokes_system(spaces, mat, data)
        diffusion = assemble_diffusion_system(spaces, mat, dt, data)
        return cls(spaces, mat, dt, data, stokes, diffusion, factorize(stokes.matrix), factorize(diffusion.matrix))


def coupled_step(state: TransientState, solver: CoupledSolver) -> TransientState:
    """Advance ``state`` by one monolithic backward-Euler step."""
    t_next = state.t + solver.dt
    rhs = assemble_coupled_rhs(state, solver.mat, solver.dt, solver.data, t_next, solver.system)
    return TransientState.from_vector(solver.spaces, t_next, solver.fact.solve(rhs))


def decoupled_step(state: TransientState, solver: DecoupledSolver) -> TransientState:
    """Stokes solve with lagged pressure, then a diffusion solve for ``p``."""
    spaces, mat, data, dt = solver.spaces, solver.mat, solver.data, solver.dt
    ops = operators(spaces)
    t_next = state.t + dt
    tl = _load_time(data, state.t, t_next)
    nv = spaces.V.n_dofs

    rhs = np.concatenate([_momentum_load(spaces, data, tl), -(mat.alpha / mat.lam) * (ops.mass @ state.p.values)])
    du, vu = _u_dirichlet(spaces, data, t_next)
    x = solver.stokes_fact.solve(solver.stokes.lift(rhs, vu))
    u_new, xi_new = x[:nv], x[nv:]

    bp = _mass_balance_load(spaces, data, tl)
    bp += ops.mass @ ((mat.storage / dt) * state.p.values + (mat.alpha / mat.lam / dt) * (xi_new - state.xi.values))
    dp, vp = _p_dirichlet(spaces, data, t_next)
    p_new = solver.diffusion_fact.solve(solver.diffusion.lift(bp, vp))
    return TransientState(
        t_next,
        CoefficientVector(spaces.V, u_new.copy()),
        CoefficientVector(spaces.Q, xi_new.copy()),
        CoefficientVector(spaces.W, p_new),
    )


def total_pressure_init(u0: CoefficientVector, p0: CoefficientVector, mat: BiotMaterial, xi_space: FeSpace | None = None) -> CoefficientVector:
    """L2 projection of ``alpha p0 - lambda div u0`` onto the P1 total-pressure space."""
    Q = xi_space or p0.space
    spaces = BiotSpaces(u0.space, Q, p0.space)
    ops = operators(spaces)
    rhs = mat.alpha * (ops.mass @ p0.values) - mat.lam * (ops.div @ u0.values)
    return CoefficientVector(Q, ops.project(rhs))


def recover_pressure(xi: CoefficientVector, u: CoefficientVector, mat: BiotMaterial, p_space: FeSpace | None = None) -> CoefficientVector:
    """L2 projection of ``(xi + lambda div u) / alpha`` onto the pressure space."""
    W = p_space or xi.space
    spaces = BiotSpaces(u.space, xi.space, W)
    ops = operators(spaces)
    rhs = (ops.mass @ xi.values + mat.lam * (ops.div @ u.values)) / mat.alpha
    return CoefficientVector(W, ops.project(rhs))


def solve_steady(spaces: BiotSpaces, mat: BiotMaterial, data: ProblemData, t: float = 0.0) -> TransientState:
    """Steady state of the coupled system (time-derivative terms removed)."""
    system = assemble_coupled_system(spaces, mat, math.inf, data)
    state = TransientState.zero(spaces, t)
    rhs = assemble_coupled_rhs(state, mat, math.inf, data, t, system)
    return TransientState.from_vector(spaces, t, factorize(system.matrix).solve(rhs))


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    states: list
    n_steps: int

    @property
    def final(self) -> TransientState:
        return self.states[-1]


def make_solver(spaces, mat, dt, data, algorithm: str):
    if algorithm == "coupled":
        return CoupledSolver.build(spaces, mat, dt, data)
    if algorithm == "decoupled":
        return DecoupledSolver.build(spaces, mat, dt, data)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected 'coupled' or 'decoupled'")


def advance(state: TransientState, solver) -> TransientState:
    if isinstance(solver, CoupledSolver):
        return coupled_step(state, solver)
    return decoupled_step(state, solver)


def initial_state(spaces: BiotSpaces, mat: BiotMaterial, initial: str = "interpolate-exact", u0=None, p0=None, state0=None, t0: float = 0.0) -> TransientState:
    """Initial ``(u, xi, p)``; ``xi`` always comes from the L2 projection."""
    if initial == "custom":
        if state0 is None:
            raise ValueError("initial='custom' needs state0")
        return state0
    if p0 is None:
        raise ValueError(f"initial={initial!r} needs an initial pressure p0")
    p = interpolate(spaces.W, p0, t0) if callable(p0) else p0
    if initial == "interpolate-exact":
        if u0 is None:
            raise ValueError("initial='interpolate-exact' needs u0")
        u = interpolate(spaces.V, u0, t0) if callable(u0) else u0
    elif initial == "zero-u":
        u = spaces.V.zero()
    else:
        raise ValueError(f"unknown initial option {initial!r}")
    xi = total_pressure_init(u, p, mat, spaces.Q)
    return TransientState(t0, u, xi, p)


def n_steps_for(T: float, dt: float) -> int:
    m = int(round(T / dt))
    if abs(m * dt - T) > 1e-12 * max(abs(T), 1e-300):
        log.warning("final time %g is not a multiple of dt=%g; running %d steps to t=%g", T, dt, m, m * dt)
    return m


def run_transient(
    mesh: Mesh,
    mat: BiotMaterial,
    data: ProblemData,
    dt: float,
    T: float,
    algorithm: str = "coupled",
    initial: str = "interpolate-exact",
    u0=None,
    p0=None,
    state0: TransientState | None = None,
    keep_all: bool = False,
    spaces: BiotSpaces | None = None,
) -> Trajectory:
    """Backward-Euler run from ``t = 0`` (or ``state0.t``) to ``T``.

    The run takes ``round(T / dt)`` steps; system matrices are factored once.
    """
    spaces = spaces or (BiotSpaces(state0.u.space, state0.xi.space, state0.p.space) if state0 is not None else build_spaces(mesh))
    t0 = state0.t if state0 is not None else 0.0
    state = initial_state(spaces, mat, initial, u0, p0, state0, t0)
    m = n_steps_for(T - t0, dt)
    states = [state]
    if m == 0:
        return Trajectory(states, 0)
    solver = make_solver(spaces, mat, dt, data, algorithm)
    for _ in range(m):
        state = advance(state, solver)
        if keep_all:
            states.append(state)
    if not keep_all:
        states.append(state)
    return Trajectory(states, m)
