"""
Lagrange finite elements on triangles: quadrature, basis functions, spaces,
interpolation, element-level forms and error norms.

Two families are provided, continuous P1 scalars (``"P1"``) and continuous
P2 two-component vectors (``"P2v"``). DOFs are numbered vertices first, in
mesh order, then edge midpoints in sorted vertex-pair order; vector
components are interleaved per node (``2 * node + component``).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .mesh import Mesh
from .solver import assemble_add

__all__ = [
    "QuadratureRule",
    "quadrature_rule",
    "edge_gauss",
    "FeSpace",
    "build_space",
    "CoefficientVector",
    "interpolate",
    "error_norms",
    "ErrorNorms",
    "ElementGeometry",
    "p1_basis",
    "p2_basis",
    "p2_basis_grads",
]


class QuadratureRule(NamedTuple):
    """Rule on the reference triangle (0,0), (1,0), (0,1).

    ``points`` are barycentric coordinates (n, 3); ``weights`` sum to 1/2.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def xy(self) -> np.ndarray:
        """Reference coordinates (xi, eta) of the points."""
        return self.points[:, 1:]


def _orbit3(a: float) -> list[tuple[float, float, float]]:
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def _orbit6(a: float, b: float) -> list[tuple[float, float, float]]:
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _rule(groups) -> tuple[np.ndarray, np.ndarray]:
    pts, wts = [], []
    for w, orbit in groups:
        pts += orbit
        wts += [w] * len(orbit)
    return np.array(pts), 0.5 * np.array(wts)


@lru_cache(maxsize=None)
def quadrature_rule(degree: int) -> QuadratureRule:
    """Symmetric triangle rule exact for polynomials of total ``degree``.

    Degrees 1, 2, 4, 5 and 6 are Dunavant rules; degree 3 uses the
    positive-weight six-point Strang-Fix rule.
    """
    if degree == 1:
        pts, wts = _rule([(1.0, [(1 / 3, 1 / 3, 1 / 3)])])
    elif degree == 2:
        pts, wts = _rule([(1 / 3, _orbit3(1 / 6))])
    elif degree == 3:
        pts, wts = _rule(
            [(1 / 6, _orbit6(0.659027622374092, 0.231933368553031))]
        )
    elif degree == 4:
        pts, wts = _rule(
            [
                (0.223381589678011, _orbit3(0.445948490915965)),
                (0.109951743655322, _orbit3(0.091576213509771)),
            ]
        )
    elif degree == 5:
        pts, wts = _rule(
            [
                (0.225, [(1 / 3, 1 / 3, 1 / 3)]),
                (0.132394152788506, _orbit3(0.470142064105115)),
                (0.125939180544827, _orbit3(0.101286507323456)),
            ]
        )
    elif degree == 6:
        pts, wts = _rule(
            [
                (0.116786275726379, _orbit3(0.249286745170910)),
                (0.050844906370207, _orbit3(0.063089014491502)),
                (0.082851075618374, _orbit6(0.053145049844817, 0.310352451033784)),
            ]
        )
    else:
        raise ValueError(f"no triangle quadrature rule of degree {degree} (supported: 1-6)")
    return QuadratureRule(pts, wts, degree)


@lru_cache(maxsize=None)
def edge_gauss(n: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points in [0, 1] and weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


# ---------------------------------------------------------------------------
# Reference basis functions
# ---------------------------------------------------------------------------

P1_GRADS = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
# local P2 edge nodes follow Mesh.triangle_edges: (0,1), (1,2), (2,0)
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def p1_basis(xy: np.ndarray) -> np.ndarray:
    """P1 basis values at reference points, shape (n, 3)."""
    xy = np.atleast_2d(xy)
    return np.column_stack([1.0 - xy[:, 0] - xy[:, 1], xy[:, 0], xy[:, 1]])


def p2_basis(xy: np.ndarray) -> np.ndarray:
    """P2 basis values at reference points, shape (n, 6)."""
    L = p1_basis(xy)
    vert = L * (2.0 * L - 1.0)
    edge = np.column_stack([4.0 * L[:, i] * L[:, j] for i, j in LOCAL_EDGES])
    return np.hstack([vert, edge])


def p2_basis_grads(xy: np.ndarray) -> np.ndarray:
    """Reference gradients of the P2 basis, shape (n, 6, 2)."""
    L = p1_basis(xy)
    out = np.empty((L.shape[0], 6, 2))
    for i in range(3):
        out[:, i, :] = (4.0 * L[:, i] - 1.0)[:, None] * P1_GRADS[i]
    for k, (i, j) in enumerate(LOCAL_EDGES):
        out[:, 3 + k, :] = 4.0 * (L[:, i, None] * P1_GRADS[j] + L[:, j, None] * P1_GRADS[i])
    return out


class ElementGeometry:
    """Affine maps of all triangles of a mesh (cached per mesh)."""

    def __new__(cls, mesh: Mesh):
        geo = mesh._cache.get("geometry")
        if geo is None:
            geo = super().__new__(cls)
            geo._setup(mesh)
            mesh._cache["geometry"] = geo
        return geo

    def _setup(self, mesh: Mesh):
        p = mesh.vertices[mesh.triangles]
        self.origin = p[:, 0]
        J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (M, 2, 2), columns are edge vectors
        self.jac = J
        self.det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        inv = np.empty_like(J)
        inv[:, 0, 0] = J[:, 1, 1]
        inv[:, 1, 1] = J[:, 0, 0]
        inv[:, 0, 1] = -J[:, 0, 1]
        inv[:, 1, 0] = -J[:, 1, 0]
        self.inv = inv / self.det[:, None, None]

    def map(self, xy: np.ndarray) -> np.ndarray:
        """Physical coordinates of reference points, shape (M, n, 2)."""
        xy = np.atleast_2d(xy)
        key = xy.tobytes()
        cache = self.__dict__.setdefault("_mapped", {})
        if key not in cache:
            X = self.origin[:, None, :] + np.einsum("mij,nj->mni", self.jac, xy)
            X.setflags(write=False)
            cache[key] = X
        return cache[key]

    def push_grads(self, ref_grads: np.ndarray) -> np.ndarray:
        """Physical gradients from reference gradients.

        ``ref_grads`` has shape (..., 2); returns shape (M, ..., 2).
        """
        return np.einsum("...j,mji->m...i", ref_grads, self.inv)


# ---------------------------------------------------------------------------
# Spaces and coefficient vectors
# ---------------------------------------------------------------------------

FAMILIES = ("P1", "P2v")


@dataclass(frozen=True, eq=False)
class FeSpace:
    """Lagrange space over a mesh.

    Attributes
    ----------
    mesh : Mesh
    family : str
        ``"P1"`` (scalar) or ``"P2v"`` (two-component quadratic vector).
    dof_map : (M, n_local) int array
    n_dofs : int
    nodes : (n_nodes, 2) coordinates of the Lagrange nodes
    node_map : (M, 3 or 6) node indices per triangle
    boundary_dof_index : dict mapping boundary tag -> (k, 2) array of (dof, component)
    """

    mesh: Mesh
    family: str
    dof_map: np.ndarray
    n_dofs: int
    nodes: np.ndarray
    node_map: np.ndarray
    boundary_dof_index: dict

    @property
    def n_components(self) -> int:
        return 2 if self.family == "P2v" else 1

    @property
    def degree(self) -> int:
        return 2 if self.family == "P2v" else 1

    def boundary_dofs(self, tags) -> np.ndarray:
        """Sorted unique DOFs lying on any of the given boundary tags."""
        if isinstance(tags, (int, np.integer)):
            tags = [tags]
        parts = [self.boundary_dof_index[int(t)][:, 0] for t in tags if int(t) in self.boundary_dof_index]
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(parts))

    def zero(self) -> "CoefficientVector":
        return CoefficientVector(self, np.zeros(self.n_dofs))


def build_space(mesh: Mesh, family: str) -> FeSpace:
    """Build a P1 scalar or P2 vector Lagrange space on ``mesh``."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    nv = mesh.n_vertices
    bdofs = {}
    if family == "P1":
        node_map = mesh.triangles.copy()
        nodes = mesh.vertices
        dof_map = node_map
        n_dofs = nv
        for tag in mesh.boundary_tags():
            be = mesh.boundary_edges[mesh.boundary_edges[:, 2] == tag]
            v = np.unique(be[:, :2])
            bdofs[tag] = np.column_stack([v, np.zeros_like(v)])
    else:
        edges = mesh.edges
        node_map = np.hstack([mesh.triangles, mesh.triangle_edges + nv])
        nodes = np.vstack([mesh.vertices, 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])])
        n_nodes = nv + len(edges)
        dof_map = np.empty((mesh.n_triangles, 12), dtype=np.int64)
        dof_map[:, 0::2] = 2 * node_map
        dof_map[:, 1::2] = 2 * node_map + 1
        n_dofs = 2 * n_nodes
        for tag in mesh.boundary_tags():
            be = mesh.boundary_edges[mesh.boundary_edges[:, 2] == tag]
            nd = np.unique(np.concatenate([be[:, :2].ravel(), nv + mesh.boundary_edge_ids(tag)]))
            dofs = np.column_stack([2 * nd, 2 * nd + 1]).ravel()
            comps = np.tile([0, 1], len(nd))
            bdofs[tag] = np.column_stack([dofs, comps])
    return FeSpace(mesh, family, dof_map, int(n_dofs), nodes, node_map, bdofs)


@dataclass(eq=False)
class CoefficientVector:
    """Discrete field: DOF values of a function in ``space``."""

    space: FeSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.n_dofs,):
            raise ValueError(f"expected {self.space.n_dofs} values, got shape {self.values.shape}")

    def copy(self) -> "CoefficientVector":
        return CoefficientVector(self.space, self.values.copy())

    def vertex_values(self) -> np.ndarray:
        """Values at mesh vertices, (N,) for scalars and (N, 2) for vectors."""
        nv = self.space.mesh.n_vertices
        if self.space.family == "P1":
            return self.values[:nv].copy()
        return self.values[: 2 * nv].reshape(nv, 2).copy()

    def node_values(self) -> np.ndarray:
        if self.space.family == "P1":
            return self.values.copy()
        return self.values.reshape(-1, 2).copy()


def _eval_vector(f, x, y, t):
    fx, fy = f(x, y, t)
    return np.broadcast_to(fx, np.shape(x)), np.broadcast_to(fy, np.shape(x))


def interpolate(space: FeSpace, f: Callable, t: float = 0.0) -> CoefficientVector:
    """Nodal interpolant of ``f(x, y, t)``.

    For ``P2v`` spaces ``f`` returns a pair ``(fx, fy)``.
    """
    x, y = space.nodes[:, 0], space.nodes[:, 1]
    if space.family == "P1":
        vals = np.broadcast_to(np.asarray(f(x, y, t), dtype=float), x.shape).copy()
    else:
        fx, fy = _eval_vector(f, x, y, t)
        vals = np.column_stack([fx, fy]).ravel()
    return CoefficientVector(space, vals)


# ---------------------------------------------------------------------------
# Evaluation at quadrature points
# ---------------------------------------------------------------------------


def basis_at(space: FeSpace, xy: np.ndarray):
    """Reference basis values (n, nb) and physical gradients (M, n, nb, 2)."""
    geo = ElementGeometry(space.mesh)
    if space.family == "P1":
        vals = p1_basis(xy)
        ref = np.broadcast_to(P1_GRADS, (len(vals), 3, 2))
    else:
        vals = p2_basis(xy)
        ref = p2_basis_grads(xy)
    return vals, geo.push_grads(ref), geo


def evaluate(coeffs: CoefficientVector, xy: np.ndarray):
    """Field values and gradients at reference points of every element.

    Returns ``(val, grad)``; scalar: (M, n) and (M, n, 2); vector: (M, n, 2)
    and (M, n, 2, 2) with ``grad[..., i, j] = d u_i / d x_j``.
    """
    space = coeffs.space
    vals, grads, _ = basis_at(space, xy)
    local = coeffs.values[space.node_map] if space.family == "P1" else coeffs.values.reshape(-1, 2)[space.node_map]
    if space.family == "P1":
        return np.einsum("nb,mb->mn", vals, local), np.einsum("mnbi,mb->mni", grads, local)
    return np.einsum("nb,mbc->mnc", vals, local), np.einsum("mnbj,mbc->mncj", grads, local)


class ErrorNorms(NamedTuple):
    l2: float
    h1: float
    h1_semi: float


def error_norms(coeffs: CoefficientVector, exact: Callable, exact_grad: Callable, t: float = 0.0, degree: int = 6) -> ErrorNorms:
    """L2, full H1 and H1-seminorm errors against an analytic field.

    ``exact(x, y, t)`` returns a scalar array or a pair ``(ux, uy)``;
    ``exact_grad`` returns ``(dx, dy)`` for scalars and
    ``((dux_dx, dux_dy), (duy_dx, duy_dy))`` for vectors.
    """
    rule = quadrature_rule(degree)
    space = coeffs.space
    val, grad = evaluate(coeffs, rule.xy)
    geo = ElementGeometry(space.mesh)
    X = geo.map(rule.xy)
    x, y = X[..., 0], X[..., 1]
    w = np.abs(geo.det)[:, None] * rule.weights[None, :]
    if space.family == "P1":
        ev = np.broadcast_to(exact(x, y, t), x.shape)
        gx, gy = exact_grad(x, y, t)
        e0 = (val - ev) ** 2
        e1 = (grad[..., 0] - gx) ** 2 + (grad[..., 1] - gy) ** 2
    else:
        ux, uy = _eval_vector(exact, x, y, t)
        (a, b), (c, d) = exact_grad(x, y, t)
        e0 = (val[..., 0] - ux) ** 2 + (val[..., 1] - uy) ** 2
        e1 = (
            (grad[..., 0, 0] - a) ** 2
            + (grad[..., 0, 1] - b) ** 2
            + (grad[..., 1, 0] - c) ** 2
            + (grad[..., 1, 1] - d) ** 2
        )
    l2sq = float((w * e0).sum())
    semi_sq = float((w * e1).sum())
    return ErrorNorms(np.sqrt(l2sq), np.sqrt(l2sq + semi_sq), np.sqrt(semi_sq))


# ---------------------------------------------------------------------------
# Element forms (assembled through solver.assemble_add)
# ---------------------------------------------------------------------------


def _scatter(rows_map, cols_map, local, shape):
    nr, nc = rows_map.shape[1], cols_map.shape[1]
    rows = np.repeat(rows_map, nc, axis=1).ravel()
    cols = np.tile(cols_map, (1, nr)).ravel()
    return assemble_add(rows, cols, local.ravel(), shape)


def _element_mask(space: FeSpace, region: int | None):
    if region is None:
        return slice(None)
    return space.mesh.regions == region


def mass_matrix(space: FeSpace, coefficient: float = 1.0, degree: int = 4):
    """Scalar P1 mass matrix ``coefficient * (phi_j, phi_i)``."""
    if space.family != "P1":
        raise ValueError("mass_matrix expects a P1 space")
    rule = quadrature_rule(degree)
    vals = p1_basis(rule.xy)
    geo = ElementGeometry(space.mesh)
    ref = np.einsum("n,ni,nj->ij", rule.weights, vals, vals)
    local = coefficient * np.abs(geo.det)[:, None, None] * ref[None]
    return _scatter(space.dof_map, space.dof_map, local, (space.n_dofs, space.n_dofs))


def stiffness_matrix(space: FeSpace, coefficient: float = 1.0):
    """Scalar P1 stiffness ``coefficient * (grad phi_j, grad phi_i)``."""
    if space.family != "P1":
        raise ValueError("stiffness_matrix expects a P1 space")
    geo = ElementGeometry(space.mesh)
    g = geo.push_grads(P1_GRADS)  # (M, 3, 2)
    local = coefficient * 0.5 * np.abs(geo.det)[:, None, None] * np.einsum("mik,mjk->mij", g, g)
    return _scatter(space.dof_map, space.dof_map, local, (space.n_dofs, space.n_dofs))


def strain_matrix(space: FeSpace, coefficient: float = 1.0, degree: int = 4):
    """Vector P2 form ``coefficient * (eps(u), eps(v))``."""
    if space.family != "P2v":
        raise ValueError("strain_matrix expects a P2v space")
    rule = quadrature_rule(degree)
    geo = ElementGeometry(space.mesh)
    G = geo.push_grads(p2_basis_grads(rule.xy))  # (M, n, 6, 2)
    w = np.abs(geo.det)[:, None] * rule.weights[None, :]
    # (eps(phi_a e_c), eps(phi_b e_d)) = 1/2 (delta_cd grad a . grad b + d_d a d_c b)
    dot = np.einsum("mn,mnak,mnbk->mab", w, G, G)
    cross = np.einsum("mn,mnad,mnbc->macbd", w, G, G)  # d_d phi_a * d_c phi_b, indexed [a, c, b, d]
    local = 0.5 * cross
    for c in range(2):
        local[:, :, c, :, c] += 0.5 * dot
    local = coefficient * local.reshape(-1, 12, 12)
    return _scatter(space.dof_map, space.dof_map, local, (space.n_dofs, space.n_dofs))


def divergence_matrix(vspace: FeSpace, qspace: FeSpace, coefficient: float = 1.0, degree: int = 4):
    """Mixed form ``coefficient * (div v_j, q_i)``: rows in ``qspace``, columns in ``vspace``."""
    rule = quadrature_rule(degree)
    geo = ElementGeometry(vspace.mesh)
    G = geo.push_grads(p2_basis_grads(rule.xy))  # (M, n, 6, 2); d_c phi_a = div of phi_a e_c
    q = p1_basis(rule.xy)
    w = np.abs(geo.det)[:, None] * rule.weights[None, :]
    local = coefficient * np.einsum("mn,ni,mnac->miac", w, q, G).reshape(-1, 3, 12)
    return _scatter(qspace.dof_map, vspace.dof_map, local, (qspace.n_dofs, vspace.n_dofs))


def load_vector(space: FeSpace, f: Callable, t: float = 0.0, region: int | None = None, degree: int = 6) -> np.ndarray:
    """Load ``(f, v)`` over all elements, or those with region tag ``region``."""
    rule = quadrature_rule(degree)
    geo = ElementGeometry(space.mesh)
    X = geo.map(rule.xy)
    x, y = X[..., 0], X[..., 1]
    w = np.abs(geo.det)[:, None] * rule.weights[None, :]
    mask = _element_mask(space, region)
    out = np.zeros(space.n_dofs)
    if space.family == "P1":
        phi = p1_basis(rule.xy)
        fv = np.broadcast_to(np.asarray(f(x, y, t), dtype=float), x.shape)
        local = np.einsum("mn,nb->mb", (w * fv)[mask], phi)
    else:
        phi = p2_basis(rule.xy)
        fx, fy = _eval_vector(f, x, y, t)
        lx = np.einsum("mn,nb->mb", (w * fx)[mask], phi)
        ly = np.einsum("mn,nb->mb", (w * fy)[mask], phi)
        local = np.stack([lx, ly], axis=2).reshape(-1, 12)
    np.add.at(out, space.dof_map[mask].ravel(), local.ravel())
    return out


class BoundaryGeometry(NamedTuple):
    """Boundary edges of one tag with the data needed for edge integrals."""

    triangles: np.ndarray  # owning triangle per edge
    local_edge: np.ndarray  # local edge index 0..2 inside the triangle
    start: np.ndarray  # (k, 2) first vertex coordinates
    tangent: np.ndarray  # (k, 2) end - start
    length: np.ndarray
    normal: np.ndarray  # outward unit normal


def boundary_geometry(mesh: Mesh, tag: int) -> BoundaryGeometry:
    key = ("bgeo", int(tag))
    if key in mesh._cache:
        return mesh._cache[key]
    eids = mesh.boundary_edge_ids(tag)
    if len(eids) == 0:
        raise KeyError(f"boundary tag {tag} not present in mesh")
    where = {}
    for t, es in enumerate(mesh.triangle_edges.tolist()):
        for k, e in enumerate(es):
            where[e] = (t, k)
    tris = np.array([where[int(e)][0] for e in eids], dtype=np.int64)
    loc = np.array([where[int(e)][1] for e in eids], dtype=np.int64)
    a_idx = mesh.triangles[tris, loc]
    b_idx = mesh.triangles[tris, (loc + 1) % 3]
    start = mesh.vertices[a_idx]
    tangent = mesh.vertices[b_idx] - start
    length = np.hypot(tangent[:, 0], tangent[:, 1])
    # triangles are counterclockwise, so the interior lies left of each local edge
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / length[:, None]
    out = BoundaryGeometry(tris, loc, start, tangent, length, normal)
    mesh._cache[key] = out
    return out


def _edge_reference_points(local_edge: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Reference coordinates (k, n, 2) of points at parameter s on local edges."""
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    a = corners[local_edge]
    b = corners[(local_edge + 1) % 3]
    return a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]


def _boundary_basis(space: FeSpace, bg: BoundaryGeometry, s: np.ndarray) -> np.ndarray:
    ref = _edge_reference_points(bg.local_edge, s)
    flat = ref.reshape(-1, 2)
    vals = p1_basis(flat) if space.family == "P1" else p2_basis(flat)
    return vals.reshape(ref.shape[0], ref.shape[1], -1)


def boundary_load(space: FeSpace, tag: int, g: Callable, t: float = 0.0, n_gauss: int = 4) -> np.ndarray:
    """Edge load ``<g, v>`` on boundary ``tag``.

    ``g(x, y, t, nx, ny)`` returns a scalar array, or a pair for P2v spaces.
    """
    bg = boundary_geometry(space.mesh, tag)
    s, ws = edge_gauss(n_gauss)
    pts = bg.start[:, None, :] + s[None, :, None] * bg.tangent[:, None, :]
    x, y = pts[..., 0], pts[..., 1]
    nx = np.broadcast_to(bg.normal[:, 0, None], x.shape)
    ny = np.broadcast_to(bg.normal[:, 1, None], x.shape)
    w = bg.length[:, None] * ws[None, :]
    phi = _boundary_basis(space, bg, s)
    out = np.zeros(space.n_dofs)
    dofs = space.dof_map[bg.triangles]
    if space.family == "P1":
        gv = np.broadcast_to(np.asarray(g(x, y, t, nx, ny), dtype=float), x.shape)
        local = np.einsum("kn,knb->kb", w * gv, phi)
    else:
        gx, gy = g(x, y, t, nx, ny)
        gx = np.broadcast_to(gx, x.shape)
        gy = np.broadcast_to(gy, x.shape)
        lx = np.einsum("kn,knb->kb", w * gx, phi)
        ly = np.einsum("kn,knb->kb", w * gy, phi)
        local = np.stack([lx, ly], axis=2).reshape(len(bg.triangles), -1)
    np.add.at(out, dofs.ravel(), local.ravel())
    return out


def boundary_mass_matrix(space: FeSpace, tag: int, coefficient: float = 1.0, n_gauss: int = 3):
    """Edge mass ``coefficient * <phi_j, phi_i>`` on boundary ``tag`` (P1)."""
    if space.family != "P1":
        raise ValueError("boundary_mass_matrix expects a P1 space")
    bg = boundary_geometry(space.mesh, tag)
    s, ws = edge_gauss(n_gauss)
    phi = _boundary_basis(space, bg, s)
    local = coefficient * np.einsum("k,n,kni,knj->kij", bg.length, ws, phi, phi)
    dofs = space.dof_map[bg.triangles]
    return _scatter(dofs, dofs, local, (space.n_dofs, space.n_dofs))
