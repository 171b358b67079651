"""
Two-dimensional conforming triangle meshes with region and boundary tags.

A :class:`Mesh` stores vertex coordinates, counterclockwise triangles, a
region tag per triangle and tagged boundary edges. Meshes are treated as
immutable once built; :func:`refine_uniform` returns a new mesh.

Boundary tags used throughout the package:

* unit square: 1 (x=1), 2 (y=0), 3 (x=0), 4 (y=1)
* brain slice: 1 (outer skull/SAS wall), 2 (ventricle wall)
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

__all__ = [
    "Mesh",
    "MeshError",
    "MeshFormatError",
    "MeshTopologyError",
    "unit_square_mesh",
    "refine_uniform",
    "load_mesh",
    "write_mesh",
    "synthetic_brain_mesh",
]


class MeshError(Exception):
    """Base class for mesh construction and validation failures."""


class MeshFormatError(MeshError):
    """Raised when a mesh file cannot be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshTopologyError(MeshError):
    """Raised when a mesh violates a topological invariant."""

    def __init__(self, message: str, entity: str | None = None, index: int | None = None):
        self.entity = entity
        self.index = index
        if entity is not None:
            message = f"{entity} {index}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming 2D triangle mesh.

    Attributes
    ----------
    vertices : (N, 2) float array
    triangles : (M, 3) int array, counterclockwise
    regions : (M,) int array, 0 = normal tissue, 1 = injured
    boundary_edges : (B, 3) int array of ``(v1, v2, tag)``
    """

    vertices: np.ndarray
    triangles: np.ndarray
    regions: np.ndarray
    boundary_edges: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "triangles", np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3))
        object.__setattr__(self, "regions", np.ascontiguousarray(self.regions, dtype=np.int64).reshape(-1))
        object.__setattr__(
            self, "boundary_edges", np.ascontiguousarray(self.boundary_edges, dtype=np.int64).reshape(-1, 3)
        )
        for arr in (self.vertices, self.triangles, self.regions, self.boundary_edges):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def total_area(self) -> float:
        return float(self.signed_areas().sum())

    def _edge_data(self):
        if "edges" not in self._cache:
            local = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
            keys = np.sort(local, axis=1)
            edges, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
            self._cache["edges"] = edges
            self._cache["tri_edges"] = inverse.reshape(-1, 3)
            self._cache["edge_counts"] = counts
        return self._cache["edges"], self._cache["tri_edges"], self._cache["edge_counts"]

    @property
    def edges(self) -> np.ndarray:
        """Unique edges as sorted vertex pairs, in lexicographic order."""
        return self._edge_data()[0]

    @property
    def triangle_edges(self) -> np.ndarray:
        """Edge index of local edges (v0,v1), (v1,v2), (v2,v0) per triangle."""
        return self._edge_data()[1]

    def edge_lookup(self) -> dict[tuple[int, int], int]:
        if "lookup" not in self._cache:
            self._cache["lookup"] = {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}
        return self._cache["lookup"]

    def boundary_edge_ids(self, tag: int) -> np.ndarray:
        """Global edge indices of boundary edges carrying ``tag``."""
        lookup = self.edge_lookup()
        be = self.boundary_edges[self.boundary_edges[:, 2] == tag]
        return np.array([lookup[(min(a, b), max(a, b))] for a, b, _ in be], dtype=np.int64)

    def boundary_tags(self) -> list[int]:
        return sorted(int(t) for t in np.unique(self.boundary_edges[:, 2]))

    def boundary_length(self, tag: int) -> float:
        be = self.boundary_edges[self.boundary_edges[:, 2] == tag]
        d = self.vertices[be[:, 1]] - self.vertices[be[:, 0]]
        return float(np.hypot(d[:, 0], d[:, 1]).sum())

    def validate(self) -> None:
        """Check orientation, index ranges and boundary tagging.

        Raises
        ------
        MeshTopologyError
            Naming the first offending triangle or boundary edge.
        """
        n = self.n_vertices
        bad = np.flatnonzero((self.triangles < 0).any(axis=1) | (self.triangles >= n).any(axis=1))
        if bad.size:
            raise MeshTopologyError("vertex index out of range", "triangle", int(bad[0]))
        bad = np.flatnonzero((self.boundary_edges[:, :2] < 0).any(axis=1) | (self.boundary_edges[:, :2] >= n).any(axis=1))
        if bad.size:
            raise MeshTopologyError("vertex index out of range", "boundary edge", int(bad[0]))
        if self.regions.shape[0] != self.n_triangles:
            raise MeshTopologyError("region tag count does not match triangle count")
        area = self.signed_areas()
        bad = np.flatnonzero(area <= 0.0)
        if bad.size:
            raise MeshTopologyError("non-positive signed area (clockwise or degenerate)", "triangle", int(bad[0]))
        _, tri_edges, counts = self._edge_data()
        if (counts > 2).any():
            edge = int(np.flatnonzero(counts > 2)[0])
            raise MeshTopologyError("non-manifold edge shared by more than two triangles", "edge", edge)
        lookup = self.edge_lookup()
        seen = set()
        for i, (a, b, _) in enumerate(self.boundary_edges):
            key = (int(min(a, b)), int(max(a, b)))
            e = lookup.get(key)
            if e is None or counts[e] != 1:
                raise MeshTopologyError("not an edge of exactly one triangle", "boundary edge", i)
            if key in seen:
                raise MeshTopologyError("boundary edge listed twice", "boundary edge", i)
            seen.add(key)
        n_topo = int((counts == 1).sum())
        if n_topo != len(seen):
            edge = int(next(i for i in np.flatnonzero(counts == 1) if tuple(self.edges[i]) not in seen))
            raise MeshTopologyError("topological boundary edge carries no tag", "edge", edge)


def unit_square_mesh(n: int) -> Mesh:
    """Structured mesh of [0, 1]^2 with ``2 n**2`` right triangles."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(s, s)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    v00 = idx[:-1, :-1].ravel()
    v10 = idx[:-1, 1:].ravel()
    v01 = idx[1:, :-1].ravel()
    v11 = idx[1:, 1:].ravel()
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)
    right = idx[:, n]
    bottom = idx[0, :]
    left = idx[:, 0]
    top = idx[n, :]
    edges = []
    # counterclockwise traversal on each side
    edges += [(right[j], right[j + 1], 1) for j in range(n)]
    edges += [(bottom[j], bottom[j + 1], 2) for j in range(n)]
    edges += [(left[j + 1], left[j], 3) for j in range(n)]
    edges += [(top[j + 1], top[j], 4) for j in range(n)]
    return Mesh(vertices, triangles, np.zeros(len(triangles), dtype=np.int64), np.array(edges))


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into four by joining its edge midpoints.

    Midpoint vertices are numbered ``n_vertices + edge index`` so a vertex on a
    shared edge is created once.
    """
    edges = mesh.edges
    tri_edges = mesh.triangle_edges
    nv = mesh.n_vertices
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mid])
    a, b, c = mesh.triangles.T
    mab, mbc, mca = (tri_edges + nv).T
    children = np.stack(
        [
            np.column_stack([a, mab, mca]),
            np.column_stack([mab, b, mbc]),
            np.column_stack([mca, mbc, c]),
            np.column_stack([mab, mbc, mca]),
        ],
        axis=1,
    ).reshape(-1, 3)
    regions = np.repeat(mesh.regions, 4)
    lookup = mesh.edge_lookup()
    bedges = []
    for v1, v2, tag in mesh.boundary_edges:
        m = nv + lookup[(min(v1, v2), max(v1, v2))]
        bedges.append((v1, m, tag))
        bedges.append((m, v2, tag))
    return Mesh(vertices, children, regions, np.array(bedges, dtype=np.int64).reshape(-1, 3))


# ---------------------------------------------------------------------------
# ASCII file format
# ---------------------------------------------------------------------------


def write_mesh(mesh: Mesh, path: str | Path) -> None:
    """Write ``mesh`` in the package ASCII format (exact round trip)."""
    lines = [f"nodes {mesh.n_vertices}"]
    lines += [f"{float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{a} {b} {c} {r}" for (a, b, c), r in zip(mesh.triangles.tolist(), mesh.regions.tolist())]
    lines.append(f"boundary_edges {len(mesh.boundary_edges)}")
    lines += [f"{a} {b} {t}" for a, b, t in mesh.boundary_edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_section(lines, pos, keyword, width, conv):
    if pos >= len(lines):
        raise MeshFormatError(f"missing '{keyword}' section", None)
    lineno, tokens = lines[pos]
    if len(tokens) != 2 or tokens[0] != keyword:
        raise MeshFormatError(f"expected '{keyword} <count>'", lineno)
    try:
        count = int(tokens[1])
    except ValueError:
        raise MeshFormatError(f"bad count {tokens[1]!r}", lineno) from None
    if count < 0:
        raise MeshFormatError("negative count", lineno)
    rows = []
    for k in range(count):
        if pos + 1 + k >= len(lines):
            raise MeshFormatError(f"'{keyword}' section ended after {k} of {count} entries", lines[-1][0])
        lineno, tokens = lines[pos + 1 + k]
        if len(tokens) != width:
            raise MeshFormatError(f"expected {width} values, got {len(tokens)}", lineno)
        try:
            rows.append([conv(t) for t in tokens])
        except ValueError:
            raise MeshFormatError(f"cannot parse {' '.join(tokens)!r}", lineno) from None
    return rows, pos + 1 + count


def load_mesh(path: str | Path) -> Mesh:
    """Read a mesh written in the package ASCII format and validate it."""
    raw = Path(path).read_text().splitlines()
    lines = []
    for i, line in enumerate(raw, start=1):
        s = line.strip()
        if s and not s.startswith("#"):
            lines.append((i, s.split()))
    nodes, pos = _parse_section(lines, 0, "nodes", 2, float)
    tris, pos = _parse_section(lines, pos, "triangles", 4, int)
    bedges, pos = _parse_section(lines, pos, "boundary_edges", 3, int)
    if pos != len(lines):
        raise MeshFormatError("unexpected trailing content", lines[pos][0])
    tris = np.array(tris, dtype=np.int64).reshape(-1, 4)
    mesh = Mesh(np.array(nodes, dtype=float).reshape(-1, 2), tris[:, :3], tris[:, 3], np.array(bedges).reshape(-1, 3))
    mesh.validate()
    return mesh


# ---------------------------------------------------------------------------
# Synthetic brain slice
# ---------------------------------------------------------------------------


def _ellipse_perimeter(a: float, b: float) -> float:
    # Ramanujan's second approximation
    h = ((a - b) / (a + b)) ** 2
    return math.pi * (a + b) * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))


def _ring_points(a: float, b: float, h: float) -> np.ndarray:
    n = max(8, int(round(_ellipse_perimeter(a, b) / h)))
    theta = 2 * np.pi * np.arange(n) / n
    return np.column_stack([a * np.cos(theta), b * np.sin(theta)])


def _annulus_triangulation(a: float, b: float, s_in: float, h: float):
    """Delaunay triangulation of points on nested scaled ellipses."""
    span = (1.0 - s_in) * min(a, b)
    n_rings = max(2, int(round(span / (h * math.sqrt(3) / 2)))) + 1
    rings = []
    for s in np.linspace(s_in, 1.0, n_rings):
        pts = _ring_points(s * a, s * b, h)
        if rings:
            # stagger consecutive rings to favour well-shaped triangles
            ang = np.pi / len(pts) * (len(rings) % 2)
            theta = np.arctan2(pts[:, 1] / (s * b), pts[:, 0] / (s * a)) + ang
            pts = np.column_stack([s * a * np.cos(theta), s * b * np.sin(theta)])
        rings.append(pts)
    inner_n = len(rings[0])
    outer_n = len(rings[-1])
    points = np.vstack(rings)
    tri = Delaunay(points).simplices.astype(np.int64)
    # drop triangles spanning the cavity (all corners on the inner ring)
    tri = tri[~(tri < inner_n).all(axis=1)]
    p = points[tri]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    tri[area < 0] = tri[area < 0][:, [0, 2, 1]]
    n_pts = len(points)
    outer_start = n_pts - outer_n
    bedges = []
    for k in range(outer_n):
        bedges.append((outer_start + k, outer_start + (k + 1) % outer_n, 1))
    for k in range(inner_n):
        # ventricle wall traversed clockwise so the domain stays on the left
        bedges.append(((k + 1) % inner_n, k, 2))
    return points, tri, np.array(bedges, dtype=np.int64)


def _grow_patch(mesh: Mesh, seed_point: np.ndarray, count: int) -> np.ndarray:
    """Edge-connected set of ``count`` triangles grown around ``seed_point``."""
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    dist = np.hypot(*(centroids - seed_point).T)
    tri_edges = mesh.triangle_edges
    edge_tris: dict[int, list[int]] = {}
    for t, es in enumerate(tri_edges.tolist()):
        for e in es:
            edge_tris.setdefault(e, []).append(t)
    start = int(np.argmin(dist))
    chosen = {start}
    frontier = set()
    for e in tri_edges[start]:
        frontier.update(edge_tris[int(e)])
    frontier -= chosen
    while len(chosen) < count and frontier:
        t = min(frontier, key=lambda k: (dist[k], k))
        frontier.discard(t)
        chosen.add(t)
        for e in tri_edges[t]:
            frontier.update(x for x in edge_tris[int(e)] if x not in chosen)
    return np.array(sorted(chosen), dtype=np.int64)


def synthetic_brain_mesh(
    outer_width: float = 124.0,
    outer_height: float = 104.0,
    ventricle_scale: float = 0.25,
    injured_fraction: float = 0.018,
    target_elements: int = 9155,
) -> Mesh:
    """Two-ellipse stand-in for an axial brain slice (lengths in mm).

    The outer ellipse (axes ``outer_width`` x ``outer_height``) is tagged 1,
    the ventricle cavity (same ellipse scaled by ``ventricle_scale``) is
    tagged 2. A contiguous patch of triangles next to the ventricle, about
    ``injured_fraction`` of all elements, gets region tag 1.
    """
    if not 0.0 < ventricle_scale < 1.0:
        raise ValueError("ventricle_scale must lie in (0, 1)")
    if not 0.0 < injured_fraction < 0.5:
        raise ValueError("injured_fraction must lie in (0, 0.5)")
    if target_elements < 16:
        raise ValueError("target_elements too small")
    a, b = 0.5 * outer_width, 0.5 * outer_height
    area = math.pi * a * b * (1.0 - ventricle_scale**2)
    h = math.sqrt(area / (target_elements * math.sqrt(3) / 4))
    for _ in range(8):
        points, tri, bedges = _annulus_triangulation(a, b, ventricle_scale, h)
        ratio = len(tri) / target_elements
        if abs(ratio - 1.0) < 0.05:
            break
        h *= math.sqrt(ratio)
    mesh = Mesh(points, tri, np.zeros(len(tri), dtype=np.int64), bedges)
    try:
        mesh.validate()
    except MeshTopologyError as exc:
        raise MeshError(f"synthetic brain meshing failed: {exc}") from exc
    n_injured = max(1, int(round(injured_fraction * mesh.n_triangles)))
    # seed just outside the ventricle on the lateral side
    seed = np.array([ventricle_scale * a + 2.0 * h, 0.0])
    patch = _grow_patch(mesh, seed, n_injured)
    regions = np.zeros(mesh.n_triangles, dtype=np.int64)
    regions[patch] = 1
    return Mesh(points, tri, regions, bedges)


def triangle_adjacency_components(mesh: Mesh, subset: np.ndarray) -> int:
    """Number of edge-connected components among triangles in ``subset``."""
    subset = set(int(t) for t in subset)
    tri_edges = mesh.triangle_edges
    edge_tris: dict[int, list[int]] = {}
    for t in subset:
        for e in tri_edges[t]:
            edge_tris.setdefault(int(e), []).append(t)
    seen: set[int] = set()
    components = 0
    for t0 in subset:
        if t0 in seen:
            continue
        components += 1
        queue = deque([t0])
        seen.add(t0)
        while queue:
            t = queue.popleft()
            for e in tri_edges[t]:
                for nb in edge_tris[int(e)]:
                    if nb not in seen:
                        seen.add(nb)
                        queue.append(nb)
    return components
