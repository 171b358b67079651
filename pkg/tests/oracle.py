"""
Dense exact-arithmetic reference for the three-field Biot step on tiny meshes.

Nothing here calls into the package except to read mesh arrays. Basis
functions come from inverting the Lagrange Vandermonde matrix in physical
coordinates, integrals are exact over the rationals, Dirichlet conditions
replace rows by identity rows, and the system is solved densely.
"""
from __future__ import annotations

from math import factorial

from functools import cache

import numpy as np
import sympy as s

X, Y, T, NX, NY = s.symbols("x y t nx ny")
XI, ETA, S = s.symbols("xi eta s")
MONO2 = [s.Integer(1), X, Y, X * X, X * Y, Y * Y]
MONO1 = [s.Integer(1), X, Y]


def _q(v) -> s.Rational:
    return s.Rational(float(v))


def _ref_integral(poly: s.Poly) -> s.Rational:
    """Integral of a polynomial in (xi, eta) over the reference triangle."""
    total = s.Integer(0)
    for (a, b), c in poly.terms():
        total += c * s.Rational(factorial(a) * factorial(b), factorial(a + b + 2))
    return total


class DenseBiot:
    """Exact dense operators of the Taylor-Hood Biot discretization."""

    def __init__(self, vertices, triangles, regions, boundary_edges):
        self.V = [(_q(x), _q(y)) for x, y in vertices]
        self.tris = [tuple(int(v) for v in t) for t in triangles]
        self.regions = [int(r) for r in regions]
        self.bedges = [(int(a), int(b), int(g)) for a, b, g in boundary_edges]
        self.nv = len(self.V)
        edges = sorted({tuple(sorted((t[i], t[(i + 1) % 3]))) for t in self.tris for i in range(3)})
        self.edge_id = {e: self.nv + k for k, e in enumerate(edges)}
        self.n_nodes = self.nv + len(edges)
        self.nu_dofs = 2 * self.n_nodes
        self.n = self.nu_dofs + 2 * self.nv
        self._elements = [self._element(t) for t in self.tris]

    # -- geometry and basis -------------------------------------------------
    def node_xy(self, node: int):
        if node < self.nv:
            return self.V[node]
        a, b = next(e for e, k in self.edge_id.items() if k == node)
        return ((self.V[a][0] + self.V[b][0]) / 2, (self.V[a][1] + self.V[b][1]) / 2)

    def _element(self, tri):
        a, b, c = tri
        nodes2 = [a, b, c, self.edge_id[tuple(sorted((a, b)))], self.edge_id[tuple(sorted((b, c)))], self.edge_id[tuple(sorted((c, a)))]]
        P0, P1, P2 = (self.V[v] for v in tri)
        xmap = P0[0] + XI * (P1[0] - P0[0]) + ETA * (P2[0] - P0[0])
        ymap = P0[1] + XI * (P1[1] - P0[1]) + ETA * (P2[1] - P0[1])
        det = abs((P1[0] - P0[0]) * (P2[1] - P0[1]) - (P2[0] - P0[0]) * (P1[1] - P0[1]))

        def lagrange(mono, nodes):
            M = s.Matrix([[m.subs({X: px, Y: py}) for m in mono] for px, py in (self.node_xy(n) for n in nodes)])
            C = M.inv()
            return [sum(C[k, j] * mono[k] for k in range(len(mono))) for j in range(len(nodes))]

        def to_ref(expr):
            return s.Poly(s.expand(s.sympify(expr).subs({X: xmap, Y: ymap}, simultaneous=True)), XI, ETA)

        phi2 = lagrange(MONO2, nodes2)
        phi1 = lagrange(MONO1, list(tri))
        return {
            "nodes2": nodes2,
            "nodes1": list(tri),
            "det": det,
            "map": (xmap, ymap),
            "phi2": [to_ref(f) for f in phi2],
            "dphi2": [(to_ref(s.diff(f, X)), to_ref(s.diff(f, Y))) for f in phi2],
            "phi1": [to_ref(f) for f in phi1],
            "dphi1": [(to_ref(s.diff(f, X)), to_ref(s.diff(f, Y))) for f in phi1],
            "to_ref": to_ref,
        }

    def _int(self, el, poly):
        return el["det"] * _ref_integral(poly)

    # -- bilinear forms -----------------------------------------------------
    @cache
    def strain(self):
        A = s.zeros(self.nu_dofs, self.nu_dofs)
        for el in self._elements:
            for i, ni in enumerate(el["nodes2"]):
                for ci in range(2):
                    Ei = self._eps(el["dphi2"][i], ci)
                    for j, nj in enumerate(el["nodes2"]):
                        for cj in range(2):
                            Ej = self._eps(el["dphi2"][j], cj)
                            val = sum((Ei[r][q] * Ej[r][q] for r in range(2) for q in range(2)), s.Poly(0, XI, ETA))
                            A[2 * ni + ci, 2 * nj + cj] += self._int(el, val)
        return A

    @staticmethod
    def _eps(grad, comp):
        G = [[s.Poly(0, XI, ETA)] * 2 for _ in range(2)]
        G[comp] = [grad[0], grad[1]]
        return [[(G[r][q] + G[q][r]) * s.Rational(1, 2) for q in range(2)] for r in range(2)]

    @cache
    def divergence(self):
        """Rows P1 test functions, columns P2 vector DOFs: (q, div v)."""
        D = s.zeros(self.nv, self.nu_dofs)
        for el in self._elements:
            for i, ni in enumerate(el["nodes1"]):
                for j, nj in enumerate(el["nodes2"]):
                    for c in range(2):
                        D[ni, 2 * nj + c] += self._int(el, el["phi1"][i] * el["dphi2"][j][c])
        return D

    @cache
    def mass(self):
        M = s.zeros(self.nv, self.nv)
        for el in self._elements:
            for i, ni in enumerate(el["nodes1"]):
                for j, nj in enumerate(el["nodes1"]):
                    M[ni, nj] += self._int(el, el["phi1"][i] * el["phi1"][j])
        return M

    @cache
    def stiffness(self):
        L = s.zeros(self.nv, self.nv)
        for el in self._elements:
            for i, ni in enumerate(el["nodes1"]):
                for j, nj in enumerate(el["nodes1"]):
                    gi, gj = el["dphi1"][i], el["dphi1"][j]
                    L[ni, nj] += self._int(el, gi[0] * gj[0] + gi[1] * gj[1])
        return L

    # -- boundary terms -----------------------------------------------------
    def _outward(self, a, b):
        for t in self.tris:
            for k in range(3):
                if {t[k], t[(k + 1) % 3]} == {a, b}:
                    p, q = t[k], t[(k + 1) % 3]
                    dx, dy = self.V[q][0] - self.V[p][0], self.V[q][1] - self.V[p][1]
                    L = s.sqrt(dx * dx + dy * dy)
                    return dy / L, -dx / L, L
        raise ValueError("boundary edge not in any triangle")

    def _edge_basis(self, a, b, degree):
        """Traces of the basis functions on edge (a, b), parametrized by s."""
        if degree == 1:
            return {a: 1 - S, b: S}
        m = self.edge_id[tuple(sorted((a, b)))]
        return {a: (1 - S) * (1 - 2 * S), b: S * (2 * S - 1), m: 4 * S * (1 - S)}

    @cache
    def boundary_mass(self, tag):
        R = s.zeros(self.nv, self.nv)
        for a, b, g in self.bedges:
            if g != tag:
                continue
            _, _, L = self._outward(a, b)
            tr = self._edge_basis(a, b, 1)
            for i, fi in tr.items():
                for j, fj in tr.items():
                    R[i, j] += L * s.integrate(fi * fj, (S, 0, 1))
        return R

    def boundary_load(self, tag, g, vector, t):
        n = self.nu_dofs if vector else self.nv
        b = s.zeros(n, 1)
        for a, e, gtag in self.bedges:
            if gtag != tag:
                continue
            nx, ny, L = self._outward(a, e)
            xs = self.V[a][0] + S * (self.V[e][0] - self.V[a][0])
            ys = self.V[a][1] + S * (self.V[e][1] - self.V[a][1])
            sub = {X: xs, Y: ys, T: t, NX: nx, NY: ny}
            tr = self._edge_basis(a, e, 2 if vector else 1)
            for node, f in tr.items():
                if vector:
                    for c in range(2):
                        b[2 * node + c] += L * s.integrate(s.expand(g[c].subs(sub, simultaneous=True) * f), (S, 0, 1))
                else:
                    b[node] += L * s.integrate(s.expand(g.subs(sub, simultaneous=True) * f), (S, 0, 1))
        return b

    def load(self, f, vector, t, region=None):
        n = self.nu_dofs if vector else self.nv
        b = s.zeros(n, 1)
        for el, reg in zip(self._elements, self.regions):
            if region is not None and reg != region:
                continue
            if vector:
                fr = [el["to_ref"](fc.subs(T, t)) for fc in f]
                for j, nj in enumerate(el["nodes2"]):
                    for c in range(2):
                        b[2 * nj + c] += self._int(el, fr[c] * el["phi2"][j])
            else:
                fr = el["to_ref"](f.subs(T, t))
                for j, nj in enumerate(el["nodes1"]):
                    b[nj] += self._int(el, fr * el["phi1"][j])
        return b

    # -- Dirichlet data -----------------------------------------------------
    def u_constrained(self, tags):
        nodes = set()
        for a, b, g in self.bedges:
            if g in tags:
                nodes |= {a, b, self.edge_id[tuple(sorted((a, b)))]}
        return sorted(nodes)

    def p_constrained(self, tags):
        return sorted({v for a, b, g in self.bedges if g in tags for v in (a, b)})


def to_float(M) -> np.ndarray:
    return np.array(M.tolist(), dtype=float) if M.shape[1] != 1 else np.array([float(v) for v in M], dtype=float)


class PolynomialCase:
    """Polynomial loads and boundary data on the unit square tags 1..4.

    Every integrand is a polynomial, so the exact integrals above and the
    package's quadrature both evaluate them without approximation.
    """

    E, nu, alpha, c0, K = 100.0, 0.3, 0.8, 0.25, 0.5
    cb, p_ext = 0.7, 2.0
    body_force = (X * Y + T, X - Y**2)
    source = 1 + X * T
    traction = (X + NX, Y * T - NY)
    flux = X + Y * NY
    u_bc = (Y * (1 - Y) + T, X * Y * T)
    p_bc = X + Y**2 + T
    u0 = (X * Y, Y)
    p0 = X**2
    u_tags = (1, 3)
    p_tags = (3,)
    neumann_tags = (2, 4)
    robin_tag = 1
    source_region = 1

    @property
    def lam(self):
        return self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))

    @property
    def mu(self):
        return self.E / (2 * (1 + self.nu))

    @staticmethod
    def fn(expr, args=(X, Y, T)):
        f = s.lambdify(args, expr, "numpy")
        return lambda *a: np.broadcast_to(np.asarray(f(*a), dtype=float), np.shape(a[0])) * 1.0

    def vfn(self, exprs, args=(X, Y, T)):
        fs = [self.fn(e, args) for e in exprs]
        return lambda *a: (fs[0](*a), fs[1](*a))


def reference_step(dense: DenseBiot, case: PolynomialCase, u0, xi0, p0, dt: float, t_next: float, algorithm: str):
    """One exact-operator step; returns (u, xi, p) as float arrays and the full coupled matrix."""
    A = to_float(dense.strain()) * (2 * case.mu)
    D = to_float(dense.divergence())
    M = to_float(dense.mass())
    L = to_float(dense.stiffness())
    R = to_float(dense.boundary_mass(case.robin_tag))
    tq = _q(t_next)
    fu = to_float(dense.load(list(case.body_force), True, tq))
    for tag in case.neumann_tags:
        fu = fu + to_float(dense.boundary_load(tag, list(case.traction), True, tq))
    fp = to_float(dense.load(case.source, False, tq, region=case.source_region))
    for tag in case.neumann_tags:
        fp = fp + to_float(dense.boundary_load(tag, case.flux, False, tq))
    fp = fp + to_float(dense.boundary_load(case.robin_tag, s.Float(case.cb * case.p_ext), False, tq))

    lam, a, K = case.lam, case.alpha, case.K
    store = case.c0 + a * a / lam
    nu_, nq = dense.nu_dofs, dense.nv
    ucon = dense.u_constrained(case.u_tags)
    pcon = dense.p_constrained(case.p_tags)

    def u_values():
        idx, vals = [], []
        for node in ucon:
            x, y = dense.node_xy(node)
            for c in range(2):
                idx.append(2 * node + c)
                vals.append(float(case.u_bc[c].subs({X: x, Y: y, T: tq})))
        return np.array(idx), np.array(vals)

    def p_values():
        return np.array(pcon), np.array([float(case.p_bc.subs({X: dense.V[v][0], Y: dense.V[v][1], T: tq})) for v in pcon])

    def solve_with(Afull, b, idx, vals):
        Ad, bd = Afull.copy(), b.copy()
        Ad[idx, :] = 0.0
        Ad[idx, idx] = 1.0
        bd[idx] = vals
        return np.linalg.solve(Ad, bd)

    Kp = K * L + store / dt * M + case.cb * R
    Z = np.zeros
    full = np.block([
        [A, -D.T, Z((nu_, nq))],
        [-D, -M / lam, a / lam * M],
        [Z((nq, nu_)), -a / (lam * dt) * M, Kp],
    ])
    ui, uv = u_values()
    pi, pv = p_values()
    if algorithm == "coupled":
        b = np.concatenate([fu, np.zeros(nq), fp + M @ (store * p0 - a / lam * xi0) / dt])
        x = solve_with(full, b, np.concatenate([ui, pi + nu_ + nq]), np.concatenate([uv, pv]))
        return x[:nu_], x[nu_ : nu_ + nq], x[nu_ + nq :], full
    stokes = np.block([[A, -D.T], [-D, -M / lam]])
    x = solve_with(stokes, np.concatenate([fu, -a / lam * (M @ p0)]), ui, uv)
    u, xi = x[:nu_], x[nu_:]
    bp = fp + M @ (store / dt * p0 + a / (lam * dt) * (xi - xi0))
    p = solve_with(K * L + store / dt * M + case.cb * R, bp, pi, pv)
    return u, xi, p, full


def reference_initial(dense: DenseBiot, case: PolynomialCase):
    """Nodal interpolants of u0, p0 and the L2 projection of alpha p0 - lambda div u0."""
    u0 = np.zeros(dense.nu_dofs)
    for node in range(dense.n_nodes):
        x, y = dense.node_xy(node)
        for c in range(2):
            u0[2 * node + c] = float(case.u0[c].subs({X: x, Y: y}))
    p0 = np.array([float(case.p0.subs({X: x, Y: y})) for x, y in dense.V])
    M = to_float(dense.mass())
    D = to_float(dense.divergence())
    xi0 = np.linalg.solve(M, case.alpha * (M @ p0) - case.lam * (D @ u0))
    return u0, xi0, p0
