from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from biotedema.mesh import Mesh, synthetic_brain_mesh, unit_square_mesh

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def two_triangles() -> Mesh:
    return unit_square_mesh(1)


@pytest.fixture(scope="session")
def small_brain() -> Mesh:
    """Coarse synthetic slice for fast edema tests."""
    return synthetic_brain_mesh(124.0, 104.0, 0.25, 0.018, 1200)


def with_regions(mesh: Mesh, injured) -> Mesh:
    regions = np.zeros(mesh.n_triangles, dtype=np.int64)
    regions[list(injured)] = 1
    return Mesh(mesh.vertices, mesh.triangles, regions, mesh.boundary_edges)


def polynomial_problem(case):
    """Package-side material and ProblemData for an ``oracle.PolynomialCase``."""
    from oracle import NX, NY, T, X, Y

    from biotedema.biot import BiotMaterial, ProblemData

    mat = BiotMaterial.with_conductivity(E=case.E, nu=case.nu, K=case.K, alpha=case.alpha, c0=case.c0)
    bnd = (X, Y, T, NX, NY)
    data = ProblemData(
        body_force=case.vfn(case.body_force),
        source=case.fn(case.source),
        source_region=case.source_region,
        traction={g: case.vfn(case.traction, bnd) for g in case.neumann_tags},
        flux={g: case.fn(case.flux, bnd) for g in case.neumann_tags},
        robin={case.robin_tag: (case.cb, case.p_ext)},
        u_dirichlet={g: case.vfn(case.u_bc) for g in case.u_tags},
        p_dirichlet={g: case.fn(case.p_bc) for g in case.p_tags},
    )
    return mat, data


def oracle_meshes():
    """The 2- and 8-element unit-square meshes, each with one injured triangle set."""
    return [with_regions(unit_square_mesh(1), [1]), with_regions(unit_square_mesh(2), [1, 4])]


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
