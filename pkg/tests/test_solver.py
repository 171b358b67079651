from __future__ import annotations

import time

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from biotedema import solver
from biotedema.biot import BiotMaterial, ProblemData, assemble_coupled_system, build_spaces, operators
from biotedema.mesh import unit_square_mesh
from biotedema.solver import Factorization, SingularMatrixError, assemble_add, factorize, solve


def test_duplicates_summed():
    A = assemble_add([0, 0], [0, 0], [1.0, 2.0], (1, 1))
    assert A.nnz == 1 and A[0, 0] == 3.0


def test_empty_stream():
    A = assemble_add([], [], [], (3, 4))
    assert A.shape == (3, 4) and A.nnz == 0


def test_out_of_range():
    with pytest.raises(IndexError):
        assemble_add([0, 2], [0, 0], [1.0, 1.0], (2, 2))
    with pytest.raises(IndexError):
        assemble_add([0], [-1], [1.0], (2, 2))


@given(st.integers(0, 2**32 - 1))
def test_order_independent_bitwise(seed):
    rng = np.random.default_rng(seed)
    n = 200
    r = rng.integers(0, 7, n)
    c = rng.integers(0, 5, n)
    v = rng.standard_normal(n) * 10.0 ** rng.integers(-8, 8, n)
    A = assemble_add(r, c, v, (7, 5))
    p = rng.permutation(n)
    B = assemble_add(r[p], c[p], v[p], (7, 5))
    assert A.indptr.tobytes() == B.indptr.tobytes()
    assert A.indices.tobytes() == B.indices.tobytes()
    assert A.data.tobytes() == B.data.tobytes()
    # canonical form: strictly increasing columns per row
    for i in range(7):
        cols = A.indices[A.indptr[i] : A.indptr[i + 1]]
        assert np.all(np.diff(cols) > 0)
    dense = np.zeros((7, 5))
    np.add.at(dense, (r, c), v)
    assert np.allclose(A.toarray(), dense, rtol=1e-12, atol=1e-300)


def test_identity_and_hand_solve():
    f = factorize(sp.identity(5, format="csr"))
    b = np.arange(5.0)
    assert np.array_equal(solve(f, b), b)
    x = factorize(sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]])).solve([3.0, 3.0])
    assert np.allclose(x, [1.0, 1.0], rtol=1e-15)


def test_zero_rhs_and_determinism():
    A = sp.random(50, 50, density=0.1, random_state=1) + 10 * sp.identity(50)
    f = factorize(A)
    assert not f.solve(np.zeros(50)).any()
    b = np.random.default_rng(0).standard_normal(50)
    assert f.solve(b).tobytes() == f.solve(b).tobytes()


def test_length_mismatch():
    f = factorize(sp.identity(3, format="csr"))
    with pytest.raises(ValueError):
        f.solve(np.ones(4))
    with pytest.raises(ValueError):
        Factorization(sp.csr_matrix(np.ones((2, 3))))


@pytest.mark.parametrize("strategy", ["auto", "static", "partial"])
def test_singular_matrix_reported(strategy):
    A = sp.csr_matrix(np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]]))
    with pytest.raises(SingularMatrixError):
        factorize(A, strategy)


@pytest.mark.parametrize("strategy", ["auto", "static", "partial"])
def test_zero_diagonal_still_solved(strategy):
    A = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(factorize(A, strategy).solve([2.0, 3.0]), [3.0, 2.0])


def test_auto_falls_back_to_partial_pivoting(monkeypatch):
    real = solver._splu

    def failing(A, pivoting):
        if pivoting == "static":
            raise RuntimeError("Factor is exactly singular")
        return real(A, pivoting)

    monkeypatch.setattr(solver, "_splu", failing)
    A = sp.csr_matrix(np.array([[4.0, 1.0], [1.0, 3.0]]))
    f = factorize(A, "auto")
    assert f.pivoting == "partial"
    assert np.allclose(A @ f.solve([1.0, 2.0]), [1.0, 2.0])
    with pytest.raises(SingularMatrixError):
        factorize(A, "static")


def test_default_pivoting_setting():
    try:
        solver.set_default_pivoting("partial")
        assert factorize(sp.identity(2, format="csr")).pivoting == "partial"
    finally:
        solver.set_default_pivoting("auto")
    with pytest.raises(ValueError):
        solver.set_default_pivoting("rook")


@given(st.integers(1, 1000), st.integers(0, 2**32 - 1))
def test_random_systems_against_dense(n, seed):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=min(1.0, 5.0 / n), random_state=seed, data_rvs=rng.standard_normal)
    A = (A + sp.diags(2.0 + np.abs(A).sum(axis=1).A.ravel())).tocsr()  # diagonally dominant
    b = rng.standard_normal(n)
    x = factorize(A).solve(b)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)
    if n <= 200:
        assert np.allclose(x, np.linalg.solve(A.toarray(), b), rtol=1e-10, atol=1e-12)


def test_coupled_matrix_two_triangles_matches_dense():
    spaces = build_spaces(unit_square_mesh(1))
    mat = BiotMaterial.with_conductivity(E=1000.0, nu=0.3, K=1.0)
    data = ProblemData(u_dirichlet={1: None, 3: None}, p_dirichlet={1: 0.0})
    A = assemble_coupled_system(spaces, mat, 1e-3, data).matrix
    b = np.random.default_rng(3).standard_normal(A.shape[0])
    x = factorize(A).solve(b)
    ref = np.linalg.solve(A.toarray(), b)
    assert np.abs(x - ref).max() <= 1e-10 * np.abs(ref).max()


def test_strain_block_spd_after_elimination():
    spaces = build_spaces(unit_square_mesh(4))
    ops = operators(spaces)
    free = np.setdiff1d(np.arange(spaces.V.n_dofs), spaces.V.boundary_dofs([1, 3]))
    A = ops.strain[free][:, free]
    rng = np.random.default_rng(7)
    for _ in range(100):
        x = rng.standard_normal(len(free))
        assert x @ (A @ x) > 0


def test_reuse_is_cheaper_than_factoring():
    spaces = build_spaces(unit_square_mesh(32))
    mat = BiotMaterial.with_conductivity(E=1000.0, nu=0.3, K=1.0)
    data = ProblemData(u_dirichlet={1: None, 3: None}, p_dirichlet={1: 0.0, 3: 0.0})
    A = assemble_coupled_system(spaces, mat, 1e-5, data).matrix
    t0 = time.perf_counter()
    f = factorize(A)
    t_fact = time.perf_counter() - t0
    b = np.ones(A.shape[0])
    t0 = time.perf_counter()
    for _ in range(10):
        x = f.solve(b)
    t_solve = (time.perf_counter() - t0) / 10
    assert t_solve < t_fact
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)
