import math

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from eigenbound.cases import build_case, random_spd
from eigenbound.errors import ContractError, DefinitenessError, KernelError
from eigenbound.mesh import PERIODIC, build_uniform_quad_mesh
from eigenbound.material import constant_field
from eigenbound.assembly import assemble_diffusion
from eigenbound.smalleig import (
    cholesky, cholesky_solve, eigen_residuals, gen_eig_dense, gen_eig_small, jacobi_eigh,
)


def spd(rng, n):
    return random_spd(rng, n, 0.05, 20.0)


# -- Cholesky ------------------------------------------------------------------------

def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky(np.eye(4)), np.eye(4))


def test_cholesky_hand_example():
    np.testing.assert_array_equal(cholesky([[4.0, 2.0], [2.0, 5.0]]), [[2.0, 0.0], [1.0, 2.0]])


def test_cholesky_reports_pivot():
    with pytest.raises(DefinitenessError) as exc:
        cholesky([[1.0, 2.0], [2.0, 1.0]])
    assert exc.value.pivot == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 31))
def test_cholesky_solve_matches_numpy(n, seed):
    rng = np.random.default_rng(seed)
    M = spd(rng, n)
    b = rng.standard_normal(n)
    L = cholesky(M)
    np.testing.assert_allclose(L @ L.T, M, rtol=1e-12, atol=1e-12 * np.abs(M).max())
    np.testing.assert_allclose(cholesky_solve(L, b), np.linalg.solve(M, b), rtol=1e-8, atol=1e-10)


# -- small pencils ----------------------------------------------------------------------

def test_small_diag():
    np.testing.assert_array_equal(gen_eig_small(np.diag([2.0, 1.0]), np.eye(2)), [1.0, 2.0])


def test_small_ex41_pencil():
    # exact roots 9/7 and 17/13 (tools/derive_oracles.py)
    w = gen_eig_small([[1.3, 0.4], [0.4, 1.3]], [[1.0, 0.3], [0.3, 1.0]])
    np.testing.assert_allclose(w, [9 / 7, 17 / 13], rtol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_small_multiple_of_b(n):
    rng = np.random.default_rng(n)
    B = spd(rng, n)
    np.testing.assert_allclose(gen_eig_small(2.5 * B, B), np.full(n, 2.5), rtol=1e-12)


def test_small_rejects_large_and_indefinite():
    with pytest.raises(ContractError):
        gen_eig_small(np.eye(7), np.eye(7))
    with pytest.raises(DefinitenessError):
        gen_eig_small(np.eye(2), [[1.0, 2.0], [2.0, 1.0]])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 31))
def test_small_agrees_with_dense(n, seed):
    rng = np.random.default_rng(seed)
    A, B = spd(rng, n), spd(rng, n)
    ws = gen_eig_small(A, B)
    wd = gen_eig_dense(A, B)
    np.testing.assert_allclose(ws, wd, rtol=1e-10, atol=1e-10 * max(1.0, np.abs(wd).max()))


# -- dense oracle ---------------------------------------------------------------------------

def test_dense_b_equals_a():
    rng = np.random.default_rng(5)
    A = spd(rng, 30)
    np.testing.assert_allclose(gen_eig_dense(A, A), np.ones(30), atol=1e-10)


def test_dense_two_by_two():
    np.testing.assert_allclose(gen_eig_dense(np.diag([2.0, 1.0]), np.eye(2)), [1.0, 2.0], rtol=1e-15)


def test_dense_ex41a_data_range():
    # global pointwise eigen-range of the ex41 coefficient is [0.3, 1.7]
    p = build_case("ex41a", 11, "Atilde1")
    w = p.spectrum()
    assert len(w) == 100
    assert w[0] >= 0.3 and w[-1] <= 1.7


@pytest.mark.parametrize("n", [5, 40, 120])
def test_jacobi_agrees_with_lapack(n):
    rng = np.random.default_rng(n)
    A, B = spd(rng, n), spd(rng, n)
    wj, Xj = gen_eig_dense(A, B, method="jacobi", return_vectors=True)
    wl = gen_eig_dense(A, B, method="lapack")
    np.testing.assert_allclose(wj, wl, rtol=1e-9)
    assert eigen_residuals(A, B, wj, Xj).max() <= 1e-10


def test_jacobi_eigh_matches_scipy():
    rng = np.random.default_rng(11)
    M = rng.standard_normal((33, 33))
    M = M + M.T
    w, V = jacobi_eigh(M)
    np.testing.assert_allclose(w, scipy.linalg.eigvalsh(M), atol=1e-11 * np.abs(M).max())
    np.testing.assert_allclose(V.T @ V, np.eye(33), atol=1e-12)


def test_dense_unknown_method():
    with pytest.raises(ContractError):
        gen_eig_dense(np.eye(2), np.eye(2), method="qr")


def test_dense_b_indefinite():
    with pytest.raises(DefinitenessError):
        gen_eig_dense(np.eye(2), [[1.0, 2.0], [2.0, 1.0]], method="jacobi")


def periodic_pencil(n=6):
    mesh = build_uniform_quad_mesh(((0.0, 1.0), (0.0, 1.0)), n, PERIODIC)
    A = assemble_diffusion(mesh, constant_field([[2.0, 0.3], [0.3, 1.0]]))
    B = assemble_diffusion(mesh, constant_field(np.eye(2)))
    return A, B


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_deflation_drops_kernel(method):
    A, B = periodic_pencil()
    w = gen_eig_dense(A, B, deflate_kernel=True, method=method)
    assert len(w) == A.shape[0] - 1
    assert w[0] > 0.5
    # compare with the pencil restricted to the orthogonal complement of constants
    Ad, Bd = A.toarray(), B.toarray()
    Q = scipy.linalg.null_space(np.ones((1, Ad.shape[0])))
    ref = scipy.linalg.eigh(Q.T @ Ad @ Q, Q.T @ Bd @ Q, eigvals_only=True)
    np.testing.assert_allclose(w, ref, rtol=1e-10)


def test_deflation_requires_shared_kernel():
    rng = np.random.default_rng(2)
    with pytest.raises(KernelError):
        gen_eig_dense(spd(rng, 5), spd(rng, 5), deflate_kernel=True)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 40), st.integers(-20, 20), st.integers(0, 2 ** 31))
def test_dense_scaling_is_exact(n, k, seed):
    rng = np.random.default_rng(seed)
    A, B = spd(rng, n), spd(rng, n)
    c = 2.0 ** k
    np.testing.assert_allclose(gen_eig_dense(c * A, B), c * gen_eig_dense(A, B), rtol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(0, 2 ** 31))
def test_dense_scaling_general_factor(c, seed):
    rng = np.random.default_rng(seed)
    A, B = spd(rng, 12), spd(rng, 12)
    np.testing.assert_allclose(gen_eig_dense(c * A, B), c * gen_eig_dense(A, B), rtol=1e-12)


def test_residuals_on_sparse_inputs():
    A, B = periodic_pencil(5)
    B = B + sp.identity(B.shape[0], format="csr")
    w, X = gen_eig_dense(A + B, B, return_vectors=True)
    assert eigen_residuals(A + B, B, w, X).max() <= 1e-12
    assert math.isclose(w[0], 1.0, rel_tol=1e-10)
