"""Dense symmetric linear algebra: Cholesky, Jacobi eigensolvers, pencils.

Two generalized eigensolvers live here.  ``gen_eig_small`` handles the
tiny d x d (or Voigt m x m) pencils evaluated per element by the bounds
code.  ``gen_eig_dense`` solves the full discrete pencil and serves as the
independent oracle the bounds are checked against.
"""
import math

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ContractError, DefinitenessError, KernelError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 30
# Above this order the dense oracle switches from Jacobi to LAPACK.
JACOBI_MAX_ORDER = 200


def _as_dense(M):
    if sp.issparse(M):
        return M.toarray()
    return np.array(M, dtype=float)


def cholesky(M):
    """Lower Cholesky factor ``L`` with ``L @ L.T == M``.

    Raises :class:`DefinitenessError` carrying the 1-based index of the
    first nonpositive pivot.
    """
    M = _as_dense(M)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ContractError(f"cholesky needs a square matrix, got {M.shape}")
    L = np.zeros_like(M)
    for j in range(n):
        row = L[j, :j]
        pivot = M[j, j] - row @ row
        if not pivot > 0.0:
            raise DefinitenessError(
                f"matrix is not positive definite (pivot {j + 1} = {pivot:.3e})",
                pivot=j + 1)
        L[j, j] = math.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ row) / L[j, j]
    return L


def forward_substitution(L, B):
    """Solve ``L X = B`` for lower-triangular ``L`` (vector or matrix B)."""
    B = np.asarray(B, dtype=float)
    X = np.empty_like(B)
    for i in range(L.shape[0]):
        X[i] = (B[i] - L[i, :i] @ X[:i]) / L[i, i]
    return X


def back_substitution(L, B):
    """Solve ``L.T X = B`` for lower-triangular ``L``."""
    B = np.asarray(B, dtype=float)
    X = np.empty_like(B)
    n = L.shape[0]
    for i in range(n - 1, -1, -1):
        X[i] = (B[i] - L[i + 1:, i] @ X[i + 1:]) / L[i, i]
    return X


def cholesky_solve(L, b):
    """Solve ``M x = b`` given the Cholesky factor ``L`` of ``M``."""
    return back_substitution(L, forward_substitution(L, b))


def _jacobi_small(a):
    """Cyclic Jacobi on a small symmetric matrix given as nested lists.

    Returns the sorted eigenvalues.  Works in place on ``a``.
    """
    n = len(a)
    norm2 = sum(a[i][j] ** 2 for i in range(n) for j in range(n))
    for _ in range(JACOBI_MAX_SWEEPS):
        off2 = sum(a[i][j] ** 2 for i in range(n) for j in range(n) if i != j)
        if off2 <= (JACOBI_TOL ** 2) * norm2:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
    return sorted(a[i][i] for i in range(n))


def gen_eig_small(A, B):
    """Eigenvalues of ``B^{-1} A`` for small symmetric A and SPD B (order <= 6).

    Uses a Cholesky congruence followed by cyclic Jacobi; order 2 is solved
    in closed form.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n, n):
        raise ContractError("gen_eig_small needs two square matrices of equal order")
    if n > 6:
        raise ContractError(f"gen_eig_small handles order <= 6, got {n}")
    L = cholesky(B)
    C = forward_substitution(L, forward_substitution(L, A).T)
    C = 0.5 * (C + C.T)
    if n == 1:
        return np.array([C[0, 0]])
    if n == 2:
        mean = 0.5 * (C[0, 0] + C[1, 1])
        rad = math.hypot(0.5 * (C[0, 0] - C[1, 1]), C[0, 1])
        return np.array([mean - rad, mean + rad])
    return np.array(_jacobi_small(C.tolist()))


def _round_robin(n):
    """Pairings for a parallel cyclic sweep: n-1 rounds of n/2 disjoint pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            P, Q = zip(*pairs)
            rounds.append((np.array(P), np.array(Q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(C):
    """Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi.

    Rotations within a round act on disjoint index pairs, so each round is
    applied as one vectorized update.  Returns ``(w, V)`` with ascending
    ``w`` and orthonormal columns ``V``.
    """
    A = np.array(C, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return A.diagonal().copy(), V
    norm = np.linalg.norm(A)
    rounds = _round_robin(n)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(max(norm ** 2 - float(np.sum(A.diagonal() ** 2)), 0.0))
        # recompute exactly when the cheap estimate says we may be done
        if off <= 10 * JACOBI_TOL * norm:
            off = np.linalg.norm(A - np.diag(A.diagonal()))
            if off <= JACOBI_TOL * norm:
                break
        for P, Q in rounds:
            apq = A[P, Q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            P, Q, apq = P[active], Q[active], apq[active]
            theta = (A[Q, Q] - A[P, P]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            Ap, Aq = A[:, P], A[:, Q]
            A[:, P] = Ap * c - Aq * s
            A[:, Q] = Ap * s + Aq * c
            Ap, Aq = A[P, :], A[Q, :]
            A[P, :] = c[:, None] * Ap - s[:, None] * Aq
            A[Q, :] = s[:, None] * Ap + c[:, None] * Aq
            Vp, Vq = V[:, P], V[:, Q]
            V[:, P] = Vp * c - Vq * s
            V[:, Q] = Vp * s + Vq * c
    w = A.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def kernel_basis(n, components=1):
    """Orthonormal basis of span{1 per component} in component-major layout."""
    if n % components:
        raise ContractError("order is not a multiple of the component count")
    N = n // components
    Z = np.zeros((n, components))
    for c in range(components):
        Z[c * N:(c + 1) * N, c] = 1.0 / math.sqrt(N)
    return Z


def gen_eig_dense(A, B, deflate_kernel=False, components=1, method="auto",
                  return_vectors=False):
    """All eigenvalues of the pencil ``A v = lambda B v``, ascending.

    With ``deflate_kernel`` both matrices must annihilate the constant
    vector(s) and the shared kernel is removed: ``B`` is replaced by
    ``B + Z Z^T`` (Z the normalized kernel basis), which maps the kernel to
    eigenvalue zero and leaves the rest of the spectrum unchanged; the kernel
    pairs are then dropped.

    ``method`` is ``"jacobi"`` (Cholesky congruence plus cyclic Jacobi),
    ``"lapack"`` or ``"auto"`` (Jacobi up to order ``JACOBI_MAX_ORDER``).
    """
    A = _as_dense(A)
    B = _as_dense(B)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n, n):
        raise ContractError(f"pencil orders differ: {A.shape} vs {B.shape}")
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_ORDER else "lapack"
    if method not in ("jacobi", "lapack"):
        raise ContractError(f"unknown method {method!r}")

    Z = None
    if deflate_kernel:
        Z = kernel_basis(n, components)
        for name, M in (("A", A), ("B", B)):
            scale = max(np.abs(M).max(), 1.0)
            if np.abs(M @ Z).max() > 1e-8 * scale:
                raise KernelError(f"{name} does not annihilate the constant kernel")
        B = B + Z @ Z.T

    if method == "lapack":
        try:
            w, X = scipy.linalg.eigh(A, B)
        except np.linalg.LinAlgError as exc:
            raise DefinitenessError(f"B is not positive definite: {exc}") from exc
    else:
        L = cholesky(B)
        C = forward_substitution(L, forward_substitution(L, A).T)
        C = 0.5 * (C + C.T)
        w, Y = jacobi_eigh(C)
        X = back_substitution(L, Y)

    if Z is not None:
        # X is B-orthonormal and Z^T B = Z^T, so |Z^T x| picks out the kernel.
        weight = np.abs(Z.T @ X).max(axis=0)
        drop = np.argsort(-weight, kind="stable")[:Z.shape[1]]
        keep = np.setdiff1d(np.arange(n), drop)
        w, X = w[keep], X[:, keep]

    if return_vectors:
        return w, X
    return w


def eigen_residuals(A, B, w, X):
    """Relative residuals ``|Av - lam Bv| / ((|A| + |lam||B|) |v|)`` per pair."""
    A = _as_dense(A)
    B = _as_dense(B)
    nA = np.linalg.norm(A, 2)
    nB = np.linalg.norm(B, 2)
    R = A @ X - (B @ X) * w
    return np.linalg.norm(R, axis=0) / ((nA + np.abs(w) * nB) * np.linalg.norm(X, axis=0))
