"""Preconditioned conjugate gradients with exact energy-norm error tracking."""
import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .smalleig import _as_dense, cholesky, cholesky_solve


@dataclass
class PCGReport:
    iterations: int
    converged: bool
    energy_error_history: list = field(default_factory=list)
    x: np.ndarray = field(default=None, repr=False)

    def write_csv(self, stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["iter", "relative_energy_error"])
        for k, e in enumerate(self.energy_error_history):
            writer.writerow([k, f"{e:.17g}"])


def _energy(A, v):
    return float(np.sqrt(max(v @ (A @ v), 0.0)))


def pcg_solve(A, Atilde, b, factor=1e-9, maxiter=None):
    """Solve ``A x = b`` by PCG from ``x0 = 0`` with preconditioner ``Atilde``.

    The exact solution is obtained by a dense Cholesky solve, and the
    iteration stops at the first k with ``|x* - x_k|_A <= factor |x*|_A``.
    The preconditioner is applied through a Cholesky factor of ``Atilde``.
    """
    b = np.asarray(b, dtype=float)
    n = len(b)
    if A.shape != (n, n) or Atilde.shape != (n, n):
        raise ContractError("A, Atilde and b must have matching sizes")
    if maxiter is None:
        maxiter = 10 * n
    L = cholesky(A)
    Lt = cholesky(Atilde)
    A = A.tocsr() if hasattr(A, "tocsr") else _as_dense(A)
    x_star = cholesky_solve(L, b)
    ref = _energy(A, x_star)
    x = np.zeros(n)
    history = [1.0]
    if ref == 0.0:
        return PCGReport(0, True, history, x)

    r = b.copy()
    z = cholesky_solve(Lt, r)
    p = z.copy()
    rz = r @ z
    for k in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rel = _energy(A, x_star - x) / ref
        history.append(rel)
        if rel <= factor:
            return PCGReport(k, True, history, x)
        z = cholesky_solve(Lt, r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return PCGReport(maxiter, False, history, x)
