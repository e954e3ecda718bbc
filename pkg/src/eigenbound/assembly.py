"""Global stiffness matrices for diffusion (with Robin mass) and 2-D elasticity.

Element integrals use 2x2 Gauss points on quads and the 3-point interior
rule on triangles, optionally repeated on sub-cells for coefficients that
jump inside elements.  All quadrature weights are positive and all points
lie inside the element, so an assembled pencil obeys the same pointwise
Rayleigh-quotient estimates as the exactly integrated one, as long as both
matrices are built with the same rule.
"""
import math

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import ContractError, UnsupportedBoundaryError
from .mesh import DIRICHLET, ROBIN

_G = 1.0 / math.sqrt(3.0)
QUAD_NODES = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def quadrature(cell_type, subcells=1):
    """Reference points and weights (reference square [-1,1]^2 or unit triangle)."""
    s = int(subcells)
    if cell_type == "quad":
        g = np.array([-_G, _G])
        pts, wts = [], []
        for i in range(s):
            for j in range(s):
                cx, cy = -1 + (2 * i + 1) / s, -1 + (2 * j + 1) / s
                for gy in g:
                    for gx in g:
                        pts.append((cx + gx / s, cy + gy / s))
                        wts.append(1.0 / s ** 2)
        return np.array(pts), np.array(wts)
    bary = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
    subtri = []
    for i in range(s):
        for j in range(s - i):
            subtri.append([(i, j), (i + 1, j), (i, j + 1)])
            if i + j < s - 1:
                subtri.append([(i + 1, j), (i + 1, j + 1), (i, j + 1)])
    pts = [bary @ (np.array(t, dtype=float) / s) for t in subtri]
    pts = np.concatenate(pts)
    return pts, np.full(len(pts), 1.0 / (6 * s * s))


def shape_functions(cell_type, pts):
    """Values (Q, k) and reference gradients (Q, k, 2) at reference points."""
    if cell_type == "quad":
        xi, eta = pts[:, 0:1], pts[:, 1:2]
        a, b = QUAD_NODES[:, 0], QUAD_NODES[:, 1]
        N = 0.25 * (1 + xi * a) * (1 + eta * b)
        dN = np.stack([0.25 * a * (1 + eta * b), 0.25 * b * (1 + xi * a)], axis=-1)
        return N, dN
    xi, eta = pts[:, 0], pts[:, 1]
    N = np.stack([1 - xi - eta, xi, eta], axis=1)
    dN = np.broadcast_to(np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]), (len(pts), 3, 2))
    return N, dN


def element_geometry(mesh, subcells=1):
    """Physical quadrature points (E, Q, 2), gradients (E, Q, k, 2), weights (E, Q)."""
    ref_pts, ref_w = quadrature(mesh.cell_type, subcells)
    N, dN = shape_functions(mesh.cell_type, ref_pts)
    coords = mesh.vertices[mesh.elements]                      # (E, k, 2)
    X = np.einsum("qa,eai->eqi", N, coords)
    J = np.einsum("qaj,eai->eqij", dN, coords)                 # J[i, j] = dx_i / dxi_j
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    Jinv = np.empty_like(J)
    Jinv[..., 0, 0] = J[..., 1, 1] / det
    Jinv[..., 1, 1] = J[..., 0, 0] / det
    Jinv[..., 0, 1] = -J[..., 0, 1] / det
    Jinv[..., 1, 0] = -J[..., 1, 0] / det
    grads = np.einsum("qaj,eqji->eqai", dN, Jinv)
    return X, grads, ref_w[None, :] * det, N


def _evaluate(field, X):
    E, Q = X.shape[:2]
    elems = np.repeat(np.arange(E), Q)
    vals = field(X.reshape(-1, 2), elems)
    return np.asarray(vals).reshape(E, Q, field.size, field.size)


def _to_global(mesh, local, index, order):
    """Scatter element matrices (E, n, n) through ``index`` (E, n) into CSR."""
    local = 0.5 * (local + np.swapaxes(local, 1, 2))
    n = index.shape[1]
    rows = np.repeat(index, n, axis=1).ravel()
    cols = np.tile(index, (1, n)).ravel()
    vals = local.ravel()
    keep = (rows >= 0) & (cols >= 0)
    M = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(order, order))
    M = M.tocsr()
    M.sum_duplicates()
    M.sort_indices()
    return M


def common_subcells(*fields):
    """Sub-cell count to use for a pencil so both matrices share one rule."""
    return max(getattr(f, "quad_subcells", 1) for f in fields if f is not None)


def assemble_diffusion(mesh, field, g3=None, subcells=None):
    """Stiffness matrix of grad v . A grad u plus the Robin mass g3 u v.

    The Robin term is integrated with 2-point Gauss on ROBIN-tagged edges.
    """
    if field.size != 2:
        raise ContractError(f"diffusion field has size {field.size}, mesh is 2-D")
    if subcells is None:
        subcells = field.quad_subcells
    X, grads, w, _ = element_geometry(mesh, subcells)
    A = _evaluate(field, X)
    local = np.einsum("eqai,eqij,eqbj,eq->eab", grads, A, grads, w)
    index = mesh.dof_map[mesh.elements]
    M = _to_global(mesh, local, index, mesh.n_dofs)
    if g3 is not None:
        M = M + robin_mass(mesh, g3)
    return M


def robin_mass(mesh, g3):
    """Boundary mass matrix of g3 over ROBIN edges (2-point Gauss per edge)."""
    edges = mesh.edges_with_tag(ROBIN)
    if not edges:
        return sp.csr_matrix((mesh.n_dofs, mesh.n_dofs))
    t = np.array([0.5 - 0.5 * _G, 0.5 + 0.5 * _G])
    phi = np.stack([1 - t, t], axis=1)                          # (2 points, 2 nodes)
    local, index = [], []
    for e, le in edges:
        a, b = mesh.edge_vertices(e, le)
        p, q = mesh.vertices[a], mesh.vertices[b]
        pts = p + t[:, None] * (q - p)
        length = float(np.linalg.norm(q - p))
        g = g3(pts, (e, le))
        local.append(np.einsum("q,qa,qb->ab", 0.5 * length * g, phi, phi))
        index.append(mesh.dof_map[[a, b]])
    return _to_global(mesh, np.array(local), np.array(index), mesh.n_dofs)


def assemble_elasticity_2d(mesh, field, subcells=None):
    """Plane elasticity stiffness with Voigt matrix ``field`` (3x3).

    Unknowns are ordered component-major: all u1 DOFs, then all u2 DOFs.
    Only homogeneous Dirichlet boundaries are supported.
    """
    if field.size != 3:
        raise ContractError(f"2-D elasticity needs a 3x3 Voigt field, got size {field.size}")
    bad = {tag for _, _, tag in mesh.boundary_edges if tag != DIRICHLET}
    if bad or mesh.periodic:
        raise UnsupportedBoundaryError(
            f"elasticity supports homogeneous Dirichlet boundaries only, found {sorted(bad) or 'PERIODIC'}")
    if subcells is None:
        subcells = field.quad_subcells
    X, grads, w, _ = element_geometry(mesh, subcells)
    C = _evaluate(field, X)
    E, Q, k, _ = grads.shape
    B = np.zeros((E, Q, 3, 2 * k))
    B[:, :, 0, :k] = grads[..., 0]
    B[:, :, 1, k:] = grads[..., 1]
    B[:, :, 2, :k] = grads[..., 1]
    B[:, :, 2, k:] = grads[..., 0]
    local = np.einsum("eqia,eqij,eqjb,eq->eab", B, C, B, w)
    N = mesh.n_dofs
    dofs = mesh.dof_map[mesh.elements]
    index = np.concatenate([dofs, np.where(dofs >= 0, dofs + N, -1)], axis=1)
    return _to_global(mesh, local, index, 2 * N)


def assemble_load(mesh, f, components=1):
    """Load vector with entries int f phi_k (per component, component-major).

    ``f`` is a constant, a sequence of ``components`` constants, or a
    callable of points (M, 2) returning (M,) or (M, components).
    """
    X, _, w, N = element_geometry(mesh, 1)
    E, Q = w.shape
    if callable(f):
        vals = np.asarray(f(X.reshape(-1, 2)), dtype=float).reshape(E, Q, -1)
    else:
        vals = np.asarray(f, dtype=float).reshape(1, 1, -1)
    if vals.shape[-1] != components:
        raise ContractError(f"load has {vals.shape[-1]} components, expected {components}")
    vals = np.broadcast_to(vals, (E, Q, components))
    n = mesh.n_dofs
    b = np.zeros(components * n)
    dofs = mesh.dof_map[mesh.elements]
    keep = dofs >= 0
    for c in range(components):
        local = np.einsum("eq,qa,eq->ea", vals[..., c], N, w)
        np.add.at(b, dofs[keep] + c * n, local[keep])
    return b


def write_matrix_market(target, M, comment=""):
    """Write a symmetric matrix in Matrix Market coordinate format (17 digits)."""
    scipy.io.mmwrite(target, sp.coo_matrix(M), comment=comment, field="real",
                     precision=17, symmetry="symmetric")
