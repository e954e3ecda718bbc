"""Guaranteed two-sided bounds on every eigenvalue of a preconditioned pencil.

For each element we take the extreme eigenvalues of the pointwise pencil
``(A(x), Atilde(x))`` (merged with the Robin coefficient ratio on attached
Robin edges).  Each DOF gets the min / max of these over its patch; sorting
the two sequences gives bounds ``lower_sorted[k] <= lambda_k <= upper_sorted[k]``
on the ascending eigenvalues of ``Atilde^{-1} A``.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DefinitenessError, PreconditionError, TopologyError
from .material import CONSTANT, ELEMENT_CONSTANT, _robin_ratio, sample_points
from .mesh import ROBIN
from .smalleig import gen_eig_small

REGULAR = "REGULAR"
SINGULAR_SHIFT = "SINGULAR_SHIFT"


@dataclass(frozen=True)
class ElementAlpha:
    element: int
    alpha_min: float
    alpha_max: float
    certified: bool
    robin: tuple = None


@dataclass
class BoundsResult:
    """Raw per-DOF bounds, the sorting permutations and the sorted sequences.

    ``r`` and ``s`` are 0-based: ``lower_sorted = lower[r]``.
    """
    lower: np.ndarray
    upper: np.ndarray
    r: np.ndarray
    s: np.ndarray
    lower_sorted: np.ndarray
    upper_sorted: np.ndarray
    mode: str = REGULAR
    replication: int = 1
    certified: bool = True
    element_alphas: list = field(default=None, repr=False)

    def __len__(self):
        return len(self.lower)

    def write_csv(self, stream, spectrum=None):
        """Rows ``k,lambda_L,lambda_U[,lambda]`` over sorted indices (1-based k)."""
        writer = csv.writer(stream, lineterminator="\n")
        header = ["k", "lambda_L", "lambda_U"]
        lam = None
        if spectrum is not None:
            header.append("lambda")
            lam = np.asarray(spectrum, dtype=float)
            if self.mode == SINGULAR_SHIFT:
                lam = np.concatenate([[0.0], lam])
        writer.writerow(header)
        for k in range(len(self)):
            row = [k + 1, f"{self.lower_sorted[k]:.17g}", f"{self.upper_sorted[k]:.17g}"]
            if lam is not None:
                row.append(f"{lam[k]:.17g}")
            writer.writerow(row)


def _sorted_result(lower, upper, **kwargs):
    r = np.argsort(lower, kind="stable")
    s = np.argsort(upper, kind="stable")
    return BoundsResult(lower=lower, upper=upper, r=r, s=s,
                        lower_sorted=lower[r], upper_sorted=upper[s], **kwargs)


def _pair_extremes(VA, VT, element):
    lo, hi = math.inf, -math.inf
    for t in VT:
        for a in VA:
            try:
                w = gen_eig_small(a, t)
            except DefinitenessError as exc:
                raise DefinitenessError(
                    f"preconditioner data is not positive definite on element {element}") from exc
            lo, hi = min(lo, w[0]), max(hi, w[-1])
    return lo, hi


def tensor_extremes(mesh, j, A, At):
    """Extreme eigenvalues of ``At(x)^{-1} A(x)`` over element j and a
    certified flag.

    With one member constant on the element the extremes over the range
    vertices are exact (or safe) bounds.  Otherwise both fields are sampled
    at the same points and the result is not certified.
    """
    VA, cert_a = A.element_range(mesh, j)
    VT, cert_t = At.element_range(mesh, j)
    if cert_a and cert_t and (len(VA) == 1 or len(VT) == 1):
        lo, hi = _pair_extremes(VA, VT, j)
        certified = True
    else:
        pts = sample_points(mesh.element_coords(j), mesh.cell_type)
        elems = np.full(len(pts), j)
        lo, hi = math.inf, -math.inf
        for a, t in zip(A(pts, elems), At(pts, elems)):
            l, h = _pair_extremes([a], [t], j)
            lo, hi = min(lo, l), max(hi, h)
        certified = False
    if lo < 0 or not hi > 0:
        raise DefinitenessError(f"coefficient data is not positive definite on element {j}")
    return lo, hi, certified


def _robin_edges_by_element(mesh):
    out = {}
    for e, le in mesh.edges_with_tag(ROBIN):
        out.setdefault(e, []).append(le)
    return out


def element_alpha(mesh, j, A, At, g3=None, g3t=None, _robin_edges=None):
    """Element extremes alpha_min / alpha_max, Robin ratio merged in."""
    lo, hi, certified = tensor_extremes(mesh, j, A, At)
    robin_edges = _robin_edges if _robin_edges is not None else _robin_edges_by_element(mesh)
    robin = None
    for le in robin_edges.get(j, ()):
        ratio, exact = _robin_ratio(g3, g3t, mesh, (j, le))
        certified = certified and exact
        if ratio is None:
            continue
        robin = ratio if robin is None else (min(robin[0], ratio[0]), max(robin[1], ratio[1]))
    if robin is not None:
        lo, hi = min(lo, robin[0]), max(hi, robin[1])
    return ElementAlpha(j, lo, hi, certified, robin)


def _cache_key(field, mesh, j):
    if field.kind == CONSTANT:
        return "c"
    if field.kind == ELEMENT_CONSTANT:
        return field.values[j].tobytes()
    return None


def all_element_alphas(mesh, A, At, g3=None, g3t=None):
    robin_edges = _robin_edges_by_element(mesh)
    cache = {}
    alphas = []
    for j in range(mesh.n_elements):
        ka, kt = _cache_key(A, mesh, j), _cache_key(At, mesh, j)
        if ka is not None and kt is not None and j not in robin_edges:
            key = (ka, kt)
            if key not in cache:
                cache[key] = tensor_extremes(mesh, j, A, At)
            lo, hi, cert = cache[key]
            alphas.append(ElementAlpha(j, lo, hi, cert))
        else:
            alphas.append(element_alpha(mesh, j, A, At, g3, g3t, robin_edges))
    return alphas


def _patch_bounds(mesh, alphas):
    amin = np.array([a.alpha_min for a in alphas])
    amax = np.array([a.alpha_max for a in alphas])
    lower = np.empty(mesh.n_dofs)
    upper = np.empty(mesh.n_dofs)
    for k, patch in enumerate(mesh.patches):
        if not patch:
            raise TopologyError(f"DOF {k} has an empty patch")
        idx = list(patch)
        lower[k] = amin[idx].min()
        upper[k] = amax[idx].max()
    return lower, upper


def diffusion_bounds(mesh, A, At, g3=None, g3t=None, singular=False):
    """Sorted lower/upper bound sequences for the diffusion pencil.

    With ``singular`` (pure periodic or Neumann data sharing a
    one-dimensional kernel) the result is in SINGULAR_SHIFT mode: the k-th
    nonzero eigenvalue, k >= 2, lies in ``[lower_sorted[k-2], upper_sorted[k-1]]``
    with 0-based sequence indices.
    """
    if A.size != At.size:
        raise ContractError("coefficient fields differ in size")
    alphas = all_element_alphas(mesh, A, At, g3, g3t)
    lower, upper = _patch_bounds(mesh, alphas)
    return _sorted_result(lower, upper, mode=SINGULAR_SHIFT if singular else REGULAR,
                          certified=all(a.certified for a in alphas), element_alphas=alphas)


def elasticity_bounds(mesh, C, Ct, d=2):
    """Bounds for the elasticity pencil: patch extremes replicated d times.

    Raw sequences follow the matrix layout (component-major), so
    ``lower[c * N + k]`` is the patch bound of DOF k.
    """
    if d != 2:
        raise ContractError("only d = 2 elasticity is assembled")
    if C.size != Ct.size or C.size != 3:
        raise ContractError("elasticity needs two 3x3 Voigt fields")
    alphas = all_element_alphas(mesh, C, Ct)
    hat_lower, hat_upper = _patch_bounds(mesh, alphas)
    return _sorted_result(np.tile(hat_lower, d), np.tile(hat_upper, d), replication=d,
                          certified=all(a.certified for a in alphas), element_alphas=alphas)


@dataclass
class SpectrumReport:
    passed: bool
    verdicts: np.ndarray
    failures: list
    lower_margin: float
    upper_margin: float
    mean_width: float
    n_checked: int
    mode: str
    certified: bool

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "mode": self.mode,
            "certified": bool(self.certified),
            "n_checked": int(self.n_checked),
            "n_failures": len(self.failures),
            "failures": [int(k) for k in self.failures[:50]],
            "min_lower_margin": float(self.lower_margin),
            "min_upper_margin": float(self.upper_margin),
            "mean_interval_width": float(self.mean_width),
        }


def bracket_intervals(bounds, n_eigs):
    """Lower and upper bound assigned to each of ``n_eigs`` sorted eigenvalues."""
    if bounds.mode == SINGULAR_SHIFT:
        if n_eigs != len(bounds) - 1:
            raise ContractError(f"singular mode expects {len(bounds) - 1} eigenvalues, got {n_eigs}")
        return bounds.lower_sorted[:-1], bounds.upper_sorted[1:]
    if n_eigs != len(bounds):
        raise ContractError(f"expected {len(bounds)} eigenvalues, got {n_eigs}")
    return bounds.lower_sorted, bounds.upper_sorted


def verify_bracketing(bounds, spectrum, rel_slack=1e-9):
    """Check ``lo[k] - eps <= lambda_k <= hi[k] + eps``, eps = rel_slack * max(1, |lambda_k|).

    Failures are reported as 0-based positions in ``spectrum``.
    """
    lam = np.asarray(spectrum, dtype=float)
    lo, hi = bracket_intervals(bounds, len(lam))
    eps = rel_slack * np.maximum(1.0, np.abs(lam))
    ok = (lo - eps <= lam) & (lam <= hi + eps)
    return SpectrumReport(
        passed=bool(ok.all()),
        verdicts=ok,
        failures=[int(k) for k in np.nonzero(~ok)[0]],
        lower_margin=float(np.min(lam - lo)) if len(lam) else math.inf,
        upper_margin=float(np.min(hi - lam)) if len(lam) else math.inf,
        mean_width=float(np.mean(hi - lo)) if len(lam) else 0.0,
        n_checked=len(lam),
        mode=bounds.mode,
        certified=bounds.certified,
    )


def exact_eigenvalue_check(mesh, A, At, c, dofs, spectrum, g3=None, g3t=None,
                           components=1, tol=1e-8):
    """Count eigenvalues within ``tol`` of ``c`` after checking the hypotheses
    that force ``c`` to have multiplicity at least ``components * len(dofs)``:
    ``At^{-1} A = c I`` on every listed patch and no listed patch touches a
    Robin edge with nonzero coefficient.
    """
    robin_edges = _robin_edges_by_element(mesh)
    for k in dofs:
        for j in sorted(mesh.patches[k]):
            VA, cert_a = A.element_range(mesh, j)
            VT, cert_t = At.element_range(mesh, j)
            if not (cert_a and cert_t) or (len(VA) > 1 and len(VT) > 1):
                raise PreconditionError(f"patch of DOF {k}: cannot certify the data on element {j}")
            for a in VA:
                for t in VT:
                    if np.abs(a - c * t).max() > 1e-12 * max(1.0, np.abs(t).max()):
                        raise PreconditionError(
                            f"patch of DOF {k}: Atilde^-1 A != {c} I on element {j}")
            for le in robin_edges.get(j, ()):
                pts = mesh.vertices[list(mesh.edge_vertices(j, le))]
                for g in (g3, g3t):
                    if g is not None and np.any(g(pts, (j, le)) != 0):
                        raise PreconditionError(f"patch of DOF {k} touches a Robin edge")
    lam = np.asarray(spectrum, dtype=float)
    return int(np.sum(np.abs(lam - c) <= tol))


def dofs_with_constant_ratio(mesh, A, At, c, rtol=1e-12):
    """DOFs whose whole patch has ``A = c * At`` (certified, no Robin edges).

    These are the patches that :func:`exact_eigenvalue_check` accepts.
    """
    robin_edges = _robin_edges_by_element(mesh)
    good = np.zeros(mesh.n_elements, dtype=bool)
    for j in range(mesh.n_elements):
        if j in robin_edges:
            continue
        VA, cert_a = A.element_range(mesh, j)
        VT, cert_t = At.element_range(mesh, j)
        if not (cert_a and cert_t) or (len(VA) > 1 and len(VT) > 1):
            continue
        good[j] = all(np.abs(a - c * t).max() <= rtol * max(1.0, np.abs(t).max())
                      for a in VA for t in VT)
    return [k for k, patch in enumerate(mesh.patches) if patch and all(good[j] for j in patch)]
