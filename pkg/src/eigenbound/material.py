"""Coefficient fields: diffusion tensors, Voigt elasticity matrices, Robin data.

A ``TensorField`` evaluates a symmetric positive definite matrix at points.
For bounds we also need its range over an element.  Closed-form fields ship
a ``range_vertices`` callable returning finitely many matrices whose convex
hull contains every value the field takes (up to null sets) on the element.
Extreme eigenvalues of a pencil with one constant member are attained at
such hull vertices, so the resulting element bounds are certified.  Fields
without a range evaluator are sampled instead and flagged non-certified.
"""
import json
import math

import numpy as np

from .errors import ContractError, IllPosedRatioError, ParameterError

CONSTANT = "CONSTANT"
ELEMENT_CONSTANT = "ELEMENT_CONSTANT"
CLOSED_FORM = "CLOSED_FORM"

SAMPLES_PER_AXIS = 5
EDGE_SAMPLES = 33


def sign(t):
    """Sign with sign(0) = +1, so example fields stay definite everywhere."""
    return np.where(np.asarray(t) >= 0, 1.0, -1.0)


def sample_points(coords, cell_type, k=SAMPLES_PER_AXIS):
    """A k x k grid of points on an element, corners included."""
    s = np.linspace(0.0, 1.0, k)
    u, v = (a.ravel() for a in np.meshgrid(s, s))
    if cell_type == "tri":
        # collapsed square -> triangle
        l1, l2 = u * (1 - v), v
        return coords[0] + np.outer(l1, coords[1] - coords[0]) + np.outer(l2, coords[2] - coords[0])
    N = np.stack([(1 - u) * (1 - v), u * (1 - v), u * v, (1 - u) * v], axis=1)
    return N @ coords


class TensorField:
    """Symmetric matrix-valued coefficient of size ``size`` (d or Voigt m).

    ``kind`` is CONSTANT (``value``), ELEMENT_CONSTANT (``values`` per
    element) or CLOSED_FORM (``func`` mapping points (M, 2) to (M, s, s)).
    ``quad_subcells`` asks assembly to split every element into that many
    sub-cells per axis, for fields with jumps inside elements.
    """

    def __init__(self, size, kind, value=None, values=None, func=None,
                 range_vertices=None, name=None, quad_subcells=1):
        self.size = int(size)
        self.kind = kind
        self.name = name or kind.lower()
        self.quad_subcells = quad_subcells
        self.range_vertices = range_vertices
        if kind == CONSTANT:
            self.value = np.array(value, dtype=float).reshape(self.size, self.size)
            _check_spd(self.value, self.name)
        elif kind == ELEMENT_CONSTANT:
            self.values = np.array(values, dtype=float).reshape(-1, self.size, self.size)
            for j, m in enumerate(self.values):
                _check_spd(m, f"{self.name}[element {j}]")
        elif kind == CLOSED_FORM:
            if func is None:
                raise ContractError("closed-form field needs func")
            self.func = func
        else:
            raise ContractError(f"unknown field kind {kind!r}")

    def __call__(self, x, elems=None):
        """Evaluate at points ``x`` (M, 2); ``elems`` gives each point's element."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == CONSTANT:
            return np.broadcast_to(self.value, (len(x), self.size, self.size))
        if self.kind == ELEMENT_CONSTANT:
            if elems is None:
                raise ContractError("element-constant field needs element ids")
            return self.values[np.broadcast_to(np.asarray(elems), (len(x),))]
        return np.asarray(self.func(x), dtype=float)

    def scaled(self, c):
        """The field ``c * self``."""
        if self.kind == CONSTANT:
            return TensorField(self.size, CONSTANT, value=c * self.value, name=f"{c}*{self.name}")
        if self.kind == ELEMENT_CONSTANT:
            return TensorField(self.size, ELEMENT_CONSTANT, values=c * self.values,
                               name=f"{c}*{self.name}")
        rv = None
        if self.range_vertices is not None:
            rv = lambda coords: c * self.range_vertices(coords)  # noqa: E731
        return TensorField(self.size, CLOSED_FORM, func=lambda x: c * self.func(x),
                           range_vertices=rv, name=f"{c}*{self.name}",
                           quad_subcells=self.quad_subcells)

    def element_range(self, mesh, j):
        """``(matrices, certified)`` describing the field's range on element j."""
        if self.kind == CONSTANT:
            return self.value[None], True
        if self.kind == ELEMENT_CONSTANT:
            return self.values[j][None], True
        coords = mesh.element_coords(j)
        if self.range_vertices is not None:
            return np.asarray(self.range_vertices(coords), dtype=float), True
        pts = sample_points(coords, mesh.cell_type)
        return self(pts, np.full(len(pts), j)), False

    def __repr__(self):
        return f"TensorField({self.name!r}, size={self.size}, kind={self.kind})"


def _check_spd(m, name):
    if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise ParameterError(f"{name} is not symmetric")
    if np.linalg.eigvalsh(0.5 * (m + m.T))[0] <= 0:
        raise ParameterError(f"{name} is not positive definite")


def constant_field(value, name=None):
    value = np.asarray(value, dtype=float)
    return TensorField(value.shape[0], CONSTANT, value=value, name=name)


def element_field(values, name=None):
    values = np.asarray(values, dtype=float)
    return TensorField(values.shape[-1], ELEMENT_CONSTANT, values=values, name=name)


def load_field_json(source):
    """Load a constant or element-constant field from JSON text, dict or path."""
    if isinstance(source, dict):
        spec = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            spec = json.loads(text)
        else:
            with open(text) as fh:
                spec = json.load(fh)
    size = spec.get("d", spec.get("m"))
    kind = spec.get("kind", "").lower()
    if kind == "constant":
        field = constant_field(spec["value"], spec.get("name"))
    elif kind == "element_constant":
        field = element_field(spec["values"], spec.get("name"))
    else:
        raise ParameterError(f"unsupported field kind {spec.get('kind')!r}")
    if size is not None and field.size != int(size):
        raise ParameterError(f"declared size {size} does not match matrices of size {field.size}")
    return field


# -- Voigt matrices --------------------------------------------------------------

def voigt_cubic(c11, c12, c44, d=3):
    """Voigt matrix of a cubic material (3x3 for d=2, 6x6 for d=3)."""
    if d == 2:
        return np.array([[c11, c12, 0.0], [c12, c11, 0.0], [0.0, 0.0, c44]])
    if d == 3:
        C = np.zeros((6, 6))
        C[:3, :3] = c12
        C[[0, 1, 2], [0, 1, 2]] = c11
        C[[3, 4, 5], [3, 4, 5]] = c44
        return C
    raise ParameterError(f"d must be 2 or 3, got {d}")


def voigt_isotropic(E, nu, d=3):
    """Isotropic Voigt matrix from Young's modulus and Poisson ratio.

    For d=2 this is the plane-strain reduction.
    """
    if not E > 0:
        raise ParameterError(f"Young's modulus must be positive, got {E}")
    if not -1.0 < nu < 0.5:
        raise ParameterError(f"Poisson ratio must lie in (-1, 1/2), got {nu}")
    k = E / ((1 + nu) * (1 - 2 * nu))
    return voigt_cubic(k * (1 - nu), k * nu, E / (2 * (1 + nu)), d)


# -- one-dimensional range helpers -----------------------------------------------

def _piece_midpoints(lo, hi, cuts):
    """Midpoints of the pieces (lo, hi) is split into by ``cuts``."""
    pts = [lo] + sorted(c for c in cuts if lo < c < hi) + [hi]
    return [0.5 * (a + b) for a, b in zip(pts[:-1], pts[1:])]


def _multiples_in(step, offset):
    def points(lo, hi):
        k0 = math.ceil((lo - offset) / step)
        k1 = math.floor((hi - offset) / step)
        return [offset + k * step for k in range(k0, k1 + 1)]
    return points


def sin_signs(lo, hi):
    """Values of sign(sin t) on positive-measure parts of (lo, hi)."""
    mids = _piece_midpoints(lo, hi, _multiples_in(math.pi, 0.0)(lo, hi))
    return sorted({float(sign(math.sin(m))) for m in mids})


def linear_signs(lo, hi):
    """Values of sign(t) on positive-measure parts of (lo, hi)."""
    return sorted({float(sign(m)) for m in _piece_midpoints(lo, hi, [0.0])})


def cos_range(lo, hi):
    pts = [lo, hi] + _multiples_in(math.pi, 0.0)(lo, hi)
    vals = [math.cos(t) for t in pts]
    return min(vals), max(vals)


def sin_range(lo, hi):
    pts = [lo, hi] + _multiples_in(math.pi, math.pi / 2)(lo, hi)
    vals = [math.sin(t) for t in pts]
    return min(vals), max(vals)


# -- example fields ---------------------------------------------------------------

ATILDE2 = np.array([[1.0, 0.3], [0.3, 1.0]])


def _ex41_matrix(a, b):
    return np.array([[a, b], [b, a]])


def _ex41_func(x):
    a = 1.0 + 0.3 * sign(np.sin(x[:, 1]))
    b = 0.3 + 0.1 * np.cos(x[:, 0])
    out = np.empty((len(x), 2, 2))
    out[:, 0, 0] = out[:, 1, 1] = a
    out[:, 0, 1] = out[:, 1, 0] = b
    return out


def _ex41_range(coords):
    x_lo, x_hi = coords[:, 0].min(), coords[:, 0].max()
    y_lo, y_hi = coords[:, 1].min(), coords[:, 1].max()
    b_lo, b_hi = cos_range(x_lo, x_hi)
    mats = []
    for s in sin_signs(y_lo, y_hi):
        a = 1.0 + 0.3 * s
        for b in sorted({0.3 + 0.1 * b_lo, 0.3 + 0.1 * b_hi}):
            mats.append(_ex41_matrix(a, b))
    return np.array(mats)


def _ex45_modulus(x):
    return 1.0 + 0.3 * sign(x[:, 0] * x[:, 1])


def _ex45_func(x):
    return _ex45_modulus(x)[:, None, None] * voigt_isotropic(1.0, 0.2, 2)


def _ex45_range(coords):
    s1 = linear_signs(coords[:, 0].min(), coords[:, 0].max())
    s2 = linear_signs(coords[:, 1].min(), coords[:, 1].max())
    moduli = sorted({1.0 + 0.3 * float(sign(a * b)) for a in s1 for b in s2})
    return np.array([E * voigt_isotropic(1.0, 0.2, 2) for E in moduli])


def _ex46_func(x):
    s = np.sin(x[:, 0] + x[:, 1])
    return s[:, None, None] * np.eye(2)


def _ex46_range(coords):
    t = coords[:, 0] + coords[:, 1]
    lo, hi = sin_range(t.min(), t.max())
    return np.array([lo * np.eye(2), hi * np.eye(2)])


def _build_examples():
    return {
        "ex41-A": lambda: TensorField(2, CLOSED_FORM, func=_ex41_func, range_vertices=_ex41_range,
                                      name="ex41-A", quad_subcells=4),
        "ex41-Atilde1": lambda: constant_field(np.eye(2), "ex41-Atilde1"),
        "ex41-Atilde2": lambda: constant_field(ATILDE2, "ex41-Atilde2"),
        "ex45-C": lambda: TensorField(3, CLOSED_FORM, func=_ex45_func, range_vertices=_ex45_range,
                                      name="ex45-C", quad_subcells=4),
        "ex45-Ctilde1": lambda: constant_field(voigt_isotropic(1.0, 0.0, 2), "ex45-Ctilde1"),
        "ex45-Ctilde2": lambda: constant_field(voigt_isotropic(1.0, 0.2, 2), "ex45-Ctilde2"),
        "ex46-A": lambda: TensorField(2, CLOSED_FORM, func=_ex46_func, range_vertices=_ex46_range,
                                      name="ex46-A"),
        "ex46-I": lambda: constant_field(np.eye(2), "ex46-I"),
    }


EXAMPLE_FIELDS = _build_examples()


def example_field(name):
    """Coefficient field of one of the bundled examples, by case id."""
    try:
        return EXAMPLE_FIELDS[name]()
    except KeyError:
        raise KeyError(f"unknown example field {name!r}; known: {', '.join(EXAMPLE_FIELDS)}") from None


# -- Robin coefficients ------------------------------------------------------------

class RobinField:
    """Nonnegative scalar g3 on ROBIN edges.

    CONSTANT (``value``), ELEMENT_CONSTANT meaning constant per boundary edge
    (``values`` keyed by ``(element, local_edge)``, missing edges are 0) or
    CLOSED_FORM (``func`` of points (M, 2)).
    """

    def __init__(self, kind, value=None, values=None, func=None, name=None):
        self.kind = kind
        self.name = name or kind.lower()
        if kind == CONSTANT:
            if value < 0:
                raise ParameterError("Robin coefficient must be nonnegative")
            self.value = float(value)
        elif kind == ELEMENT_CONSTANT:
            self.values = {tuple(k): float(v) for k, v in dict(values).items()}
            if any(v < 0 for v in self.values.values()):
                raise ParameterError("Robin coefficient must be nonnegative")
        elif kind == CLOSED_FORM:
            self.func = func
        else:
            raise ContractError(f"unknown Robin field kind {kind!r}")

    def __call__(self, x, edge=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == CONSTANT:
            return np.full(len(x), self.value)
        if self.kind == ELEMENT_CONSTANT:
            return np.full(len(x), self.values.get(tuple(edge), 0.0))
        vals = np.asarray(self.func(x), dtype=float)
        if np.any(vals < 0):
            raise ParameterError(f"Robin coefficient {self.name} is negative")
        return vals

    @property
    def piecewise_constant(self):
        return self.kind != CLOSED_FORM

    def __repr__(self):
        return f"RobinField({self.name!r}, kind={self.kind})"


def example_robin(name):
    if name == "ex41c-g3":
        return RobinField(CLOSED_FORM, func=lambda x: 1.0 + x[:, 1] ** 2, name="ex41c-g3")
    raise KeyError(f"unknown example Robin field {name!r}")


def _robin_ratio(g3, g3t, mesh, edge):
    """``((lo, hi) or None, certified)`` for g3 / g3t on one boundary edge."""
    a, b = mesh.edge_vertices(*edge)
    p, q = mesh.vertices[a], mesh.vertices[b]
    if g3 is None:
        return None, True
    exact = g3.piecewise_constant and (g3t is None or g3t.piecewise_constant)
    if exact:
        pts = p[None]
    else:
        s = np.linspace(0.0, 1.0, EDGE_SAMPLES)[:, None]
        pts = p + s * (q - p)
    num = g3(pts, edge)
    den = np.zeros_like(num) if g3t is None else g3t(pts, edge)
    nz = num != 0
    if not nz.any():
        return None, exact
    if np.any(den[nz] == 0):
        raise IllPosedRatioError(f"g3 is nonzero where the preconditioner's g3 vanishes on edge {edge}")
    if g3 is g3t:
        return (1.0, 1.0), True
    ratio = num[nz] / den[nz]
    return (float(ratio.min()), float(ratio.max())), exact


def robin_ratio_extremes(g3, g3t, mesh, edge):
    """Extremes of g3 / g3t over the part of ``edge`` where g3 != 0.

    ``edge`` is ``(element, local_edge)``.  Returns None when g3 vanishes on
    the edge.  Closed-form coefficients are sampled unless both are the same
    object.
    """
    return _robin_ratio(g3, g3t, mesh, edge)[0]
