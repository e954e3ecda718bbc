"""Conforming 2-D meshes (Q1 quads, P1 triangles), DOF numbering and patches.

Degrees of freedom are nodal.  A vertex on a DIRICHLET edge carries no
DOF; periodic slave vertices share the DOF of their master.  The patch of a
DOF is the set of elements touching any vertex that carries it, which is
the smallest union of elements covering the support of its basis function.
"""
import math
import re

import numpy as np

from .errors import InvalidGeometryError, MeshParseError, TopologyError

DIRICHLET = "DIRICHLET"
ROBIN = "ROBIN"
NEUMANN = "NEUMANN"
PERIODIC = "PERIODIC"
TAGS = (DIRICHLET, ROBIN, NEUMANN, PERIODIC)

ELIMINATED = -1

LOCAL_EDGES = {
    "quad": ((0, 1), (1, 2), (2, 3), (3, 0)),
    "tri": ((0, 1), (1, 2), (2, 0)),
}
CELL_SIZE = {"quad": 4, "tri": 3}

SIDES = ("bottom", "right", "top", "left")


def _signed_areas(coords, cell_type):
    """Twice the signed area per triangle, or the Jacobian determinants of a
    bilinear quad at its four corners (shape (E,) or (E, 4))."""
    if cell_type == "tri":
        a, b, c = coords[:, 0], coords[:, 1], coords[:, 2]
        return ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    dets = []
    for i in range(4):
        p, nxt, prv = coords[:, i], coords[:, (i + 1) % 4], coords[:, (i - 1) % 4]
        e1, e2 = nxt - p, prv - p
        dets.append(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return np.stack(dets, axis=1)


def resolve_periodic(pairs):
    """Map every slave vertex to its final master (following chains)."""
    pairs = dict(pairs)
    resolved = {}
    for slave in pairs:
        seen = {slave}
        master = pairs[slave]
        while master in pairs:
            if master in seen:
                raise TopologyError(f"periodic pairs form a cycle through vertex {slave}")
            seen.add(master)
            master = pairs[master]
        resolved[slave] = master
    return resolved


class Mesh:
    """Immutable 2-D mesh with boundary tags, DOF map and patches.

    ``boundary_edges`` holds ``(element, local_edge, tag)`` triples and
    ``periodic`` maps slave vertices to master vertices.
    """

    def __init__(self, vertices, elements, cell_type, boundary_edges=(), periodic=None):
        if cell_type not in CELL_SIZE:
            raise InvalidGeometryError(f"unknown cell type {cell_type!r}")
        vertices = np.array(vertices, dtype=float)
        elements = np.array(elements, dtype=np.int64).reshape(-1, CELL_SIZE[cell_type])
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise InvalidGeometryError("vertices must be an array of 2-D points")
        if elements.size and (elements.min() < 0 or elements.max() >= len(vertices)):
            raise InvalidGeometryError("element references a missing vertex")
        if len(elements):
            det = _signed_areas(vertices[elements], cell_type)
            bad = np.nonzero(np.atleast_2d(det.T).min(axis=0) <= 0)[0]
            if len(bad):
                raise InvalidGeometryError(
                    f"element {int(bad[0])} has nonpositive area or clockwise orientation")

        self.cell_type = cell_type
        self.vertices = vertices
        self.elements = elements
        self.boundary_edges = tuple((int(e), int(le), str(tag)) for e, le, tag in boundary_edges)
        for e, le, tag in self.boundary_edges:
            if tag not in TAGS:
                raise InvalidGeometryError(f"unknown boundary tag {tag!r}")
            if not 0 <= e < len(elements) or not 0 <= le < CELL_SIZE[cell_type]:
                raise InvalidGeometryError(f"boundary edge ({e}, {le}) does not exist")
        self.periodic = resolve_periodic(periodic or {})

        self._number_dofs()
        self._build_patches()
        self.vertices.setflags(write=False)
        self.elements.setflags(write=False)
        self.dof_map.setflags(write=False)

    # -- construction helpers ------------------------------------------------

    def _number_dofs(self):
        nv = len(self.vertices)
        master = np.arange(nv)
        for slave, m in self.periodic.items():
            master[slave] = m
        dirichlet = np.zeros(nv, dtype=bool)
        for e, le, tag in self.boundary_edges:
            if tag == DIRICHLET:
                dirichlet[list(self.edge_vertices(e, le))] = True
        # a Dirichlet member eliminates its whole periodic class
        class_dirichlet = np.zeros(nv, dtype=bool)
        np.logical_or.at(class_dirichlet, master, dirichlet)
        used = np.zeros(nv, dtype=bool)
        used[self.elements.ravel()] = True

        dof_of_master = np.full(nv, ELIMINATED, dtype=np.int64)
        count = 0
        for v in range(nv):
            if master[v] == v and used[v] and not class_dirichlet[v]:
                dof_of_master[v] = count
                count += 1
        self.dof_map = dof_of_master[master]
        self.dof_map[~used] = ELIMINATED
        self.n_dofs = count

    def _build_patches(self):
        patches = [set() for _ in range(self.n_dofs)]
        for j, elem in enumerate(self.elements):
            for v in elem:
                k = self.dof_map[v]
                if k >= 0:
                    patches[k].add(j)
        self.patches = tuple(frozenset(p) for p in patches)

    # -- queries ---------------------------------------------------------------

    @property
    def n_elements(self):
        return len(self.elements)

    def element_coords(self, j):
        return self.vertices[self.elements[j]]

    def edge_vertices(self, j, local_edge):
        a, b = LOCAL_EDGES[self.cell_type][local_edge]
        return int(self.elements[j, a]), int(self.elements[j, b])

    def element_dofs(self, j):
        return self.dof_map[self.elements[j]]

    def edges_with_tag(self, tag):
        return [(e, le) for e, le, t in self.boundary_edges if t == tag]

    def element_areas(self):
        coords = self.vertices[self.elements]
        if self.cell_type == "tri":
            return 0.5 * _signed_areas(coords, "tri")
        x, y = coords[..., 0], coords[..., 1]
        return 0.5 * np.abs(np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1))

    def diameter(self):
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def __repr__(self):
        return (f"Mesh({self.cell_type}, vertices={len(self.vertices)}, "
                f"elements={self.n_elements}, dofs={self.n_dofs})")


def patch_elements(mesh, k):
    """Element ids forming the patch of DOF ``k``."""
    if not 0 <= k < mesh.n_dofs:
        raise IndexError(f"DOF index {k} out of range [0, {mesh.n_dofs})")
    return mesh.patches[k]


# -- structured meshes ---------------------------------------------------------

def _side_tags(bc):
    if isinstance(bc, str):
        bc = {side: bc for side in SIDES}
    tags = {side: bc.get(side, DIRICHLET).upper() for side in SIDES}
    for side, tag in tags.items():
        if tag not in TAGS:
            raise InvalidGeometryError(f"unknown boundary tag {tag!r} on side {side}")
    for a, b in (("left", "right"), ("bottom", "top")):
        if (tags[a] == PERIODIC) != (tags[b] == PERIODIC):
            raise InvalidGeometryError(f"sides {a} and {b} must both be PERIODIC or neither")
    return tags


def match_periodic(vertices, slaves, shift, tol):
    """Pair each slave vertex with the vertex at ``slave - shift``."""
    pairs = {}
    for s in slaves:
        target = vertices[s] - shift
        dist = np.abs(vertices - target).max(axis=1)
        m = int(np.argmin(dist))
        if dist[m] > tol:
            raise TopologyError(f"no periodic partner for vertex {s}")
        pairs[int(s)] = m
    return pairs


def grid_mesh(xs, ys, bc=DIRICHLET, cell_type="quad", displacement=None):
    """Tensor grid on the lines ``xs`` x ``ys``; quads or triangles.

    Each grid cell is split along the diagonal from its lower-left to its
    upper-right corner when ``cell_type`` is ``"tri"``.  ``displacement``
    optionally moves vertices (shape (V, 2)); boundary vertices should only
    move tangentially.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    nx, ny = len(xs) - 1, len(ys) - 1
    if nx < 1 or ny < 1:
        raise InvalidGeometryError("need at least one subdivision per axis")
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise InvalidGeometryError("grid lines must be strictly increasing")
    tags = _side_tags(bc)

    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    if displacement is not None:
        vertices = vertices + displacement

    def vid(i, j):
        return j * (nx + 1) + i

    elements, boundary = [], []
    # (element, local edge) for the cell edge on each side
    side_edge = {"quad": {"bottom": [(0, 0)], "right": [(0, 1)], "top": [(0, 2)], "left": [(0, 3)]},
                 "tri": {"bottom": [(0, 0)], "right": [(0, 1)], "top": [(1, 1)], "left": [(1, 2)]}}
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            first = len(elements)
            if cell_type == "quad":
                elements.append((a, b, c, d))
            else:
                elements.append((a, b, c))
                elements.append((a, c, d))
            on_side = {"bottom": j == 0, "right": i == nx - 1, "top": j == ny - 1, "left": i == 0}
            for side in SIDES:
                if on_side[side]:
                    for offset, le in side_edge[cell_type][side]:
                        boundary.append((first + offset, le, tags[side]))

    periodic = {}
    diam = math.hypot(xs[-1] - xs[0], ys[-1] - ys[0])
    tol = 1e-9 * diam
    if tags["right"] == PERIODIC:
        right = [vid(nx, j) for j in range(ny + 1)]
        periodic.update(match_periodic(vertices, right, np.array([xs[-1] - xs[0], 0.0]), tol))
    if tags["top"] == PERIODIC:
        top = [vid(i, ny) for i in range(nx + 1)]
        top_pairs = match_periodic(vertices, top, np.array([0.0, ys[-1] - ys[0]]), tol)
        # the top-right corner keeps its horizontal partner; chains resolve it
        for s, m in top_pairs.items():
            periodic.setdefault(s, m)
    return Mesh(vertices, elements, cell_type, boundary, periodic)


def build_uniform_quad_mesh(domain, n, bc=DIRICHLET):
    """Uniform ``n x n`` Q1 mesh of the rectangle ``((x0, x1), (y0, y1))``.

    ``bc`` is one tag for all sides or a dict keyed by
    ``bottom``/``right``/``top``/``left`` (missing sides are DIRICHLET).
    """
    (x0, x1), (y0, y1) = domain
    if n < 1:
        raise InvalidGeometryError(f"n must be >= 1, got {n}")
    if not (x1 > x0 and y1 > y0):
        raise InvalidGeometryError(f"degenerate domain {domain}")
    return grid_mesh(np.linspace(x0, x1, n + 1), np.linspace(y0, y1, n + 1), bc, "quad")


# -- mesh file format ----------------------------------------------------------

_HEADER = re.compile(r"^meshfmt\s+1\s+(\d+)$")


def read_mesh(stream):
    """Parse the line-oriented mesh format.

    ``meshfmt 1 2`` header, then ``v x y``, ``e tri i j k`` /
    ``e quad i j k l`` (0-based, counter-clockwise), ``b elem edge TAG`` and
    ``p slave master`` lines; ``#`` starts a comment.
    """
    vertices, elements, elem_lines = [], [], []
    boundary, periodic, periodic_lines = [], {}, {}
    cell_type = None
    header_seen = False
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not header_seen:
            m = _HEADER.match(line)
            if not m:
                raise MeshParseError(lineno, "expected header 'meshfmt 1 <d>'")
            if m.group(1) != "2":
                raise MeshParseError(lineno, f"only d=2 meshes are supported, got d={m.group(1)}")
            header_seen = True
            continue
        parts = line.split()
        try:
            if parts[0] == "v" and len(parts) == 3:
                vertices.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "e" and len(parts) >= 2 and parts[1] in CELL_SIZE:
                kind = parts[1]
                if len(parts) != 2 + CELL_SIZE[kind]:
                    raise MeshParseError(lineno, f"'{kind}' element needs {CELL_SIZE[kind]} vertices")
                if cell_type is None:
                    cell_type = kind
                elif kind != cell_type:
                    raise MeshParseError(lineno, "mixed element types are not supported")
                elements.append(tuple(int(p) for p in parts[2:]))
                elem_lines.append(lineno)
            elif parts[0] == "b" and len(parts) == 4:
                tag = parts[3].upper()
                if tag not in TAGS:
                    raise MeshParseError(lineno, f"unknown boundary tag {parts[3]!r}")
                boundary.append((int(parts[1]), int(parts[2]), tag, lineno))
            elif parts[0] == "p" and len(parts) == 3:
                s, m = int(parts[1]), int(parts[2])
                periodic[s] = m
                periodic_lines[s] = lineno
            else:
                raise MeshParseError(lineno, f"malformed line: {raw.strip()!r}")
        except ValueError as exc:
            if isinstance(exc, MeshParseError):
                raise
            raise MeshParseError(lineno, f"malformed number in {raw.strip()!r}") from exc
    if not header_seen:
        raise MeshParseError(1, "empty mesh file")
    if cell_type is None:
        raise MeshParseError(lineno, "mesh has no elements")

    nv = len(vertices)
    for elem, lineno in zip(elements, elem_lines):
        for v in elem:
            if not 0 <= v < nv:
                raise MeshParseError(lineno, f"element references vertex {v} but only {nv} vertices exist")
    for s, m in periodic.items():
        for v in (s, m):
            if not 0 <= v < nv:
                raise MeshParseError(periodic_lines[s], f"periodic pair references vertex {v} of {nv}")

    verts = np.array(vertices, dtype=float)
    elems = np.array(elements, dtype=np.int64)
    det = np.atleast_2d(_signed_areas(verts[elems], cell_type).T).min(axis=0)
    for j in np.nonzero(det <= 0)[0]:
        raise MeshParseError(elem_lines[j], f"element {j} is not counter-clockwise (or degenerate)")

    edge_count = {}
    for elem in elements:
        for a, b in LOCAL_EDGES[cell_type]:
            key = frozenset((elem[a], elem[b]))
            edge_count[key] = edge_count.get(key, 0) + 1
    edges = []
    for e, le, tag, lineno in boundary:
        if not 0 <= e < len(elements):
            raise MeshParseError(lineno, f"boundary line references element {e} of {len(elements)}")
        if not 0 <= le < CELL_SIZE[cell_type]:
            raise MeshParseError(lineno, f"local edge {le} out of range")
        a, b = LOCAL_EDGES[cell_type][le]
        if edge_count[frozenset((elements[e][a], elements[e][b]))] != 1:
            raise MeshParseError(lineno, f"edge {le} of element {e} is not on the boundary")
        edges.append((e, le, tag))
    return Mesh(verts, elems, cell_type, edges, periodic)


def read_tri_mesh(stream):
    """Like :func:`read_mesh` but insists on triangular elements."""
    mesh = read_mesh(stream)
    if mesh.cell_type != "tri":
        raise MeshParseError(1, "expected a triangle mesh")
    return mesh


def write_mesh(mesh, stream, comment=None):
    if comment:
        for line in comment.splitlines():
            stream.write(f"# {line}\n")
    stream.write("meshfmt 1 2\n")
    for x, y in mesh.vertices:
        stream.write(f"v {x:.17g} {y:.17g}\n")
    for elem in mesh.elements:
        stream.write(f"e {mesh.cell_type} " + " ".join(str(int(v)) for v in elem) + "\n")
    for e, le, tag in mesh.boundary_edges:
        stream.write(f"b {e} {le} {tag}\n")
    for s, m in sorted(mesh.periodic.items()):
        stream.write(f"p {s} {m}\n")
