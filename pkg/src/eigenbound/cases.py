"""Bundled example problems and random problem generators."""
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import material
from .assembly import assemble_diffusion, assemble_elasticity_2d, assemble_load, common_subcells
from .bounds import diffusion_bounds, elasticity_bounds
from .material import RobinField, TensorField, element_field, example_field, example_robin
from .mesh import DIRICHLET, NEUMANN, PERIODIC, ROBIN, build_uniform_quad_mesh, grid_mesh, read_mesh
from .smalleig import gen_eig_dense

SQUARE_PI = ((-math.pi, math.pi), (-math.pi, math.pi))
UNIT_SQUARE = ((0.0, 1.0), (0.0, 1.0))

DIFFUSION = "diffusion"
ELASTICITY = "elasticity"


@dataclass
class Problem:
    """A pencil to bound: mesh, coefficient pair, Robin data, optional load."""
    name: str
    kind: str
    mesh: object
    A: TensorField
    At: TensorField
    g3: RobinField = None
    g3t: RobinField = None
    singular: bool = False
    load: object = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def components(self):
        return 2 if self.kind == ELASTICITY else 1

    def matrices(self):
        if "matrices" not in self._cache:
            sub = common_subcells(self.A, self.At)
            if self.kind == ELASTICITY:
                M = assemble_elasticity_2d(self.mesh, self.A, sub)
                Mt = assemble_elasticity_2d(self.mesh, self.At, sub)
            else:
                M = assemble_diffusion(self.mesh, self.A, self.g3, sub)
                Mt = assemble_diffusion(self.mesh, self.At, self.g3t, sub)
            self._cache["matrices"] = (M, Mt)
        return self._cache["matrices"]

    def bounds(self):
        if self.kind == ELASTICITY:
            return elasticity_bounds(self.mesh, self.A, self.At)
        return diffusion_bounds(self.mesh, self.A, self.At, self.g3, self.g3t, self.singular)

    def spectrum(self, method="auto", return_vectors=False):
        M, Mt = self.matrices()
        return gen_eig_dense(M, Mt, deflate_kernel=self.singular, method=method,
                             return_vectors=return_vectors)

    def load_vector(self):
        if self.load is None:
            return None
        return assemble_load(self.mesh, self.load, self.components)


# -- bundled cases ----------------------------------------------------------------

PRECONDITIONERS = {
    "ex41a": ("Atilde1", "Atilde2"),
    "ex41b": ("Atilde1", "Atilde2"),
    "ex41c": ("Atilde1", "Atilde2"),
    "ex45": ("Ctilde1", "Ctilde2"),
    "ex46": ("I",),
    "const-diag": ("I",),
}
DEFAULT_N = {"ex41a": 11, "ex41b": 21, "ex41c": None, "ex45": 22, "ex46": 10, "const-diag": 31}
CASES = tuple(PRECONDITIONERS)


def ex41c_mesh():
    """The bundled nonuniform triangle mesh for case ex41c (400 free DOFs)."""
    with resources.files("eigenbound.data").joinpath("ex41c.mesh").open("r") as fh:
        return read_mesh(fh)


def ex41c_fixture_mesh(seed=41):
    """Generate the ex41c fixture: graded, jittered triangles on (-pi, pi)^2,
    ROBIN on the right side and DIRICHLET elsewhere."""
    t = np.linspace(0.0, 1.0, 21)
    xs = -math.pi + 2 * math.pi * (t + 0.06 * np.sin(2 * math.pi * t))
    t = np.linspace(0.0, 1.0, 22)
    ys = -math.pi + 2 * math.pi * (t + 0.05 * np.sin(4 * math.pi * t))
    h = min(np.diff(xs).min(), np.diff(ys).min())
    rng = np.random.default_rng(seed)
    X, Y = np.meshgrid(xs, ys)
    interior = ((X > xs[0]) & (X < xs[-1]) & (Y > ys[0]) & (Y < ys[-1])).ravel()
    disp = rng.uniform(-0.15 * h, 0.15 * h, size=(X.size, 2))
    disp[~interior] = 0.0
    bc = {"bottom": DIRICHLET, "top": DIRICHLET, "left": DIRICHLET, "right": ROBIN}
    return grid_mesh(xs, ys, bc, "tri", displacement=disp)


def _precond_field(case, precond):
    if precond not in PRECONDITIONERS[case]:
        raise KeyError(f"case {case} has preconditioners {PRECONDITIONERS[case]}, not {precond!r}")
    prefix = {"ex41a": "ex41", "ex41b": "ex41", "ex41c": "ex41", "ex45": "ex45"}.get(case)
    if prefix:
        return example_field(f"{prefix}-{precond}")
    return example_field("ex46-I")


def build_case(case, n=None, precond=None):
    """Problem for a bundled case id, with its default n and preconditioner."""
    if case not in PRECONDITIONERS:
        raise KeyError(f"unknown case {case!r}; known: {', '.join(CASES)}")
    precond = precond or PRECONDITIONERS[case][0]
    At = _precond_field(case, precond)
    n = n or DEFAULT_N[case]
    if case == "ex41a":
        return Problem(f"ex41a-{precond}-n{n}", DIFFUSION, build_uniform_quad_mesh(SQUARE_PI, n),
                       example_field("ex41-A"), At, load=1.0)
    if case == "ex41b":
        mesh = build_uniform_quad_mesh(SQUARE_PI, n, PERIODIC)
        return Problem(f"ex41b-{precond}-n{n}", DIFFUSION, mesh, example_field("ex41-A"), At,
                       singular=True)
    if case == "ex41c":
        g3 = example_robin("ex41c-g3")
        return Problem(f"ex41c-{precond}", DIFFUSION, ex41c_mesh(), example_field("ex41-A"), At,
                       g3=g3, g3t=g3)
    if case == "ex45":
        return Problem(f"ex45-{precond}-n{n}", ELASTICITY, build_uniform_quad_mesh(SQUARE_PI, n),
                       example_field("ex45-C"), At, load=(1.0, 0.0))
    if case == "ex46":
        return Problem(f"ex46-n{n}", DIFFUSION, build_uniform_quad_mesh(UNIT_SQUARE, n),
                       example_field("ex46-A"), At)
    A = material.constant_field(np.diag([2.0, 1.0]), "diag(2,1)")
    return Problem(f"const-diag-n{n}", DIFFUSION, build_uniform_quad_mesh(UNIT_SQUARE, n), A, At)


# -- random problems ----------------------------------------------------------------

def random_spd(rng, size, lo=0.1, hi=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((size, size)))
    w = np.exp(rng.uniform(math.log(lo), math.log(hi), size))
    M = (Q * w) @ Q.T
    return 0.5 * (M + M.T)


def random_mesh(rng, bc=DIRICHLET, max_n=8):
    """Jittered tensor grid with 2..max_n cells per axis, quads or triangles."""
    nx, ny = (int(v) for v in rng.integers(2, max_n + 1, size=2))
    x0, y0 = rng.uniform(-1.0, 1.0, 2)
    lx, ly = rng.uniform(0.5, 3.0, 2)
    xs = x0 + lx * np.linspace(0, 1, nx + 1)
    ys = y0 + ly * np.linspace(0, 1, ny + 1)
    h = min(lx / nx, ly / ny)
    X, Y = np.meshgrid(xs, ys)
    interior = ((X > xs[0]) & (X < xs[-1]) & (Y > ys[0]) & (Y < ys[-1])).ravel()
    disp = rng.uniform(-0.2 * h, 0.2 * h, size=(X.size, 2))
    disp[~interior] = 0.0
    cell = "quad" if rng.random() < 0.5 else "tri"
    return grid_mesh(xs, ys, bc, cell, displacement=disp)


def random_problem(rng, kind=DIFFUSION, max_n=8):
    """Random element-constant SPD pencil on a random mesh.

    Diffusion problems get a random mix of DIRICHLET / ROBIN / NEUMANN sides
    (at least one DIRICHLET) with random per-edge Robin constants.
    """
    if kind == ELASTICITY:
        mesh = random_mesh(rng, DIRICHLET, max_n)
        E = mesh.n_elements
        C = element_field([random_spd(rng, 3) for _ in range(E)], "random-C")
        Ct = element_field([random_spd(rng, 3) for _ in range(E)], "random-Ctilde")
        return Problem("random-elasticity", ELASTICITY, mesh, C, Ct)

    sides = ["bottom", "right", "top", "left"]
    tags = {s: str(rng.choice([DIRICHLET, ROBIN, NEUMANN])) for s in sides}
    tags[sides[int(rng.integers(4))]] = DIRICHLET
    mesh = random_mesh(rng, tags, max_n)
    E = mesh.n_elements
    A = element_field([random_spd(rng, 2) for _ in range(E)], "random-A")
    At = element_field([random_spd(rng, 2) for _ in range(E)], "random-Atilde")
    robin = mesh.edges_with_tag(ROBIN)
    g3t = {edge: float(rng.uniform(0.1, 5.0)) for edge in robin}
    # some edges get g3 = 0 to exercise the Neumann special case
    g3 = {edge: (0.0 if rng.random() < 0.2 else float(rng.uniform(0.1, 5.0))) for edge in robin}
    return Problem("random-diffusion", DIFFUSION, mesh, A, At,
                   g3=RobinField(material.ELEMENT_CONSTANT, values=g3, name="random-g3"),
                   g3t=RobinField(material.ELEMENT_CONSTANT, values=g3t, name="random-g3t"))
