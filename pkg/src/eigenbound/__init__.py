"""Guaranteed two-sided bounds on all eigenvalues of preconditioned FE matrices."""
from .bounds import BoundsResult, diffusion_bounds, elasticity_bounds, verify_bracketing
from .errors import EigenboundError
from .mesh import Mesh, build_uniform_quad_mesh, grid_mesh, read_mesh, write_mesh
from .pcg import pcg_solve
from .smalleig import gen_eig_dense, gen_eig_small

__version__ = "0.1.0"

__all__ = [
    "BoundsResult", "EigenboundError", "Mesh", "build_uniform_quad_mesh", "diffusion_bounds",
    "elasticity_bounds", "gen_eig_dense", "gen_eig_small", "grid_mesh", "pcg_solve",
    "read_mesh", "verify_bracketing", "write_mesh",
]
