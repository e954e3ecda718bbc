"""Regenerate the bundled ex41c triangle mesh fixture."""
import sys
from pathlib import Path

from eigenbound.cases import ex41c_fixture_mesh
from eigenbound.mesh import write_mesh

HEADER = """ex41c fixture: nonuniform triangles on (-pi, pi)^2
right side ROBIN (g3 = 1 + x2^2), other sides DIRICHLET; 400 free DOFs
generated by tools/make_ex41c_mesh.py (seed 41)"""


def main(path=None):
    path = Path(path or Path(__file__).parents[1] / "src/eigenbound/data/ex41c.mesh")
    with open(path, "w") as fh:
        write_mesh(ex41c_fixture_mesh(), fh, comment=HEADER)
    print(f"wrote {path}")


if __name__ == "__main__":
    main(*sys.argv[1:])
