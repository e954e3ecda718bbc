"""Independent derivations of reference values frozen into the unit tests.

Uses exact symbolic arithmetic (sympy) and no code from the package.
Run: python3 tools/derive_oracles.py
"""
import sympy as sp

x, y, lam = sp.symbols("x y lambda", real=True)


def q1_interior_diagonal():
    # unit square, 2x2 cells of size 1/2, hat function at (1/2, 1/2)
    h = sp.Rational(1, 2)
    total = 0
    for cx in (0, h):
        for cy in (0, h):
            # bilinear hat on [cx, cx+h] x [cy, cy+h] equal to 1 at (1/2, 1/2)
            fx = (x - cx) / h if cx == 0 else (cx + h - x) / h
            fy = (y - cy) / h if cy == 0 else (cy + h - y) / h
            phi = fx * fy
            g = sp.diff(phi, x) ** 2 + sp.diff(phi, y) ** 2
            total += sp.integrate(g, (x, cx, cx + h), (y, cy, cy + h))
    return total


def load_entry(n=11):
    h = 2 * sp.pi / n
    # one hat over four cells: each cell integral is h^2/4
    s, t = sp.symbols("s t")
    cell = sp.integrate((s / h) * (t / h), (s, 0, h), (t, 0, h))
    return sp.simplify(4 * cell)


def voigt(E, nu):
    k = E / ((1 + nu) * (1 - 2 * nu))
    return k * (1 - nu), k * nu, E / (2 * (1 + nu))


def pencil_roots(A, B):
    return sorted(sp.solve((sp.Matrix(A) - lam * sp.Matrix(B)).det(), lam))


def main():
    print("Q1 interior diagonal:", q1_interior_diagonal())
    print("ex41a load entry:", load_entry(), "=", sp.N(load_entry(), 17))
    c11, c12, c44 = voigt(sp.Integer(1), sp.Rational(1, 5))
    print("voigt nu=0.2:", c11, c12, c44, [sp.N(v, 17) for v in (c11, c12, c44)])
    print("voigt nu=0.2 plane-strain shear (=c44):", c44, "=", sp.Rational(3, 10) / sp.Rational(72, 100))
    r = sp.Rational
    roots = pencil_roots([[r(13, 10), r(4, 10)], [r(4, 10), r(13, 10)]],
                         [[1, r(3, 10)], [r(3, 10), 1]])
    print("ex41 pencil roots:", roots, [sp.N(v, 17) for v in roots])
    C2 = sp.Matrix([[c11, c12, 0], [c12, c11, 0], [0, 0, c44]])
    C1 = sp.diag(1, 1, r(1, 2))
    ev = sorted((C1.inv() * C2).eigenvals(multiple=True))
    print("Ctilde1^-1 Ctilde2 eigenvalues:", ev)
    print("ex45 Ctilde1 global range:", r(7, 10) * ev[0], r(13, 10) * ev[-1],
          sp.N(r(7, 10) * ev[0], 17), sp.N(r(13, 10) * ev[-1], 17))
    L = sp.Matrix([[4, 2], [2, 5]]).cholesky()
    print("cholesky [[4,2],[2,5]]:", L.tolist())
    print("ex41 data range:", r(7, 10) - r(4, 10), r(13, 10) + r(4, 10))


if __name__ == "__main__":
    main()
