"""Command-line entry point: ``eigenbound run | run-all | mesh-info``."""
import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cases
from .assembly import write_matrix_market
from .bounds import dofs_with_constant_ratio, exact_eigenvalue_check, verify_bracketing
from .errors import EigenboundError
from .mesh import TAGS, read_mesh
from .pcg import pcg_solve
from .smalleig import JACOBI_MAX_ORDER, eigen_residuals

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
RESIDUAL_TOL = 1e-8

# iteration counts reported for the bundled PCG runs: (case, n, precond) -> count
REFERENCE_PCG = {
    ("ex41a", 11, "Atilde1"): 17,
    ("ex41a", 11, "Atilde2"): 13,
    ("ex41a", 31, "Atilde1"): 20,
    ("ex41a", 31, "Atilde2"): 15,
    ("ex45", 22, "Ctilde1"): 14,
    ("ex45", 22, "Ctilde2"): 11,
}

RUN_ALL = [
    ("ex41a", 11), ("ex41a", 31), ("ex41b", 21), ("ex41c", None),
    ("ex45", 22), ("ex46", 10), ("ex46", 20), ("const-diag", 31),
]

CASE_HELP = """cases:
  ex41a       tensor diffusion on (-pi,pi)^2, Dirichlet, Q1 (--n, default 11)
  ex41b       same data, fully periodic, singular pencil (--n, default 21)
  ex41c       same data on a nonuniform triangle mesh, Robin right side
  ex45        plane elasticity, E = 1 + 0.3 sign(x1 x2), nu = 0.2 (--n, default 22)
  ex46        A = sin(x1 + x2) I on (0,1)^2, Laplacian preconditioner (--n, default 10)
  const-diag  A = diag(2,1), Laplacian preconditioner (--n, default 31)
preconditioners: ex41* Atilde1 | Atilde2, ex45 Ctilde1 | Ctilde2, others I
"""


@dataclass
class CaseConfig:
    case: str
    n: int = None
    precond: str = None
    out: Path = Path("eigenbound-out")
    method: str = "auto"
    pcg: bool = True
    export_matrices: bool = False


def _fmt_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def run_case(config):
    """Bounds, oracle spectrum, bracketing report and PCG history for one case.

    Returns the report dict; files are written under ``config.out``.
    """
    problem = cases.build_case(config.case, config.n, config.precond)
    precond = config.precond or cases.PRECONDITIONERS[config.case][0]
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / problem.name

    M, Mt = problem.matrices()
    bounds = problem.bounds()
    w, X = problem.spectrum(method=config.method, return_vectors=True)
    report = verify_bracketing(bounds, w)
    residual = float(eigen_residuals(M, Mt, w, X).max())

    with open(f"{stem}_bounds.csv", "w") as fh:
        bounds.write_csv(fh, spectrum=w)
    _fmt_rows(f"{stem}_spectrum.csv", ["k", "lambda"],
              ([str(k + 1), f"{lam:.17g}"] for k, lam in enumerate(w)))
    if config.export_matrices:
        write_matrix_market(f"{stem}_A.mtx", M)
        write_matrix_market(f"{stem}_Atilde.mtx", Mt)

    result = {
        "case": config.case,
        "name": problem.name,
        "precond": precond,
        "n": config.n or cases.DEFAULT_N[config.case],
        "order": int(M.shape[0]),
        "replication": bounds.replication,
        "bracketing": report.to_dict(),
        "oracle": {
            "method": config.method if config.method != "auto" else
            ("jacobi" if M.shape[0] <= JACOBI_MAX_ORDER else "lapack"),
            "max_relative_residual": residual,
            "residual_ok": residual <= RESIDUAL_TOL,
            "lambda_min": float(w[0]),
            "lambda_max": float(w[-1]),
        },
        "bounds": {
            "lower_min": float(bounds.lower_sorted[0]),
            "upper_max": float(bounds.upper_sorted[-1]),
        },
    }

    if config.case == "ex45" and precond == "Ctilde2":
        clusters = {}
        for c in (0.7, 1.3):
            dofs = dofs_with_constant_ratio(problem.mesh, problem.A, problem.At, c)
            count = exact_eigenvalue_check(problem.mesh, problem.A, problem.At, c, dofs, w,
                                           components=2)
            clusters[str(c)] = {"patches": len(dofs), "required": 2 * len(dofs), "count": count}
        result["clusters"] = clusters

    if config.pcg and problem.load is not None and not problem.singular:
        pcg = pcg_solve(M, Mt, problem.load_vector())
        with open(f"{stem}_pcg.csv", "w") as fh:
            pcg.write_csv(fh)
        result["pcg"] = {"iterations": pcg.iterations, "converged": pcg.converged,
                         "reference": REFERENCE_PCG.get((config.case, result["n"], precond))}

    result["passed"] = bool(report.passed)
    with open(f"{stem}_report.json", "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result


def random_suite(seed, count=50, max_n=8):
    """Bracketing on random element-constant pencils, alternating diffusion and elasticity."""
    rng = np.random.default_rng(seed)
    results = []
    for i in range(count):
        kind = cases.DIFFUSION if i % 2 == 0 else cases.ELASTICITY
        problem = cases.random_problem(rng, kind, max_n)
        if len(problem.bounds()) == 0:
            continue
        w = problem.spectrum()
        rep = verify_bracketing(problem.bounds(), w)
        results.append({"index": i, "kind": kind, "cell": problem.mesh.cell_type,
                        "order": len(w), "passed": rep.passed,
                        "min_lower_margin": rep.lower_margin, "min_upper_margin": rep.upper_margin})
    return results


def run_all(out, seed=0, random_count=50):
    out = Path(out)
    summary = {"seed": seed, "cases": [], "pcg": []}
    for case, n in RUN_ALL:
        for precond in cases.PRECONDITIONERS[case]:
            res = run_case(CaseConfig(case, n, precond, out / "cases"))
            summary["cases"].append({k: res[k] for k in ("name", "order", "passed")} |
                                    {"residual_ok": res["oracle"]["residual_ok"]})
            if "pcg" in res:
                summary["pcg"].append({"case": case, "n": res["n"], "precond": precond,
                                       "iterations": res["pcg"]["iterations"],
                                       "reference": res["pcg"]["reference"]})
    rand = random_suite(seed, random_count)
    summary["random"] = {"count": len(rand), "passed": all(r["passed"] for r in rand),
                         "results": rand}
    summary["passed"] = (all(c["passed"] and c["residual_ok"] for c in summary["cases"])
                         and summary["random"]["passed"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def mesh_info(path):
    with open(path) as fh:
        mesh = read_mesh(fh)
    tags = {t: len(mesh.edges_with_tag(t)) for t in TAGS}
    sizes = [len(p) for p in mesh.patches]
    return {
        "cell_type": mesh.cell_type,
        "vertices": len(mesh.vertices),
        "elements": mesh.n_elements,
        "dofs": mesh.n_dofs,
        "boundary_edges": tags,
        "periodic_pairs": len(mesh.periodic),
        "area": float(mesh.element_areas().sum()),
        "patch_size_min": min(sizes) if sizes else 0,
        "patch_size_max": max(sizes) if sizes else 0,
    }


def build_parser():
    default_out = os.environ.get("EIGENBOUND_OUT", "eigenbound-out")
    parser = argparse.ArgumentParser(
        prog="eigenbound",
        description="Guaranteed bounds on all eigenvalues of preconditioned FE matrices.",
        epilog=CASE_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one bundled case", epilog=CASE_HELP,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    run.add_argument("case")
    run.add_argument("--n", type=int, default=None, help="subdivisions per axis")
    run.add_argument("--precond", default=None)
    run.add_argument("--out", default=default_out)
    run.add_argument("--seed", type=int, default=0, help="accepted for symmetry with run-all")
    run.add_argument("--method", choices=("auto", "jacobi", "lapack"), default="auto",
                     help="dense oracle eigensolver")
    run.add_argument("--no-pcg", action="store_true")
    run.add_argument("--export-matrices", action="store_true",
                     help="also write both matrices in Matrix Market format")

    run_all_p = sub.add_parser("run-all", help="run every bundled case and the random suite")
    run_all_p.add_argument("--out", default=default_out)
    run_all_p.add_argument("--seed", type=int, default=0)
    run_all_p.add_argument("--random", type=int, default=50, help="number of random pencils")

    info = sub.add_parser("mesh-info", help="summarize a mesh file")
    info.add_argument("file")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "mesh-info":
            print(json.dumps(mesh_info(args.file), indent=2, sort_keys=True))
            return EXIT_OK
        if args.command == "run":
            if args.case not in cases.PRECONDITIONERS:
                print(f"eigenbound: unknown case {args.case!r}\n\n{CASE_HELP}", file=sys.stderr)
                return EXIT_USAGE
            if args.precond and args.precond not in cases.PRECONDITIONERS[args.case]:
                print(f"eigenbound: case {args.case} accepts preconditioners "
                      f"{', '.join(cases.PRECONDITIONERS[args.case])}", file=sys.stderr)
                return EXIT_USAGE
            cfg = CaseConfig(args.case, args.n, args.precond, Path(args.out), args.method,
                             not args.no_pcg, args.export_matrices)
            res = run_case(cfg)
            br = res["bracketing"]
            print(f"{res['name']}: order {res['order']}, bracketing "
                  f"{'PASS' if res['passed'] else 'FAIL'} ({br['n_checked']} checks, "
                  f"certified={br['certified']}), residual {res['oracle']['max_relative_residual']:.1e}"
                  + (f", PCG {res['pcg']['iterations']} iterations" if "pcg" in res else ""))
            return EXIT_OK if res["passed"] else EXIT_FAIL
        summary = run_all(Path(args.out), args.seed, args.random)
        for c in summary["cases"]:
            print(f"{c['name']:28s} {'PASS' if c['passed'] else 'FAIL'}")
        for row in summary["pcg"]:
            print(f"PCG {row['case']} n={row['n']} {row['precond']}: {row['iterations']} "
                  f"(reported {row['reference']})")
        print(f"random suite: {summary['random']['count']} pencils, "
              f"{'PASS' if summary['random']['passed'] else 'FAIL'}")
        return EXIT_OK if summary["passed"] else EXIT_FAIL
    except (EigenboundError, OSError) as exc:
        print(f"eigenbound: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, OSError) else EXIT_FAIL
