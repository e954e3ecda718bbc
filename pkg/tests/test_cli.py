import json
import subprocess
import sys
from importlib import resources

import pytest

from eigenbound.cli import main


def run(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def test_run_ex41a_writes_reports(tmp_path, capsys):
    code, out = run(["run", "ex41a", "--n", "11", "--precond", "Atilde2", "--out", str(tmp_path)], capsys)
    assert code == 0 and "PASS" in out.out
    stem = tmp_path / "ex41a-Atilde2-n11"
    rows = (tmp_path / f"{stem.name}_bounds.csv").read_text().splitlines()
    assert len(rows) == 101
    report = json.loads((tmp_path / f"{stem.name}_report.json").read_text())
    assert report["passed"] and report["bracketing"]["certified"]
    assert report["pcg"]["iterations"] == 13
    assert (tmp_path / f"{stem.name}_spectrum.csv").exists()
    assert (tmp_path / f"{stem.name}_pcg.csv").exists()


def test_run_ex46(tmp_path, capsys):
    code, _ = run(["run", "ex46", "--n", "10", "--out", str(tmp_path)], capsys)
    assert code == 0
    report = json.loads((tmp_path / "ex46-n10_report.json").read_text())
    assert report["order"] == 81 and "pcg" not in report


def test_run_ex41b_singular(tmp_path, capsys):
    code, _ = run(["run", "ex41b", "--n", "21", "--out", str(tmp_path)], capsys)
    assert code == 0
    report = json.loads((tmp_path / "ex41b-Atilde1-n21_report.json").read_text())
    assert report["bracketing"]["mode"] == "SINGULAR_SHIFT"
    assert report["bracketing"]["n_checked"] == 440


def test_env_output_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("EIGENBOUND_OUT", str(tmp_path / "env"))
    code, _ = run(["run", "const-diag", "--n", "6"], capsys)
    assert code == 0
    assert (tmp_path / "env" / "const-diag-n6_report.json").exists()


def test_export_matrices(tmp_path, capsys):
    code, _ = run(["run", "ex41a", "--n", "4", "--out", str(tmp_path), "--export-matrices"], capsys)
    assert code == 0
    assert (tmp_path / "ex41a-Atilde1-n4_A.mtx").read_text().startswith("%%MatrixMarket")


def test_unknown_case_is_usage_error(capsys):
    code, out = run(["run", "ex99"], capsys)
    assert code == 2 and "unknown case" in out.err


def test_wrong_preconditioner_is_usage_error(capsys):
    code, _ = run(["run", "ex45", "--precond", "Atilde1"], capsys)
    assert code == 2


def test_bad_arguments_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "ex41a", "--n", "eleven"])
    assert exc.value.code == 2


def test_mesh_info(capsys):
    path = resources.files("eigenbound.data").joinpath("ex41c.mesh")
    code, out = run(["mesh-info", str(path)], capsys)
    info = json.loads(out.out)
    assert code == 0 and info["dofs"] == 400 and info["cell_type"] == "tri"
    assert info["boundary_edges"]["ROBIN"] > 0


def test_mesh_info_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.mesh"
    bad.write_text("meshfmt 1 2\nv 0 0\ne tri 0 1 2\n")
    code, out = run(["mesh-info", str(bad)], capsys)
    assert code == 1 and "line 3" in out.err
    code, _ = run(["mesh-info", str(tmp_path / "missing.mesh")], capsys)
    assert code == 2


def test_runs_are_byte_identical(tmp_path, capsys):
    for d in ("a", "b"):
        assert main(["run", "ex41c", "--precond", "Atilde2", "--out", str(tmp_path / d)]) == 0
    capsys.readouterr()
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.slow
def test_run_all_seed_reproducible(tmp_path):
    outs = []
    for d in ("a", "b"):
        proc = subprocess.run([sys.executable, "-m", "eigenbound", "run-all", "--seed", "7",
                               "--random", "10", "--out", str(tmp_path / d)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append((tmp_path / d / "summary.json").read_bytes())
    assert outs[0] == outs[1]
    summary = json.loads(outs[0])
    assert summary["passed"] and summary["random"]["count"] == 10
    table = {(r["case"], r["n"], r["precond"]): (r["iterations"], r["reference"]) for r in summary["pcg"]}
    assert table[("ex41a", 11, "Atilde1")][1] == 17
    assert all(abs(it - ref) <= 2 for it, ref in table.values())
