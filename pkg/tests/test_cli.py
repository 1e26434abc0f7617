import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracldg import cli
from fracldg.convergence import (CSV_COLUMNS, ConvergenceReport, ReportRow, StudyConfig,
                                 rate, run_convergence)
from fracldg.mesh import disk_mesh, write_mesh
from fracldg.timestep import ConfigError, SolverError


def test_rate_examples():
    assert rate(4e-3, 1e-3, 0.2, 0.1) == pytest.approx(2.0, abs=1e-14)
    # published errors carry 4 digits, which moves the rate by up to 5e-4
    assert rate(8.094e-3, 3.506e-3, 0.15, 0.1) == pytest.approx(2.0637, abs=5e-4)
    assert rate(1e-3, 1e-3, 0.3, 0.1) == 0.0


@pytest.mark.parametrize("args", [(0, 1, 1, 0.5), (1, -1, 1, 0.5), (1, 1, 0, 0.5), (1, 1, 0.5, 0.5),
                                  (math.nan, 1, 1, 0.5)])
def test_rate_domain(args):
    with pytest.raises(ValueError):
        rate(*args)


finite = st.floats(min_value=1e-300, max_value=1e300, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 0.99), finite, finite, st.one_of(st.none(), st.floats(-5, 5))),
                min_size=1, max_size=6))
def test_csv_round_trip(rows):
    report = ConvergenceReport([ReportRow(s, 1, "minus", 5.0, h, 32, 96, 2.5e-4, e, r)
                                for s, h, e, r in rows], {"T": 1.0})
    back = ConvergenceReport.from_csv(report.to_csv(), report.metadata)
    assert back.rows == report.rows


def test_csv_header():
    text = ConvergenceReport([ReportRow(0.5, 2, "plus", 5.0, 0.3, 8, 48, 1e-4, 0.1)]).to_csv()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS) == "s,k,flux,theta,h,K,dofs,tau,l2_error,rate"
    assert text.splitlines()[1].endswith(",")


def small_study(**kw):
    base = dict(s_values=(0.4, 0.7), divisions=(2, 4), tau=0.05, T=0.2, p=6.0)
    base.update(kw)
    return StudyConfig(**base)


def test_study_ordering_and_rates():
    rep = run_convergence(small_study())
    assert [(r.s, r.K) for r in rep.rows] == [(0.4, 8), (0.4, 32), (0.7, 8), (0.7, 32)]
    for a, b in ((0, 1), (2, 3)):
        ra, rb = rep.rows[a], rep.rows[b]
        assert ra.rate is None
        assert rb.rate == rate(ra.l2_error, rb.l2_error, ra.h, rb.h)


def test_metadata_reproduces_run(tmp_path):
    rep = run_convergence(small_study(linear_solver="cg"))
    path = rep.write(tmp_path / "study.csv")
    back = ConvergenceReport.read(path)
    assert back.rows == rep.rows
    again = run_convergence(StudyConfig.from_metadata(back.metadata))
    assert [r.l2_error for r in again.rows] == [r.l2_error for r in rep.rows]


@pytest.mark.parametrize("kw", [dict(divisions=(4, 4)), dict(divisions=(4,)), dict(s_values=()),
                                dict(s_values=(1.5,)), dict(p=-1.0), dict(quad_order=1)])
def test_study_validation(kw):
    with pytest.raises(ConfigError):
        small_study(**kw)


def test_cli_converge_writes_csv(tmp_path, capsys):
    out = tmp_path / "c.csv"
    code = cli.main(["converge", "--s", "0.5", "--divisions", "2,4", "--tau", "0.05", "--T", "0.1",
                     "--out", str(out)])
    assert code == 0
    rep = ConvergenceReport.read(out)
    assert len(rep.rows) == 2 and rep.rows[1].rate is not None
    assert "rate" in capsys.readouterr().out


def test_cli_solve_with_mesh_file(tmp_path):
    path = tmp_path / "m.msh"
    write_mesh(disk_mesh(4), path)
    out = tmp_path / "s.csv"
    code = cli.main(["solve", "--s", "0.3", "--k", "2", "--flux", "plus", "--mesh", str(path),
                     "--tau", "0.1", "--T", "0.2", "--out", str(out)])
    assert code == 0
    row = ConvergenceReport.read(out).rows[0]
    assert (row.k, row.flux, row.K, row.dofs) == (2, "plus", 32, 192)
    assert row.rate is None


@pytest.mark.parametrize("argv", [
    ["solve", "--s", "1.5"],
    ["converge", "--s", "0.5", "--levels", "1,1"],
    ["converge", "--s", "0.5", "--levels", "0,9"],
    ["solve", "--s", "0.5", "--mesh", "/nonexistent/mesh"],
    ["solve", "--s", "0.5", "--tau", "2", "--T", "1"],
    ["converge", "--s", "a,b", "--levels", "0,1"],
])
def test_cli_configuration_errors(argv):
    assert cli.main(argv) == 2


def test_cli_argparse_error_exit_code():
    with pytest.raises(SystemExit) as info:
        cli.main(["solve", "--s", "0.5", "--flux", "central"])
    assert info.value.code == 2


def test_cli_solver_failure(monkeypatch, capsys):
    def boom(*a, **k):
        raise SolverError("CG did not converge", 1e-3)

    monkeypatch.setattr(cli, "solve_manufactured", boom)
    assert cli.main(["solve", "--s", "0.5", "--divisions", "2"]) == 3
    assert "solver failure" in capsys.readouterr().err


def test_example1_four_level_rate(tmp_path):
    # s = 0.4 on h ~ 0.6, 0.3, 0.15, 0.1: last rate near the published 2.0937 (+-0.4)
    rep = run_convergence(StudyConfig(s_values=(0.4,), levels=(0, 1, 2, 3)), cache_dir=tmp_path)
    assert [round(r.h, 2) for r in rep.rows] == [0.6, 0.33, 0.15, 0.1]
    assert abs(rep.rows[-1].rate - 2.0937) <= 0.4
    assert np.all(np.diff([r.l2_error for r in rep.rows]) < 0)
