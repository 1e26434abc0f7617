import math

import numpy as np
import pytest

from fracldg.basis import reference_basis
from fracldg.ldg import assemble_ldg, assemble_spatial_operator
from fracldg.manufactured import ManufacturedProblem
from fracldg.mesh import disk_mesh
from fracldg.riesz import assemble_riesz_gram
from fracldg.timestep import (ConfigError, Problem, ShiftedSystem, SolverConfig, SolverError, State,
                              m_norm, project_l2, run, step, time_grid)


def build(mesh, k=1, s=0.5, flux="minus", **kw):
    b = reference_basis(k)
    ops = assemble_ldg(mesh, b, flux)
    S = assemble_riesz_gram(mesh, b, s)
    A = assemble_spatial_operator(ops.G, ops.M, S, ops.P)
    cfg = SolverConfig(s=s, k=k, flux=flux, **kw)
    return b, ops, ShiftedSystem(ops.M, A, cfg), cfg


@pytest.fixture(scope="module")
def small():
    return build(disk_mesh(4), tau=0.05, T=0.2)


@pytest.mark.parametrize("k", [1, 2])
def test_projection_reproduces_polynomials(coarse_mesh, k):
    b = reference_basis(k)
    f = lambda X: 1 + X[..., 0] - 2 * X[..., 1] + (k > 1) * X[..., 0] * X[..., 1]  # noqa: E731
    B, b0 = coarse_mesh.affine_maps()
    nodes = np.einsum("kcd,qd->kqc", B, b.nodes) + b0[:, None]
    assert np.allclose(project_l2(f, coarse_mesh, b), f(nodes).ravel(), atol=1e-12)
    assert np.all(project_l2(lambda X: 0 * X[..., 0], coarse_mesh, b) == 0)


def test_projection_at_origin_converges():
    b = reference_basis(1)
    errs, hs = [], []
    for N in (4, 8, 16):
        m = disk_mesh(N)
        u = project_l2(lambda X: np.clip(1 - (X ** 2).sum(-1), 0, None) ** 6, m, b)
        k = m.locate([0.0, 0.0])
        j = np.flatnonzero(np.all(m.vertices[m.triangles[k]] == 0.0, axis=1))[0]
        errs.append(abs(u.reshape(-1, 3)[k, j] - 1.0))
        hs.append(m.h)
    assert errs[2] < errs[1] < errs[0]
    assert math.log(errs[1] / errs[2]) / math.log(hs[1] / hs[2]) > 1.5


def test_zero_stays_zero(small):
    b, ops, system, cfg = small
    st = step(State(0.0, np.zeros(ops.n)), cfg, system)
    assert np.all(st.u == 0) and st.t == cfg.tau
    single = SolverConfig(s=cfg.s, tau=0.1, T=0.1)
    out = run(single, Problem(disk_mesh(4), b), ShiftedSystem(ops.M, system.A, single))
    assert out.t == 0.1 and np.all(out.u == 0)


@pytest.mark.parametrize("solver", ["cg", "cholesky", "modal"])
def test_energy_decays(small, rng, solver):
    b, ops, system, cfg = small
    cfg = SolverConfig(s=cfg.s, tau=0.1, T=1.0, linear_solver=solver)
    sysm = ShiftedSystem(ops.M, system.A, cfg)
    st = State(0.0, rng.standard_normal(ops.n))
    for _ in range(5):
        new = step(st, cfg, sysm)
        assert m_norm(ops.M, new.u) <= m_norm(ops.M, st.u)
        st = new


def test_solvers_agree(small):
    b, ops, system, _ = small
    mesh = disk_mesh(4)
    prob = ManufacturedProblem(6, 0.5).problem(mesh, b)
    out = {}
    for solver in ("cg", "cholesky", "modal"):
        cfg = SolverConfig(s=0.5, tau=0.02, T=0.2, linear_solver=solver)
        out[solver] = run(cfg, prob, ShiftedSystem(ops.M, system.A, cfg)).u
    scale = np.abs(out["cholesky"]).max()
    assert np.abs(out["cg"] - out["cholesky"]).max() < 1e-9 * scale
    assert np.abs(out["modal"] - out["cholesky"]).max() < 1e-10 * scale


def test_callback_path_matches_modal(small):
    b, ops, system, _ = small
    prob = ManufacturedProblem(6, 0.5).problem(disk_mesh(4), b)
    cfg = SolverConfig(s=0.5, tau=0.05, T=0.2, linear_solver="modal")
    seen = []
    a = run(cfg, prob, ShiftedSystem(ops.M, system.A, cfg), callback=lambda st: seen.append(st.t))
    c = run(cfg, prob, ShiftedSystem(ops.M, system.A, cfg))
    assert seen == pytest.approx([0.05, 0.1, 0.15, 0.2])
    assert np.allclose(a.u, c.u, rtol=0, atol=1e-12)


def test_general_source_matches_separable(small):
    b, ops, system, _ = small
    mesh = disk_mesh(4)
    man = ManufacturedProblem(6, 0.5)
    cfg = SolverConfig(s=0.5, tau=0.05, T=0.2, linear_solver="cholesky")
    sysm = ShiftedSystem(ops.M, system.A, cfg)
    a = run(cfg, man.problem(mesh, b), sysm)
    c = run(cfg, Problem(mesh, b, u0=man.initial, source=man.source), sysm)
    assert np.allclose(a.u, c.u, atol=1e-13)


def test_time_grid_truncates():
    cfg = SolverConfig(s=0.5, tau=0.3, T=1.0)
    t = time_grid(cfg)
    assert t[-1] == 1.0 and len(t) == 5
    assert np.allclose(np.diff(t), [0.3, 0.3, 0.3, 0.1])


def test_first_order_in_time():
    mesh = disk_mesh(4)
    b, ops, system, _ = build(mesh, tau=0.01, T=0.2)
    prob = ManufacturedProblem(6, 0.5).problem(mesh, b)

    def final(tau):
        cfg = SolverConfig(s=0.5, tau=tau, T=0.2, linear_solver="modal")
        return run(cfg, prob, ShiftedSystem(ops.M, system.A, cfg)).u

    ref = final(0.2 / 3200)
    e = [m_norm(ops.M, final(tau) - ref) for tau in (0.02, 0.01, 0.005)]
    r1, r2 = e[0] / e[1], e[1] / e[2]
    assert 1.7 < r1 < 2.3 and 1.7 < r2 < 2.3


def test_cg_failure_reports_residual(small, rng):
    b, ops, system, _ = small
    cfg = SolverConfig(s=0.5, tau=0.1, T=1.0, max_iter=1)
    with pytest.raises(SolverError) as info:
        step(State(0.0, rng.standard_normal(ops.n)), cfg, ShiftedSystem(ops.M, system.A, cfg))
    assert info.value.residual > cfg.rtol


@pytest.mark.parametrize("kw", [dict(s=0.0), dict(s=1.0), dict(s=0.5, k=5), dict(s=0.5, theta=0),
                                dict(s=0.5, tau=2.0), dict(s=0.5, rtol=1e-3),
                                dict(s=0.5, linear_solver="lu"), dict(s=0.5, flux="central")])
def test_config_validation(kw):
    with pytest.raises((ConfigError, ValueError)):
        SolverConfig(**kw)


def test_state_rejects_nan():
    with pytest.raises(SolverError):
        State(0.0, np.array([1.0, np.nan]))
    st = State(0.0, np.ones(3))
    with pytest.raises(ValueError):
        st.u[0] = 2.0


def test_published_error_h03():
    # Example 1, k = 1, s = 0.6, h ~ 0.3: the published value is 2.827e-2 (factor 2 band)
    mesh = disk_mesh(8)
    b, ops, system, cfg = build(mesh, s=0.6, tau=2.5e-4, T=1.0, linear_solver="modal")
    man = ManufacturedProblem(6, 0.6)
    st = run(cfg, man.problem(mesh, b), system)
    err = man.error(st.u, mesh, b, st.t)
    assert 0.5 * 2.827e-2 <= err <= 2 * 2.827e-2, f"error {err:.4e}"


def test_halving_h_gains_two_orders():
    errs, hs = [], []
    for N in (4, 8):
        mesh = disk_mesh(N)
        b, ops, system, cfg = build(mesh, s=0.6, tau=2.5e-4, T=1.0, linear_solver="modal")
        man = ManufacturedProblem(6, 0.6)
        st = run(cfg, man.problem(mesh, b), system)
        errs.append(man.error(st.u, mesh, b, st.t))
        hs.append(mesh.h)
    assert 1.7 < math.log(errs[0] / errs[1]) / math.log(hs[0] / hs[1]) < 2.6
