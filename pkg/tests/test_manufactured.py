import math

import mpmath
import numpy as np
import pytest

from fracldg.basis import reference_basis
from fracldg.manufactured import (ManufacturedProblem, exact_solution, fractional_coefficient,
                                  fractional_laplacian, l2_error, source_space, source_term)
from fracldg.mesh import disk_mesh
from fracldg.timestep import project_l2
from oracles import radial_fractional_laplacian


@pytest.mark.parametrize("p", [0, 1, 6])
def test_exact_at_origin(p):
    assert exact_solution(np.zeros(2), 0.0, p) == 1.0
    assert exact_solution(np.array([0.0, 0.0]), 1.0, p) == pytest.approx(math.exp(-1))


def test_exact_vanishes_outside():
    x = np.array([[1.2, 0.0], [0.0, -1.0], [0.8, 0.8]])
    for p in (0, 2, 6):
        assert np.all(exact_solution(x, 0.3, p) == 0)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.8])
def test_coefficient_matches_direct_quadrature(s):
    # independent radial quadrature of the hypersingular integral at the origin
    assert fractional_coefficient(s, 6) == pytest.approx(radial_fractional_laplacian(s, 6, n=300), rel=1e-9)


def test_coefficient_closed_form_mpmath():
    for s in (0.25, 0.5, 0.9):
        for p in (0, 2, 6):
            mp = mpmath.mpf(4) ** s * mpmath.gamma(1 + s) * mpmath.gamma(p + 1) / mpmath.gamma(p + 1 - s)
            assert fractional_coefficient(s, p) == pytest.approx(float(mp), rel=1e-13)


def test_source_at_origin():
    # kappa(0.5, 6) - 1 with kappa = 720 sqrt(pi) / Gamma(6.5)
    kappa = 720 * math.sqrt(math.pi) / float(mpmath.gamma(6.5))
    assert source_space(np.zeros(2), 0.5, 6) == pytest.approx(kappa - 1, rel=1e-13)
    assert kappa - 1 == pytest.approx(3.433, abs=5e-4)
    assert source_term(np.zeros(2), 1.0, 0.5, 6) == pytest.approx(math.exp(-1) * (kappa - 1), rel=1e-13)


def test_p0_source_at_origin():
    s = 0.4
    val = source_space(np.zeros(2), s, 0)
    assert val == pytest.approx(4 ** s * math.gamma(1 + s) / math.gamma(1 - s) - 1, rel=1e-13)


def test_fractional_laplacian_off_center():
    # radial profile against mpmath's 2F1
    s, p = 0.6, 6
    r2 = np.array([0.1, 0.5, 0.81])
    x = np.column_stack([np.sqrt(r2), np.zeros(3)])
    ref = [fractional_coefficient(s, p) * float(mpmath.hyp2f1(s + 1, s - p, 1, z)) for z in r2]
    assert np.allclose(fractional_laplacian(x, s, p), ref, rtol=1e-12)
    with pytest.raises(ValueError):
        fractional_laplacian(np.array([1.0, 0.0]), s, p)


def test_error_of_projection_converges():
    b = reference_basis(1)
    errs, hs = [], []
    for N in (4, 8, 16):
        m = disk_mesh(N)
        u = project_l2(lambda X: exact_solution(X, 0.0, 6), m, b)
        errs.append(l2_error(u, lambda X: exact_solution(X, 0.0, 6), m, b))
        hs.append(m.h)
    rates = [math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(2)]
    assert min(rates) > 1.8


def test_error_of_zero():
    m = disk_mesh(4)
    b = reference_basis(1)
    assert l2_error(np.zeros(m.n_triangles * 3), lambda X: 0 * X[..., 0], m, b) == 0.0


def test_problem_validation():
    with pytest.raises(ValueError):
        ManufacturedProblem(6, 1.2)
    with pytest.raises(ValueError):
        ManufacturedProblem(-1, 0.5)


def test_published_error_h01():
    # Example 1, k = 1, s = 0.6, h ~ 0.1: published 2.785e-3 (factor 2 band)
    from fracldg.convergence import solve_manufactured
    from fracldg.timestep import SolverConfig
    res = solve_manufactured(disk_mesh(28), SolverConfig(s=0.6, linear_solver="modal"), 6.0)
    assert abs(res.h - 0.1) < 0.01
    assert 0.5 * 2.785e-3 <= res.l2_error <= 2 * 2.785e-3, f"error {res.l2_error:.4e}"
