"""Radial manufactured solutions ``u = exp(-t) (1 - |x|^2)_+^p`` on the unit disk.

The fractional Laplacian of ``(1 - |x|^2)_+^p`` in two dimensions is

    (-Delta)^s (1 - |x|^2)_+^p = kappa(s, p) 2F1(s + 1, s - p; 1; |x|^2),
    kappa(s, p) = 4^s Gamma(1 + s) Gamma(p + 1) / Gamma(p + 1 - s)
                = -c_{2,s} pi Gamma(-s) Gamma(p + 1) / Gamma(p + 1 - s),

for ``|x| < 1``, so ``u_t + (-Delta)^s u = f`` holds with

    f = exp(-t) [kappa 2F1(s + 1, s - p; 1; |x|^2) - (1 - |x|^2)^p].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import ReferenceBasis
from .mesh import Mesh
from .riesz import frac_coefficient
from .special import gamma_fn, hyp2f1
from .timestep import Problem, quadrature_points


def _r2(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0] ** 2 + x[..., 1] ** 2


def gamma_neg(s: float) -> float:
    """``Gamma(-s)`` for ``0 < s < 1`` as ``Gamma(2 - s) / ((-s)(1 - s))``."""
    return gamma_fn(2.0 - s) / ((-s) * (1.0 - s))


def fractional_coefficient(s: float, p: float) -> float:
    """``kappa(s, p)``, the value of ``(-Delta)^s (1 - |x|^2)_+^p`` at the origin."""
    if not 0 < s < 1 or p < 0:
        raise ValueError("need 0 < s < 1 and p >= 0")
    c = frac_coefficient(2, s).value
    return -c * math.pi * gamma_neg(s) * gamma_fn(p + 1.0) / gamma_fn(p + 1.0 - s)


def exact_solution(x, t: float, p: float):
    r2 = _r2(x)
    base = np.clip(1.0 - r2, 0.0, None)
    if p == 0:
        val = np.where(r2 < 1.0, 1.0, 0.0)
    else:
        val = base ** p
    return math.exp(-t) * val


def fractional_laplacian(x, s: float, p: float):
    """``(-Delta)^s (1 - |x|^2)_+^p`` for ``|x| < 1``."""
    r2 = _r2(x)
    if np.any(r2 >= 1.0):
        raise ValueError("closed form only holds strictly inside the unit disk")
    return fractional_coefficient(s, p) * hyp2f1(s + 1.0, s - p, 1.0, r2)


def source_space(x, s: float, p: float):
    """Spatial factor of the source: ``f(x, t) = exp(-t) * source_space(x)``."""
    r2 = _r2(x)
    return fractional_laplacian(x, s, p) - (1.0 - r2) ** p


def source_term(x, t: float, s: float, p: float):
    return math.exp(-t) * source_space(x, s, p)


def l2_error(u, exact, mesh: Mesh, basis: ReferenceBasis, degree: int | None = None) -> float:
    """``||u_h - exact||_{L2(Omega_h)}`` with a rule exact to degree ``2k + 4``."""
    degree = 2 * basis.k + 4 if degree is None else degree
    X, W, rule = quadrature_points(mesh, degree)
    uh = np.asarray(u, float).reshape(mesh.n_triangles, basis.n) @ basis.values(rule.points).T
    diff = uh - np.asarray(exact(X), dtype=float)
    return float(math.sqrt(max(0.0, np.sum(W * diff * diff))))


@dataclass(frozen=True)
class ManufacturedProblem:
    p: float
    s: float

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ValueError(f"s = {self.s} must lie in (0, 1)")
        if self.p < 0:
            raise ValueError(f"p = {self.p} must be nonnegative")

    def exact(self, x, t: float):
        return exact_solution(x, t, self.p)

    def initial(self, x):
        return exact_solution(x, 0.0, self.p)

    def source(self, x, t: float):
        return source_term(x, t, self.s, self.p)

    def problem(self, mesh: Mesh, basis: ReferenceBasis, quad_degree: int | None = None) -> Problem:
        s, p = self.s, self.p
        return Problem(mesh, basis, u0=self.initial,
                       separable=(lambda X: source_space(X, s, p), lambda t: math.exp(-t)),
                       quad_degree=quad_degree)

    def error(self, u, mesh: Mesh, basis: ReferenceBasis, t: float) -> float:
        return l2_error(u, lambda X: self.exact(X, t), mesh, basis)
