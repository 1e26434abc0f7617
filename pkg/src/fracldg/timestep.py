"""Backward Euler time stepping for ``M du/dt + A u = F(t)``."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, cg

from .basis import ReferenceBasis
from .blockdiag import BlockDiagonal
from .ldg import FluxVariant
from .mesh import Mesh
from .quadrature import triangle_rule

log = logging.getLogger(__name__)

LINEAR_SOLVERS = ("cg", "cholesky", "modal")


class SolverError(RuntimeError):
    """Linear solve that did not reach the requested tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    s: float
    k: int = 1
    flux: FluxVariant = FluxVariant.MINUS
    theta: float = 5.0
    tau: float = 2.5e-4
    T: float = 1.0
    rtol: float = 1e-12
    max_iter: int = 5000
    # "cg" solves every step with preconditioned CG on the matrix-free
    # operator; "cholesky" factors the dense M + tau A once; "modal" uses the
    # generalized eigenbasis of (A, M), which makes each step diagonal.
    linear_solver: str = "cg"

    def __post_init__(self):
        object.__setattr__(self, "flux", FluxVariant.parse(self.flux))
        if not 0.0 < self.s < 1.0:
            raise ConfigError(f"s = {self.s} must lie in (0, 1)")
        if self.k not in (1, 2, 3, 4):
            raise ConfigError(f"unsupported degree k = {self.k}")
        if not self.theta > 0:
            raise ConfigError("theta must be positive")
        if not (self.tau > 0 and self.T > 0 and self.tau <= self.T):
            raise ConfigError(f"need 0 < tau <= T (tau = {self.tau}, T = {self.T})")
        if not 0.0 < self.rtol <= 1e-6:
            raise ConfigError("linear solver tolerance must lie in (0, 1e-6]")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        if self.linear_solver not in LINEAR_SOLVERS:
            raise ConfigError(f"linear_solver must be one of {LINEAR_SOLVERS}")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.T / self.tau - 1e-9))


@dataclass(frozen=True)
class State:
    t: float
    u: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if not np.all(np.isfinite(u)):
            raise SolverError(f"non-finite state at t = {self.t}")
        u.flags.writeable = False
        object.__setattr__(self, "u", u)


# -- projections ---------------------------------------------------------------

def quadrature_points(mesh: Mesh, degree: int):
    """Physical points ``(K, nq, 2)`` and weights ``(K, nq)`` of a triangle rule."""
    rule = triangle_rule(degree)
    B, b0 = mesh.affine_maps()
    X = np.einsum("kcd,qd->kqc", B, rule.points) + b0[:, None, :]
    det = np.abs(B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0])
    return X, det[:, None] * rule.weights[None, :], rule


def load_vector(func: Callable, mesh: Mesh, basis: ReferenceBasis, degree: int | None = None) -> np.ndarray:
    """``b[K, a] = int_K f phi_a`` for ``f`` taking an ``(..., 2)`` point array."""
    degree = 2 * basis.k + 4 if degree is None else degree
    X, W, rule = quadrature_points(mesh, degree)
    fv = np.asarray(func(X), dtype=float)
    phi = basis.values(rule.points)
    return np.einsum("kq,kq,qa->ka", W, fv, phi).ravel()


def project_l2(func: Callable, mesh: Mesh, basis: ReferenceBasis, M: BlockDiagonal | None = None,
               degree: int | None = None) -> np.ndarray:
    """Coefficients of the elementwise L2 projection of ``func``."""
    if M is None:
        from .ldg import assemble_mass
        M = assemble_mass(mesh, basis)
    return M.solve(load_vector(func, mesh, basis, degree))


def m_norm(M: BlockDiagonal, u) -> float:
    u = np.asarray(u, float)
    return float(math.sqrt(max(0.0, u @ M.matvec(u))))


# -- linear systems --------------------------------------------------------------

class ShiftedSystem:
    """Solver for ``(M + tau A) x = r`` with the strategy named in the config."""

    def __init__(self, M: BlockDiagonal, A, config: SolverConfig):
        self.M = M
        self.A = A
        self.config = config
        self._chol = {}
        self._eig = None
        self.iterations = 0

    def _dense_A(self):
        return self.A.dense() if hasattr(self.A, "dense") else np.asarray(self.A)

    def eigen(self):
        if self._eig is None:
            lam, V = sla.eigh(self._dense_A(), self.M.toarray())
            self._eig = (lam, V)
        return self._eig

    def solve(self, rhs, tau: float, x0=None) -> np.ndarray:
        mode = self.config.linear_solver
        if mode == "cg":
            return self._cg(rhs, tau, x0)
        if mode == "cholesky":
            key = float(tau)
            if key not in self._chol:
                self._chol[key] = sla.cho_factor(self.M.toarray() + tau * self._dense_A())
            return sla.cho_solve(self._chol[key], rhs)
        lam, V = self.eigen()
        return V @ ((V.T @ rhs) / (1.0 + tau * lam))

    def _cg(self, rhs, tau, x0):
        n = len(rhs)
        A = self.A
        op = LinearOperator((n, n), matvec=lambda x: self.M.matvec(x) + tau * A.matvec(x), dtype=float)
        pre = LinearOperator((n, n), matvec=self.M.solve, dtype=float)
        count = [0]

        def cb(_):
            count[0] += 1

        x, info = cg(op, rhs, x0=x0, rtol=self.config.rtol, atol=0.0, maxiter=self.config.max_iter,
                     M=pre, callback=cb)
        self.iterations += count[0]
        bnorm = np.linalg.norm(rhs)
        res = np.linalg.norm(rhs - op.matvec(x)) / bnorm if bnorm > 0 else np.linalg.norm(op.matvec(x))
        if info != 0:
            raise SolverError(f"CG did not converge in {self.config.max_iter} iterations "
                              f"(relative residual {res:.3e})", res)
        return x


def step(state: State, config: SolverConfig, system: ShiftedSystem, load_next=None,
         tau: float | None = None) -> State:
    """One backward Euler step ``(M + tau A) u_new = M u_old + tau b(t + tau)``.

    ``tau`` defaults to ``config.tau``; the last step of :func:`run` passes
    the remainder so that the final time is hit exactly.
    """
    tau = config.tau if tau is None else float(tau)
    rhs = system.M.matvec(state.u)
    if load_next is not None:
        rhs = rhs + tau * np.asarray(load_next, float)
    if not np.any(rhs):
        return State(state.t + tau, np.zeros_like(rhs))
    u = system.solve(rhs, tau, x0=state.u.copy())
    return State(state.t + tau, u)


def time_grid(config: SolverConfig) -> np.ndarray:
    """Times ``t_0 = 0 < t_1 < ... = T`` with the last step truncated."""
    n = config.n_steps
    t = np.minimum(np.arange(n + 1) * config.tau, config.T)
    t[-1] = config.T
    return t


@dataclass
class Problem:
    """Data for a run: mesh, basis, initial value and source.

    The source is either a general ``f(x, t)`` or, when ``separable`` is
    given, ``time_factor(t) * space(x)``; the separable form lets the load
    vector be computed once.
    """
    mesh: Mesh
    basis: ReferenceBasis
    u0: Callable | None = None
    source: Callable | None = None
    separable: tuple[Callable, Callable] | None = None
    quad_degree: int | None = None


def run(config: SolverConfig, problem: Problem, system: ShiftedSystem, callback=None) -> State:
    """Integrate from ``t = 0`` to ``T``; ``callback(state)`` sees every new state."""
    mesh, basis = problem.mesh, problem.basis
    M = system.M
    u = np.zeros(M.shape[0]) if problem.u0 is None else project_l2(problem.u0, mesh, basis, M,
                                                                  problem.quad_degree)
    times = time_grid(config)
    base_load = None
    if problem.separable is not None:
        space, time_factor = problem.separable
        base_load = load_vector(space, mesh, basis, problem.quad_degree)

    def load_at(t):
        if base_load is not None:
            return time_factor(t) * base_load
        if problem.source is not None:
            return load_vector(lambda X: problem.source(X, t), mesh, basis, problem.quad_degree)
        return None

    if config.linear_solver == "modal" and callback is None:
        return _run_modal(config, system, u, times, base_load, problem, load_at)

    state = State(0.0, u)
    for n in range(1, len(times)):
        tau = times[n] - times[n - 1]
        state = step(state, config, system, load_at(times[n]), tau=tau)
        state = replace(state, t=float(times[n]))
        if callback is not None:
            callback(state)
    return state


def _run_modal(config, system, u, times, base_load, problem, load_at):
    # in the M-orthonormal eigenbasis each step is a scalar recursion
    lam, V = system.eigen()
    c = V.T @ system.M.matvec(u)
    cb = V.T @ base_load if base_load is not None else None
    time_factor = problem.separable[1] if problem.separable is not None else None
    for n in range(1, len(times)):
        tau = times[n] - times[n - 1]
        t = times[n]
        if cb is not None:
            rhs = c + tau * time_factor(t) * cb
        else:
            load = load_at(t)
            rhs = c if load is None else c + tau * (V.T @ load)
        c = rhs / (1.0 + tau * lam)
    return State(float(times[-1]), V @ c)
