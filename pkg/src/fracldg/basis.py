"""Nodal Lagrange bases on the reference triangle and element matrices."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quadrature import triangle_rule

MAX_DEGREE = 4


class BasisError(ValueError):
    pass


def _exponents(k: int) -> np.ndarray:
    return np.array([(i, d - i) for d in range(k + 1) for i in range(d, -1, -1)], dtype=np.int64)


def lattice_nodes(k: int) -> np.ndarray:
    """Uniform degree-``k`` lattice: vertices first, then edge and interior nodes."""
    pts = [(i / k, j / k) for j in range(k + 1) for i in range(k + 1 - j)]
    pts = np.array(pts, dtype=float)
    lam = np.column_stack([1.0 - pts.sum(axis=1), pts])
    on_vertex = np.isclose(lam, 1.0).any(axis=1)
    on_edge = np.isclose(lam, 0.0).any(axis=1) & ~on_vertex
    # vertices in reference order (0,0), (1,0), (0,1)
    vert = [np.flatnonzero(np.isclose(lam[:, c], 1.0))[0] for c in range(3)]
    edge = np.flatnonzero(on_edge)
    # edges listed opposite vertex 0, 1, 2 and by distance from their start
    edge_sorted = []
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        sel = edge[np.isclose(lam[edge, c], 0.0)]
        edge_sorted.extend(sel[np.argsort(-lam[sel, a] + lam[sel, b])])
    interior = np.flatnonzero(~on_vertex & ~on_edge)
    order = np.concatenate([vert, edge_sorted, interior]).astype(np.int64)
    return pts[order]


@dataclass(frozen=True)
class ReferenceBasis:
    """Lagrange basis ``l_i`` of degree ``k`` with ``l_i(node_j) = delta_ij``."""
    k: int
    nodes: np.ndarray
    _coeffs: np.ndarray = field(repr=False)
    _exps: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def _monomials(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        return pts[:, None, 0] ** self._exps[:, 0] * pts[:, None, 1] ** self._exps[:, 1]

    def values(self, pts) -> np.ndarray:
        """Basis values, shape ``(n_points, n)``."""
        return self._monomials(pts) @ self._coeffs

    def gradients(self, pts) -> np.ndarray:
        """Reference gradients, shape ``(n_points, n, 2)``."""
        pts = np.atleast_2d(np.asarray(pts, float))
        ex, ey = self._exps[:, 0], self._exps[:, 1]
        x, y = pts[:, None, 0], pts[:, None, 1]
        dx = np.where(ex > 0, ex * x ** np.maximum(ex - 1, 0), 0.0) * y ** ey
        dy = x ** ex * np.where(ey > 0, ey * y ** np.maximum(ey - 1, 0), 0.0)
        return np.stack([dx @ self._coeffs, dy @ self._coeffs], axis=-1)


_CACHE: dict[int, ReferenceBasis] = {}


def reference_basis(k: int) -> ReferenceBasis:
    if int(k) != k or not 1 <= k <= MAX_DEGREE:
        raise BasisError(f"unsupported polynomial degree {k!r} (1..{MAX_DEGREE})")
    k = int(k)
    if k not in _CACHE:
        nodes = lattice_nodes(k)
        exps = _exponents(k)
        V = nodes[:, None, 0] ** exps[:, 0] * nodes[:, None, 1] ** exps[:, 1]
        coeffs = np.linalg.inv(V)
        for a in (nodes, coeffs):
            a.flags.writeable = False
        _CACHE[k] = ReferenceBasis(k, nodes, coeffs, exps)
    return _CACHE[k]


def local_matrices(triangle, basis: ReferenceBasis):
    """Element mass and gradient matrices on a physical triangle.

    Returns ``(M, Gx, Gy)`` with ``M[a, b] = int l_a l_b`` and
    ``Gx[a, b] = int l_a d_x l_b`` (so ``Gx @ u`` holds the moments of
    ``d_x u_h``).
    """
    tri = np.asarray(triangle, float)
    B = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    rule = triangle_rule(2 * basis.k)
    phi = basis.values(rule.points)
    dphi = basis.gradients(rule.points) @ np.linalg.inv(B)
    w = rule.weights * abs(det)
    M = (phi * w[:, None]).T @ phi
    Gx = (phi * w[:, None]).T @ dphi[..., 0]
    Gy = (phi * w[:, None]).T @ dphi[..., 1]
    return M, Gx, Gy
