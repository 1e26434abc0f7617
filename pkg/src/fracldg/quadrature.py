"""Quadrature on triangles, edges and triangle pairs.

Regular rules are built from Gauss-Jacobi products on collapsed
coordinates.  Triangle-pair rules for kernels ``|x - y|^(-2s)`` remove the
singularity with relative-coordinate (Duffy type) substitutions:

* ``IDENTICAL``: the difference ``z = y - x`` runs over the hexagon
  ``T - T``; in polar form ``z = lam * omega`` with ``omega`` on the hexagon
  boundary the kernel becomes ``lam^(-2s) |B omega|^(-2s)`` and the set of
  admissible ``x`` is a triangle of size ``1 - lam``.
* ``SHARED_EDGE``: the kernel only depends on ``(x1 - y1, x2, y2)``; these
  three coordinates are integrated in polar form over four cones and the
  remaining position along the edge runs over an interval of length
  ``1 - lam``.
* ``SHARED_VERTEX``: two cones over the far faces.
* ``DISJOINT``: tensor product of two collapsed triangle rules.

In every singular case the radial factor is absorbed into a Gauss-Jacobi
weight, so the rules converge exponentially for smooth ``g``.

All pair rules live on the reference triangle ``{(0,0), (1,0), (0,1)}``.
For a shared edge both triangles are assumed to list the shared vertices
first and in the same order; for a shared vertex it is local vertex 0 of
both.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)

    def integrate(self, f) -> float:
        vals = f(self.points) if self.points.shape[1] > 1 else f(self.points[:, 0])
        return float(np.dot(self.weights, vals))


def gauss_jacobi01(n: int, alpha: float = 0.0, beta: float = 0.0):
    """Gauss-Jacobi nodes/weights on [0, 1] for the weight ``(1-t)^alpha t^beta``."""
    if n < 1:
        raise QuadratureError("need at least one node")
    x, w = roots_jacobi(n, alpha, beta)
    t = 0.5 * (1.0 + x)
    w = w * 0.5 ** (1.0 + alpha + beta)
    order = np.argsort(t)
    return t[order], w[order]


@lru_cache(maxsize=None)
def simplex_rule(dim: int, m: int):
    """Collapsed Gauss rule on the unit ``dim``-simplex, ``m`` nodes per direction.

    Returns ``(points, weights)``; points are Cartesian coordinates
    ``t_1..t_dim`` with ``t >= 0, sum(t) <= 1`` and weights sum to ``1/dim!``.
    Exact for polynomials of total degree ``2m - 1``.
    """
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    t, w = gauss_jacobi01(m, alpha=dim - 1)
    sub_p, sub_w = simplex_rule(dim - 1, m)
    pts = np.empty((m * len(sub_w), dim))
    pts[:, 0] = np.repeat(t, len(sub_w))
    pts[:, 1:] = (1.0 - np.repeat(t, len(sub_w)))[:, None] * np.tile(sub_p, (m, 1))
    wts = np.repeat(w, len(sub_w)) * np.tile(sub_w, m)
    pts.flags.writeable = False
    wts.flags.writeable = False
    return pts, wts


def collapsed_triangle_rule(m: int) -> QuadratureRule:
    """Non-symmetric ``m x m`` conical product rule (exact to degree ``2m - 1``)."""
    p, w = simplex_rule(2, m)
    return QuadratureRule(p, w, 2 * m - 1)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Fully symmetric rule on the reference triangle exact to ``degree``.

    The conical product rule is averaged over the six vertex permutations,
    which keeps the exactness and makes the node set invariant under the
    triangle's symmetry group.
    """
    if not 0 <= degree <= 20:
        raise QuadratureError(f"unsupported triangle rule degree {degree}")
    n = max(1, math.ceil((degree + 1) / 2))
    p, w = simplex_rule(2, n)
    lam = np.column_stack([1.0 - p.sum(axis=1), p])
    pts, wts = [], []
    for perm in itertools.permutations(range(3)):
        q = lam[:, perm]
        pts.append(q[:, 1:])
        wts.append(w / 6.0)
    pts = np.concatenate(pts)
    wts = np.concatenate(wts)
    return QuadratureRule(pts, wts, degree)


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact to ``degree``."""
    if not 0 <= degree <= 40:
        raise QuadratureError(f"unsupported edge rule degree {degree}")
    n = max(1, math.ceil((degree + 1) / 2))
    t, w = gauss_jacobi01(n)
    return QuadratureRule(t[:, None], w, degree)


# -- triangle pairs -------------------------------------------------------

class PairCase(enum.Enum):
    IDENTICAL = 3
    SHARED_EDGE = 2
    SHARED_VERTEX = 1
    DISJOINT = 0

    @classmethod
    def from_shared(cls, n_shared: int) -> "PairCase":
        return cls(int(n_shared))


@dataclass(frozen=True)
class SingularPairRule:
    """Nodes ``(x_i, y_i)`` on the reference triangle pair and weights ``w_i``.

    ``sum(w * g(x, y) * |x - y|^(-2s))`` approximates the double integral of
    ``g |x - y|^(-2s)`` for smooth ``g``; here ``|x - y|`` is the distance
    between the *physical* images, so the rule applies to any affine pair
    with the adjacency of ``case``.
    """
    case: PairCase
    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    order: int
    s: float

    def __len__(self):
        return len(self.weights)


def _ss_to_ref(c):
    # coordinates with 1 >= c1 >= c2 >= 0 -> reference triangle coordinates
    return np.column_stack([c[:, 0] - c[:, 1], c[:, 1]])


def _grid(*axes):
    """Tensor product of 1D (nodes, weights) pairs; returns (nodes list, weights)."""
    nodes = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    w = axes[0][1]
    for a in axes[1:]:
        w = np.multiply.outer(w, a[1])
    return [n.ravel() for n in nodes], w.ravel()


# hexagon T - T split into the sectors where T n (T - z) has a fixed shape
_HEXAGON = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, -1.0]])


def _identical_rule(m: int, s: float):
    # z = y - x runs over the hexagon T - T in polar form z = lam * omega;
    # for fixed z the admissible x form the triangle of size (1 - lam)
    # anchored at (max(0, -z1), max(0, -z2)).
    lam_ax = gauss_jacobi01(m, alpha=2.0, beta=1.0 - 2.0 * s)
    # the angular factor |B omega|^(-2s) has complex poles near the middle of
    # each hexagon side; two panels per side keep the convergence rate high
    t, w = gauss_jacobi01(m)
    th_ax = (np.concatenate([0.5 * t, 0.5 + 0.5 * t]), np.concatenate([0.5 * w, 0.5 * w]))
    tp, tw = simplex_rule(2, m)
    xs, ys, ws = [], [], []
    for i in range(6):
        P, Q = _HEXAGON[i], _HEXAGON[(i + 1) % 6]
        jac = abs(P[0] * Q[1] - P[1] * Q[0])
        (lam, th), w = _grid(lam_ax, th_ax)
        om = P + th[:, None] * (Q - P)
        z = lam[:, None] * om
        anchor = np.maximum(0.0, -z)
        x = anchor[:, None, :] + (1.0 - lam)[:, None, None] * tp[None, :, :]
        y = x + z[:, None, :]
        ww = (w * jac * lam ** (2.0 * s))[:, None] * tw[None, :]
        xs.append(x.reshape(-1, 2))
        ys.append(y.reshape(-1, 2))
        ws.append(ww.ravel())
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)


def _edge_pieces():
    # relative coordinates r = (w, x2, y2) with w = x1 - y1; each piece is the
    # cone over a planar section {H = 1}, given by an origin and two spanning
    # vectors and a flag for square (True) or triangle (False) parameter domain
    return [
        # w >= 0, x2 >= y2 - w:  H = x2 + w, section w = 1 - x2, x2, y2 in [0, 1]
        (np.array([1.0, 0.0, 0.0]), np.array([-1.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]), True),
        # w >= 0, x2 <= y2 - w:  H = y2, section y2 = 1, w + x2 <= 1
        (np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), False),
        # w <= 0, x2 >= y2 - w:  H = x2, section x2 = 1, -w + y2 <= 1
        (np.array([0.0, 1.0, 0.0]), np.array([-1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]), False),
        # w <= 0, x2 <= y2 - w:  H = y2 - w, section y2 = 1 + w, w in [-1, 0], x2 in [0, 1]
        (np.array([0.0, 0.0, 1.0]), np.array([-1.0, 0.0, -1.0]), np.array([0.0, 1.0, 0.0]), True),
    ]


def _edge_rule(m: int, s: float):
    # shared edge is [0, 1] x {0} in both reference triangles; the kernel only
    # depends on r = (x1 - y1, x2, y2), which is integrated in polar form
    # r = lam * omega, while x1 runs over an interval of length (1 - lam).
    lam_ax = gauss_jacobi01(m, alpha=1.0, beta=2.0 - 2.0 * s)
    u_ax = gauss_jacobi01(m)
    sq_a, sq_b = gauss_jacobi01(m), gauss_jacobi01(m)
    tp, tw = simplex_rule(2, m)
    xs, ys, ws = [], [], []
    for origin, da, db, square in _edge_pieces():
        if square:
            (ga, gb), gw = _grid(sq_a, sq_b)
        else:
            ga, gb, gw = tp[:, 0], tp[:, 1], tw
        om = origin + ga[:, None] * da + gb[:, None] * db
        jac = abs(np.linalg.det(np.stack([origin, da, db])))
        (lam, u), w = _grid(lam_ax, u_ax)
        r = lam[:, None, None] * om[None, :, :]
        wr, x2, y2 = r[..., 0], r[..., 1], r[..., 2]
        x1 = np.maximum(0.0, wr) + ((1.0 - lam) * u)[:, None]
        y1 = x1 - wr
        ww = (w * jac * lam ** (2.0 * s))[:, None] * gw[None, :]
        xs.append(np.stack([x1, x2], -1).reshape(-1, 2))
        ys.append(np.stack([y1, y2], -1).reshape(-1, 2))
        ws.append(ww.ravel())
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)


def _vertex_rule(m: int, s: float):
    # cones over the faces {x1 = 1} and {y1 = 1} (staircase coordinates)
    xi_ax = gauss_jacobi01(m, beta=3.0 - 2.0 * s)
    e_ax = gauss_jacobi01(m)
    e2_ax = gauss_jacobi01(m, beta=1.0)
    (xi, e1, e2, e3), w = _grid(xi_ax, e_ax, e2_ax, e_ax)
    w = w * xi ** (2.0 * s)
    near = _ss_to_ref(np.column_stack([xi, xi * e1]))
    far = _ss_to_ref(np.column_stack([xi * e2, xi * e2 * e3]))
    return np.concatenate([near, far]), np.concatenate([far, near]), np.concatenate([w, w])


@lru_cache(maxsize=64)
def singular_pair_rule(case: PairCase, m: int, s: float) -> SingularPairRule:
    """Quadrature rule for ``g(x, y) |x - y|^(-2s)`` over a triangle pair.

    Parameters
    ----------
    case : PairCase
        Adjacency of the pair the rule will be applied to.
    m : int
        Gauss points per direction (``m >= 2``).
    s : float
        Fractional order in (0, 1); the kernel exponent is ``-2s``.
    """
    case = PairCase(case)
    if int(m) != m or m < 2:
        raise QuadratureError("per-direction order must be an integer >= 2")
    if not 0.0 < s < 1.0:
        raise QuadratureError("s must lie in (0, 1)")
    m = int(m)
    if case is PairCase.DISJOINT:
        p, w = simplex_rule(2, m)
        n = len(w)
        x = np.repeat(p, n, axis=0)
        y = np.tile(p, (n, 1))
        wts = np.repeat(w, n) * np.tile(w, n)
    elif case is PairCase.SHARED_VERTEX:
        x, y, wts = _vertex_rule(m, s)
    elif case is PairCase.IDENTICAL:
        x, y, wts = _identical_rule(m, s)
    else:
        x, y, wts = _edge_rule(m, s)
    for arr in (x, y, wts):
        arr.flags.writeable = False
    return SingularPairRule(case, x, y, wts, m, float(s))


def pair_integral(rule: SingularPairRule, tri_x, tri_y, s: float, fx=None, fy=None) -> float:
    """Evaluate ``int_Tx int_Ty fx(x) fy(y) |x - y|^(-2s)`` with ``rule``.

    ``tri_x``/``tri_y`` are (3, 2) vertex arrays ordered as the rule's case
    requires; ``fx``/``fy`` take reference coordinates (default 1).
    """
    tx = np.asarray(tri_x, float)
    ty = np.asarray(tri_y, float)
    Bx = np.column_stack([tx[1] - tx[0], tx[2] - tx[0]])
    By = np.column_stack([ty[1] - ty[0], ty[2] - ty[0]])
    X = rule.x @ Bx.T + tx[0]
    Y = rule.y @ By.T + ty[0]
    d2 = ((X - Y) ** 2).sum(axis=1)
    g = np.ones(len(rule))
    if fx is not None:
        g = g * fx(rule.x)
    if fy is not None:
        g = g * fy(rule.y)
    val = np.dot(rule.weights, g * d2 ** (-s))
    return float(val * abs(np.linalg.det(Bx)) * abs(np.linalg.det(By)))
