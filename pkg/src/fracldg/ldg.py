"""LDG operators for ``u_t + (-Delta)^s u = f`` written as a first-order system.

With ``p = grad u`` and ``q = (-Delta)^(s-1) p`` the semi-discrete scheme is

    M p_c = G_c u,        M q_c = S p_c,        M du/dt = D q - P u + F,

where ``G_c`` carries the alternating trace ``u_hat`` and ``D`` the
opposite trace ``q_hat``.  Because the traces come from opposite sides,
``D = -G^T`` exactly and the spatial operator

    A = sum_c G_c^T M^{-1} S M^{-1} G_c + P

is symmetric positive semidefinite whenever ``S`` is.

Flux choice on an interior edge with unit normal ``n`` (owner to neighbor)
and ``b = beta . n = +-1/2``: ``PLUS`` takes ``u_hat`` from the owner when
``b > 0`` and from the neighbor otherwise; ``MINUS`` does the reverse.
On the boundary ``u_hat = 0`` and ``q_hat`` is the interior trace; the
penalty ``(theta / h) int u v`` acts on the boundary edges with
``b > 0`` (``PLUS``) or ``b < 0`` (``MINUS``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import ReferenceBasis
from .blockdiag import BlockDiagonal
from .mesh import Mesh
from .quadrature import edge_rule, triangle_rule


class FluxVariant(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @classmethod
    def parse(cls, value) -> "FluxVariant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown flux variant {value!r} (expected 'plus' or 'minus')") from None


def _element_data(mesh: Mesh, basis: ReferenceBasis):
    rule = triangle_rule(2 * basis.k)
    phi = basis.values(rule.points)
    dref = basis.gradients(rule.points)
    B, _ = mesh.affine_maps()
    Binv = np.linalg.inv(B)
    det = np.abs(np.linalg.det(B))
    w = det[:, None] * rule.weights[None, :]
    Mloc = np.einsum("kq,qa,qb->kab", w, phi, phi)
    # physical gradient: dref @ Binv
    dphys = np.einsum("qbr,krc->kqbc", dref, Binv)
    Gx = np.einsum("kq,qa,kqb->kab", w, phi, dphys[..., 0])
    Gy = np.einsum("kq,qa,kqb->kab", w, phi, dphys[..., 1])
    return Mloc, Gx, Gy


def assemble_mass(mesh: Mesh, basis: ReferenceBasis) -> BlockDiagonal:
    Mloc, _, _ = _element_data(mesh, basis)
    return BlockDiagonal(0.5 * (Mloc + Mloc.transpose(0, 2, 1)))


def _edge_traces(mesh: Mesh, basis: ReferenceBasis):
    """Basis values of owner and neighbor at edge quadrature points, and weights."""
    rule = edge_rule(2 * basis.k)
    t = rule.points[:, 0]
    ev = mesh.edge_vertices
    a = mesh.vertices[ev[:, 0]]
    b = mesh.vertices[ev[:, 1]]
    X = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    w = mesh.edge_length[:, None] * rule.weights[None, :]
    B, b0 = mesh.affine_maps()
    Binv = np.linalg.inv(B)

    def ref(elem, sel):
        xi = np.einsum("erc,eqc->eqr", Binv[elem], X[sel] - b0[elem][:, None, :])
        return basis.values(xi.reshape(-1, 2)).reshape(len(elem), len(t), basis.n)

    owner = mesh.edge_owner
    nb = mesh.edge_neighbor
    phi_o = ref(owner, slice(None))
    phi_n = np.zeros_like(phi_o)
    interior = nb >= 0
    phi_n[interior] = ref(nb[interior], interior)
    return phi_o, phi_n, w


class _Triplets:
    def __init__(self, N):
        self.N = N
        self.rows, self.cols, self.vals = [], [], []

    def add(self, ei, ej, blocks):
        # blocks (E, N, N) placed at element rows ei, element cols ej
        if len(ei) == 0:
            return
        N = self.N
        r = (ei[:, None, None] * N + np.arange(N)[None, :, None]) + 0 * np.arange(N)[None, None, :]
        c = (ej[:, None, None] * N + np.arange(N)[None, None, :]) + 0 * np.arange(N)[None, :, None]
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(blocks.ravel())

    def tocsr(self, shape):
        if not self.rows:
            return sp.csr_matrix(shape)
        m = sp.coo_matrix((np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
                          shape=shape)
        return m.tocsr()


def _uhat_from_owner(mesh: Mesh, flux: FluxVariant) -> np.ndarray:
    b = mesh.edge_beta
    return b > 0 if flux is FluxVariant.PLUS else b < 0


def _face_parts(mesh, basis):
    phi_o, phi_n, w = _edge_traces(mesh, basis)
    Moo = np.einsum("eq,eqa,eqb->eab", w, phi_o, phi_o)
    Mon = np.einsum("eq,eqa,eqb->eab", w, phi_o, phi_n)
    Mnn = np.einsum("eq,eqa,eqb->eab", w, phi_n, phi_n)
    return Moo, Mon, Mnn


def assemble_gradient(mesh: Mesh, basis: ReferenceBasis, flux) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """``(G_x, G_y)``: moments of ``grad u - sum_e (u - u_hat) n`` against the basis."""
    flux = FluxVariant.parse(flux)
    K, N = mesh.n_triangles, basis.n
    n = K * N
    _, Gx_loc, Gy_loc = _element_data(mesh, basis)
    Moo, Mon, Mnn = _face_parts(mesh, basis)
    own, nb = mesh.edge_owner, mesh.edge_neighbor
    interior = nb >= 0
    from_owner = _uhat_from_owner(mesh, flux)
    elems = np.arange(K)
    out = []
    for c, Gloc in ((0, Gx_loc), (1, Gy_loc)):
        trip = _Triplets(N)
        trip.add(elems, elems, Gloc)
        nc = mesh.edge_normal[:, c]
        # boundary: u_hat = 0
        bd = ~interior
        trip.add(own[bd], own[bd], -nc[bd, None, None] * Moo[bd])
        # interior, u_hat from owner: the neighbor (normal -n) gets the jump term
        sel = interior & from_owner
        trip.add(nb[sel], nb[sel], nc[sel, None, None] * Mnn[sel])
        trip.add(nb[sel], own[sel], -nc[sel, None, None] * Mon[sel].transpose(0, 2, 1))
        # interior, u_hat from neighbor: the owner gets the jump term
        sel = interior & ~from_owner
        trip.add(own[sel], own[sel], -nc[sel, None, None] * Moo[sel])
        trip.add(own[sel], nb[sel], nc[sel, None, None] * Mon[sel])
        out.append(trip.tocsr((n, n)))
    return out[0], out[1]


def assemble_divergence_and_penalty(mesh: Mesh, basis: ReferenceBasis, flux, theta: float, h: float | None = None):
    """Independently assembled ``D = [D_x, D_y]`` and the boundary penalty ``P``.

    ``D`` realises ``(div q, v) - sum_e <n . (q - q_hat), v>`` with ``q_hat``
    taken opposite to ``u_hat``; it is only used to check ``D = -G^T``.
    """
    flux = FluxVariant.parse(flux)
    if not theta > 0:
        raise ValueError("penalty parameter theta must be positive")
    h = mesh.h if h is None else float(h)
    K, N = mesh.n_triangles, basis.n
    n = K * N
    _, Gx_loc, Gy_loc = _element_data(mesh, basis)
    Moo, Mon, Mnn = _face_parts(mesh, basis)
    own, nb = mesh.edge_owner, mesh.edge_neighbor
    interior = nb >= 0
    from_owner = _uhat_from_owner(mesh, flux)
    elems = np.arange(K)
    D = []
    for c, Gloc in ((0, Gx_loc), (1, Gy_loc)):
        trip = _Triplets(N)
        trip.add(elems, elems, Gloc)
        nc = mesh.edge_normal[:, c]
        # q_hat from the neighbor: the owner sees q - q_hat
        sel = interior & from_owner
        trip.add(own[sel], own[sel], -nc[sel, None, None] * Moo[sel])
        trip.add(own[sel], nb[sel], nc[sel, None, None] * Mon[sel])
        # q_hat from the owner: the neighbor (normal -n) sees q - q_hat
        sel = interior & ~from_owner
        trip.add(nb[sel], nb[sel], nc[sel, None, None] * Mnn[sel])
        trip.add(nb[sel], own[sel], -nc[sel, None, None] * Mon[sel].transpose(0, 2, 1))
        D.append(trip.tocsr((n, n)))
    want = 1 if flux is FluxVariant.PLUS else -1
    pen = (~interior) & (mesh.edge_boundary_sign == want)
    trip = _Triplets(N)
    trip.add(own[pen], own[pen], (theta / h) * Moo[pen])
    P = trip.tocsr((n, n))
    P = 0.5 * (P + P.T)
    return sp.hstack(D, format="csr"), P.tocsr()


@dataclass
class LdgOperators:
    M: BlockDiagonal
    Gx: sp.csr_matrix
    Gy: sp.csr_matrix
    P: sp.csr_matrix
    theta: float
    h: float
    flux: FluxVariant

    @property
    def G(self) -> sp.csr_matrix:
        """Stacked gradient ``[G_x; G_y]`` (vector-field DoFs x-block first)."""
        return sp.vstack([self.Gx, self.Gy], format="csr")

    @property
    def D(self) -> sp.csr_matrix:
        """Divergence used by the solver, ``-G^T``."""
        return -self.G.T.tocsr()

    @property
    def n(self) -> int:
        return self.Gx.shape[1]


def assemble_ldg(mesh: Mesh, basis: ReferenceBasis, flux, theta: float = 5.0, h: float | None = None) -> LdgOperators:
    flux = FluxVariant.parse(flux)
    h = mesh.h if h is None else float(h)
    M = assemble_mass(mesh, basis)
    Gx, Gy = assemble_gradient(mesh, basis, flux)
    _, P = assemble_divergence_and_penalty(mesh, basis, flux, theta, h)
    return LdgOperators(M, Gx, Gy, P, float(theta), h, flux)


class SpatialOperator:
    """``A = sum_c G_c^T M^{-1} S M^{-1} G_c + P``, matrix-free or dense."""

    def __init__(self, G, M: BlockDiagonal, S, P):
        G = sp.csr_matrix(G)
        n = G.shape[1]
        if G.shape[0] != 2 * n:
            raise ValueError("G must be the stacked (2n x n) gradient")
        self.Gx = G[:n]
        self.Gy = G[n:]
        self.M = M
        self.S = S.matrix if hasattr(S, "matrix") else np.asarray(S)
        self.P = sp.csr_matrix(P)
        self.n = n
        self._dense = None

    @property
    def shape(self):
        return (self.n, self.n)

    def nonlocal_part(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        for Gc in (self.Gx, self.Gy):
            p = self.M.solve(Gc @ x)
            q = self.M.solve(self.S @ p)
            out += Gc.T @ q
        return out

    def matvec(self, x) -> np.ndarray:
        if self._dense is not None:
            return self._dense @ x
        return self.nonlocal_part(x) + self.P @ x

    __matmul__ = matvec

    def dense(self) -> np.ndarray:
        if self._dense is None:
            A = self.P.toarray()
            for Gc in (self.Gx, self.Gy):
                Y = self.M.solve(Gc.toarray())
                A += Y.T @ (self.S @ Y)
            self._dense = 0.5 * (A + A.T)
        return self._dense


def assemble_spatial_operator(G, M, S, P, dense: bool = False) -> SpatialOperator:
    op = SpatialOperator(G, M, S, P)
    if dense:
        op.dense()
    return op


def write_triplets(matrix, path) -> None:
    """Text dump: header ``# rows cols nnz`` then ``row col value`` (0-based) per line."""
    m = sp.coo_matrix(matrix)
    order = np.lexsort((m.col, m.row))
    with open(path, "w") as fh:
        fh.write(f"# {m.shape[0]} {m.shape[1]} {m.nnz}\n")
        for r, c, v in zip(m.row[order], m.col[order], m.data[order]):
            fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")


def read_triplets(path) -> sp.csr_matrix:
    with open(path) as fh:
        head = fh.readline().split()
        rows, cols = int(head[1]), int(head[2])
        data = np.loadtxt(fh, ndmin=2) if rows and cols else np.zeros((0, 3))
    if data.size == 0:
        return sp.csr_matrix((rows, cols))
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(rows, cols))
