"""Fractional-order constants and the Gram matrix of the Riesz potential.

For ``s in (0, 1)`` the operator ``(-Delta)^(s-1)`` is the Riesz potential

    (I p)(x) = c_{2,s-1} int |x - y|^(-2s) p(y) dy,

and its Gram matrix on the broken polynomial space is

    S[a, b] = c_{2,s-1} int int phi_a(x) phi_b(y) |x - y|^(-2s) dy dx.

Pairs of triangles are integrated with the rules of :mod:`.quadrature`:
singular rules for identical, edge-adjacent and vertex-adjacent pairs, a
raised tensor order for nearby disjoint pairs and a plain tensor rule
between all remaining pairs.
"""
from __future__ import annotations

import hashlib
import logging
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .basis import ReferenceBasis
from .blockdiag import BlockDiagonal
from .mesh import Mesh
from .quadrature import PairCase, simplex_rule, singular_pair_rule
from .special import gamma_fn

log = logging.getLogger(__name__)

CACHE_MAGIC = b"RGRM"
CACHE_VERSION = 1
_CHUNK_ELEMS = 1 << 22


class RieszError(ValueError):
    pass


@dataclass(frozen=True)
class FracCoefficient:
    d: int
    order: float
    value: float


def frac_coefficient(d: int, order: float) -> FracCoefficient:
    """Normalising constant ``c_{d,order}`` of the fractional Laplacian / Riesz potential."""
    if d not in (1, 2):
        raise RieszError(f"dimension {d} not supported")
    sig = float(order)
    if not (-1.0 < sig < 0.0 or 0.0 < sig < 1.0):
        raise RieszError(f"order {order} outside (-1, 0) U (0, 1)")
    half_d = 0.5 * d
    val = 4.0 ** sig * sig * gamma_fn(sig + half_d) / (math.pi ** half_d * gamma_fn(1.0 - sig))
    if sig < 0:
        val = -val
    return FracCoefficient(d, sig, val)


def riesz_potential_disk(alpha: float, s: float) -> float:
    """Potential of ``|y|^alpha`` on the unit disk at the origin.

    ``c_{2,s-1} int_0^1 int_0^{2 pi} r^alpha r^(-2s) r dtheta dr``.
    """
    if alpha < 0 or not 0 < s < 1:
        raise RieszError("need alpha >= 0 and 0 < s < 1")
    return frac_coefficient(2, s - 1.0).value * 2.0 * math.pi / (alpha + 2.0 - 2.0 * s)


@dataclass(frozen=True)
class QuadratureOrders:
    """Per-direction Gauss orders for the pair rules."""
    singular: int
    near: int
    far: int

    @classmethod
    def default(cls, k: int, m: int | None = None) -> "QuadratureOrders":
        if m is None:
            m = 6 if k <= 1 else 8
        return cls(singular=m, near=m + 2, far=m)

    def key(self) -> str:
        return f"{self.singular}-{self.near}-{self.far}"


@dataclass(frozen=True)
class RieszGram:
    s: float
    k: int
    matrix: np.ndarray = field(repr=False)
    orders: QuadratureOrders

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, x):
        return self.matrix @ x


# -- pair classification -----------------------------------------------------

_PERMS = [(0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 2, 1), (1, 0, 2), (2, 1, 0)]
_PERM_ID = {p: i for i, p in enumerate(_PERMS)}


def _perm_points(points, perm):
    # reference coordinates of a point given in the frame of the permuted triangle
    lam_p = np.column_stack([1.0 - points.sum(axis=1), points])
    lam = np.empty_like(lam_p)
    lam[:, list(perm)] = lam_p
    return lam[:, 1:]


def classify_pairs(mesh: Mesh):
    """Touching pairs ``i < j`` with their case and vertex permutations.

    Returns arrays ``(i, j, case, perm_i, perm_j)``; the permutations put
    the shared vertices first (in matching order) as the singular rules
    expect.
    """
    K = mesh.n_triangles
    tri = mesh.triangles
    nv = len(mesh.vertices)
    V = sp.csr_matrix((np.ones(3 * K), (np.repeat(np.arange(K), 3), tri.ravel())), shape=(K, nv))
    C = sp.triu(V @ V.T, k=1).tocoo()
    i, j, cnt = C.row.astype(np.int64), C.col.astype(np.int64), C.data.astype(np.int64)
    order = np.lexsort((j, i))
    i, j, cnt = i[order], j[order], cnt[order]
    eq = tri[i][:, :, None] == tri[j][:, None, :]
    perm_i = np.zeros(len(i), dtype=np.int64)
    perm_j = np.zeros(len(i), dtype=np.int64)
    for n in range(len(i)):
        ai, bj = np.nonzero(eq[n])
        if cnt[n] == 1:
            a, b = int(ai[0]), int(bj[0])
            pi = (a, (a + 1) % 3, (a + 2) % 3)
            pj = (b, (b + 1) % 3, (b + 2) % 3)
        elif cnt[n] == 2:
            a0, a1 = int(ai[0]), int(ai[1])
            b0, b1 = int(bj[0]), int(bj[1])
            pi = (a0, a1, 3 - a0 - a1)
            pj = (b0, b1, 3 - b0 - b1)
        else:
            raise RieszError(f"triangles {i[n]} and {j[n]} share {cnt[n]} vertices")
        perm_i[n] = _PERM_ID[pi]
        perm_j[n] = _PERM_ID[pj]
    case = np.where(cnt == 2, PairCase.SHARED_EDGE.value, PairCase.SHARED_VERTEX.value)
    return i, j, case, perm_i, perm_j


def near_disjoint_pairs(mesh: Mesh, touching_i, touching_j):
    """Pairs ``i < j`` sharing no vertex with centroid distance below the larger diameter."""
    from scipy.spatial import cKDTree

    c = mesh.centroids
    diam = mesh.diameters
    tree = cKDTree(c)
    cand = tree.query_pairs(float(diam.max()), output_type="ndarray")
    if len(cand) == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    a, b = np.minimum(cand[:, 0], cand[:, 1]), np.maximum(cand[:, 0], cand[:, 1])
    dist = np.linalg.norm(c[a] - c[b], axis=1)
    keep = dist < np.maximum(diam[a], diam[b])
    a, b = a[keep], b[keep]
    K = mesh.n_triangles
    touching = set((touching_i * K + touching_j).tolist())
    code = a * K + b
    keep = np.array([cd not in touching for cd in code.tolist()], dtype=bool)
    a, b = a[keep], b[keep]
    order = np.lexsort((b, a))
    return a[order], b[order]


# -- assembly -----------------------------------------------------------------

def _kernel(d2, s):
    if s == 0.5:
        return 1.0 / np.sqrt(d2)
    return d2 ** (-s)


def _pair_blocks(mesh, basis, s, rule, pi, pj, idx_i, idx_j):
    """Blocks ``int int phi_a(x) phi_b(y) |x-y|^(-2s)`` for pairs sharing one rule."""
    N = basis.n
    xi = _perm_points(rule.x, _PERMS[pi])
    yj = _perm_points(rule.y, _PERMS[pj])
    C = (basis.values(xi)[:, :, None] * basis.values(yj)[:, None, :]).reshape(len(rule), N * N)
    C *= rule.weights[:, None]
    B, b0 = mesh.affine_maps()
    det = np.abs(B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0])
    out = np.empty((len(idx_i), N, N))
    step = max(1, _CHUNK_ELEMS // len(rule))
    for lo in range(0, len(idx_i), step):
        ii, jj = idx_i[lo:lo + step], idx_j[lo:lo + step]
        off = b0[ii] - b0[jj]
        d2 = np.zeros((len(ii), len(rule)))
        for c in range(2):
            diff = (off[:, c, None] + B[ii, c, 0, None] * xi[None, :, 0] + B[ii, c, 1, None] * xi[None, :, 1]
                    - B[jj, c, 0, None] * yj[None, :, 0] - B[jj, c, 1, None] * yj[None, :, 1])
            d2 += diff * diff
        Kmat = _kernel(d2, s) * (det[ii] * det[jj])[:, None]
        out[lo:lo + step] = (Kmat @ C).reshape(-1, N, N)
    return out


def _far_rows(X, W, Phi, s, i0, i1, N):
    """Upper block rows ``i0..i1`` of the plain tensor-rule Gram matrix (columns ``>= i0``)."""
    K, nt = W.shape
    Xi = X[i0:i1].reshape(-1, 2)
    Xj = X[i0:].reshape(-1, 2)
    d2 = (Xi[:, None, 0] - Xj[None, :, 0]) ** 2 + (Xi[:, None, 1] - Xj[None, :, 1]) ** 2
    with np.errstate(divide="ignore"):
        Kmat = _kernel(d2, s)
    Kmat[~np.isfinite(Kmat)] = 0.0
    PW = Phi[None, :, :] * W[:, :, None]  # (K, nt, N)
    ni, nj = i1 - i0, K - i0
    T = np.matmul(PW[i0:i1].transpose(0, 2, 1), Kmat.reshape(ni, nt, nj * nt))  # (ni, N, nj*nt)
    T = T.reshape(ni * N, nj, nt).transpose(1, 0, 2)  # (nj, ni*N, nt)
    R = np.matmul(T, PW[i0:])  # (nj, ni*N, N)
    return R.reshape(nj, ni, N, N).transpose(1, 2, 0, 3).reshape(ni * N, nj * N)


def _cache_key(mesh, basis, s, orders):
    h = hashlib.sha256()
    h.update(mesh.fingerprint().encode())
    h.update(f"|k={basis.k}|s={float(s).hex()}|m={orders.key()}|v={CACHE_VERSION}".encode())
    return h.hexdigest()[:32]


def write_gram_cache(path, S: np.ndarray) -> None:
    """Little-endian layout: ``RGRM``, u32 version, u64 dimension, f64 row-major entries."""
    S = np.ascontiguousarray(S, dtype="<f8")
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<IQ", CACHE_VERSION, S.shape[0]))
        fh.write(S.tobytes())
    os.replace(tmp, path)


def read_gram_cache(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != CACHE_MAGIC:
            raise RieszError(f"{path}: not a Gram cache file")
        version, dim = struct.unpack("<IQ", head[4:])
        if version != CACHE_VERSION:
            raise RieszError(f"{path}: unsupported cache version {version}")
        raw = fh.read()
    if len(raw) != 8 * dim * dim:
        raise RieszError(f"{path}: truncated cache ({len(raw)} of {8 * dim * dim} bytes)")
    return np.frombuffer(raw, dtype="<f8").reshape(dim, dim).astype(float)


def assemble_riesz_gram(mesh: Mesh, basis: ReferenceBasis, s: float,
                        orders: QuadratureOrders | None = None, threads: int = 1,
                        cache_dir=None) -> RieszGram:
    """Dense Gram matrix of ``(-Delta)^(s-1)`` on the discontinuous space.

    ``threads`` only changes the schedule: every block is computed by the
    same sequence of operations, so the result is bit-identical for any
    thread count.
    """
    if not 0.0 < s < 1.0:
        raise RieszError(f"s = {s} outside (0, 1)")
    orders = orders or QuadratureOrders.default(basis.k)
    cache_file = None
    if cache_dir is not None:
        cache_file = Path(cache_dir) / f"gram-{_cache_key(mesh, basis, s, orders)}.rgrm"
        if cache_file.exists():
            try:
                S = read_gram_cache(cache_file)
            except RieszError as exc:
                log.warning("ignoring cache: %s", exc)
                S = None
            if S is not None and S.shape[0] == mesh.n_triangles * basis.n:
                log.debug("loaded Gram matrix from %s", cache_file)
                return RieszGram(float(s), basis.k, S, orders)
    K, N = mesh.n_triangles, basis.n
    n = K * N

    # plain tensor rule between all pairs, upper block triangle
    tp, tw = simplex_rule(2, orders.far)
    B, b0 = mesh.affine_maps()
    det = np.abs(B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0])
    X = np.einsum("kcd,qd->kqc", B, tp) + b0[:, None, :]
    W = det[:, None] * tw[None, :]
    Phi = basis.values(tp)
    nt = len(tw)
    rows = max(1, min(K, _CHUNK_ELEMS // max(1, nt * nt * K)))
    spans = [(lo, min(K, lo + rows)) for lo in range(0, K, rows)]
    S = np.zeros((n, n))

    def far_task(span):
        i0, i1 = span
        S[i0 * N:i1 * N, i0 * N:] = _far_rows(X, W, Phi, s, i0, i1, N)

    def run(tasks, fn):
        if threads > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                list(ex.map(fn, tasks))
        else:
            for t in tasks:
                fn(t)

    run(spans, far_task)

    # replace near and singular blocks
    ti, tj, tcase, tpi, tpj = classify_pairs(mesh)
    ni, nj = near_disjoint_pairs(mesh, ti, tj)
    groups = []
    diag = np.arange(K)
    groups.append((PairCase.IDENTICAL, orders.singular, 0, 0, diag, diag))
    for c in (PairCase.SHARED_EDGE, PairCase.SHARED_VERTEX):
        sel = tcase == c.value
        keys = np.unique(np.stack([tpi[sel], tpj[sel]], axis=1), axis=0) if sel.any() else []
        for pi, pj in keys:
            g = sel & (tpi == pi) & (tpj == pj)
            groups.append((c, orders.singular, int(pi), int(pj), ti[g], tj[g]))
    if len(ni):
        groups.append((PairCase.DISJOINT, orders.near, 0, 0, ni, nj))

    def pair_task(group):
        case, m, pi, pj, gi, gj = group
        rule = singular_pair_rule(case, m, s)
        blocks = _pair_blocks(mesh, basis, s, rule, pi, pj, gi, gj)
        if case is PairCase.IDENTICAL:
            blocks = 0.5 * (blocks + blocks.transpose(0, 2, 1))
        for bl, a, b in zip(blocks, gi.tolist(), gj.tolist()):
            S[a * N:(a + 1) * N, b * N:(b + 1) * N] = bl

    run(groups, pair_task)

    # mirror the strict upper block triangle
    blk = np.arange(n) // N
    lower = blk[:, None] > blk[None, :]
    S[lower] = S.T[lower]
    S *= frac_coefficient(2, s - 1.0).value
    if cache_file is not None:
        cache_file.parent.mkdir(parents=True, exist_ok=True)
        write_gram_cache(cache_file, S)
    return RieszGram(float(s), basis.k, S, orders)


def apply_negative_laplacian(S, M, p) -> np.ndarray:
    """Discrete ``(-Delta)^(s-1)`` of a vector field: ``q_c = M^{-1} S p_c``.

    ``p`` has shape ``(2, n)`` (x and y components); ``M`` is a
    :class:`BlockDiagonal` mass matrix.
    """
    Smat = S.matrix if isinstance(S, RieszGram) else np.asarray(S)
    if not isinstance(M, BlockDiagonal):
        raise RieszError("mass matrix must be a BlockDiagonal")
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != 2:
        raise RieszError("vector field must have shape (2, n)")
    return M.solve((Smat @ p.T)).T
