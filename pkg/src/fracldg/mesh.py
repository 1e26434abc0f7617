"""Triangular meshes of planar domains with the edge data LDG fluxes need.

A :class:`Mesh` stores vertices, counter-clockwise triangles and a flat
edge table.  Every edge has an *owner* (the incident triangle with the
smaller index) and, for interior edges, a *neighbor*.  The stored unit
normal points from owner to neighbor, or outward on the boundary.

Each edge also carries the value of ``beta . n`` used to pick sides in the
alternating fluxes::

    beta . n = 1/2 sign(1 . n),        1 = (1, 1)

with the tie ``1 . n == 0`` broken by ``1_sigma = (1 + sigma, 1 - sigma)``.
"""
from __future__ import annotations

import enum
import hashlib
import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

SIGMA = 0.5
_TIE_TOL = 1e-12


class MeshError(ValueError):
    """Malformed mesh input or non-conforming topology."""


class BoundarySign(enum.IntEnum):
    MINUS = -1
    NONE = 0
    PLUS = 1


@dataclass(frozen=True)
class Edge:
    vertices: tuple[int, int]
    owner: int
    neighbor: int | None
    normal: np.ndarray
    length: float
    beta_dot_n: float
    boundary_sign: BoundarySign

    @property
    def is_boundary(self) -> bool:
        return self.neighbor is None


def beta_dot_normal(normals, sigma: float = SIGMA) -> np.ndarray:
    """Return ``beta . n`` (+-1/2) for an array of unit normals."""
    n = np.atleast_2d(np.asarray(normals, dtype=float))
    dot = n[:, 0] + n[:, 1]
    tie = (1.0 + sigma) * n[:, 0] + (1.0 - sigma) * n[:, 1]
    dot = np.where(np.abs(dot) <= _TIE_TOL, tie, dot)
    return 0.5 * np.sign(dot)


class Mesh:
    """Conforming triangulation with owner/neighbor edge topology.

    Parameters
    ----------
    vertices : (nv, 2) array_like
    triangles : (K, 3) array_like of int
        Zero-based vertex indices.  Clockwise triangles are reoriented.
    """

    def __init__(self, vertices, triangles):
        vertices = np.array(vertices, dtype=float)
        triangles = np.array(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must have shape (n, 2)")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshError("triangles must have shape (m, 3)")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise MeshError("triangle references a vertex index out of range")
        if np.any(triangles[:, 0] == triangles[:, 1]) or np.any(triangles[:, 1] == triangles[:, 2]) \
                or np.any(triangles[:, 0] == triangles[:, 2]):
            raise MeshError("triangle with repeated vertex")

        p = vertices[triangles]
        signed = 0.5 * _cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        if np.any(signed == 0.0):
            raise MeshError("degenerate triangle with zero area")
        flip = signed < 0
        triangles[flip] = triangles[flip][:, [0, 2, 1]]

        self.vertices = vertices
        self.triangles = triangles
        self.vertices.flags.writeable = False
        self.triangles.flags.writeable = False
        self._build_edges()

    # -- construction -----------------------------------------------------
    def _build_edges(self):
        tris = self.triangles
        K = len(tris)
        # local edge i is opposite local vertex i
        local = np.array([[1, 2], [2, 0], [0, 1]])
        pairs = tris[:, local].reshape(-1, 2)
        key = np.sort(pairs, axis=1)
        elem = np.repeat(np.arange(K), 3)
        lidx = np.tile(np.arange(3), K)

        order = np.lexsort((elem, key[:, 1], key[:, 0]))
        key_s = key[order]
        new = np.ones(len(order), dtype=bool)
        new[1:] = np.any(key_s[1:] != key_s[:-1], axis=1)
        group = np.cumsum(new) - 1
        counts = np.bincount(group)
        if np.any(counts > 2):
            bad = key_s[new][np.argmax(counts > 2)]
            raise MeshError(f"edge {tuple(bad)} shared by more than two triangles")

        n_edges = len(counts)
        first = np.flatnonzero(new)
        owner = elem[order][first]
        owner_local = lidx[order][first]
        neighbor = np.full(n_edges, -1, dtype=np.int64)
        neighbor_local = np.full(n_edges, -1, dtype=np.int64)
        two = counts == 2
        neighbor[two] = elem[order][first[two] + 1]
        neighbor_local[two] = lidx[order][first[two] + 1]

        # endpoints in the owner's counter-clockwise order
        ev = pairs[order][first]
        a = self.vertices[ev[:, 0]]
        b = self.vertices[ev[:, 1]]
        t = b - a
        length = np.hypot(t[:, 0], t[:, 1])
        normal = np.column_stack([t[:, 1], -t[:, 0]]) / length[:, None]

        # conformity: the neighbor must traverse the edge in the opposite sense
        if np.any(two):
            nb = pairs[(neighbor[two] * 3 + neighbor_local[two])]
            if np.any(nb[:, 0] != ev[two, 1]) or np.any(nb[:, 1] != ev[two, 0]):
                raise MeshError("inconsistent orientation across an interior edge")

        bnd = np.flatnonzero(neighbor < 0)
        if len(bnd):
            _check_no_hanging(self.vertices, ev[bnd], t[bnd], length[bnd])

        beta = beta_dot_normal(normal)
        bsign = np.where(neighbor < 0, np.sign(beta).astype(np.int64), 0)

        self.edge_vertices = ev
        self.edge_owner = owner
        self.edge_owner_local = owner_local
        self.edge_neighbor = neighbor
        self.edge_neighbor_local = neighbor_local
        self.edge_normal = normal
        self.edge_length = length
        self.edge_beta = beta
        self.edge_boundary_sign = bsign

        tri_edges = np.empty((K, 3), dtype=np.int64)
        tri_edges[owner, owner_local] = np.arange(n_edges)
        tri_edges[neighbor[two], neighbor_local[two]] = np.flatnonzero(two)
        self.triangle_edges = tri_edges

        for arr in (self.edge_vertices, self.edge_owner, self.edge_neighbor, self.edge_normal,
                    self.edge_length, self.edge_beta, self.edge_boundary_sign, self.triangle_edges):
            arr.flags.writeable = False

    # -- geometry ---------------------------------------------------------
    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edge_length)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * _cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @cached_property
    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d = np.stack([np.linalg.norm(p[:, i] - p[:, (i + 1) % 3], axis=1) for i in range(3)], axis=1)
        return d.max(axis=1)

    @property
    def h(self) -> float:
        """Global mesh size, the largest element diameter."""
        return float(self.diameters.max())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_neighbor < 0)

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_neighbor >= 0)

    @cached_property
    def edges(self) -> list[Edge]:
        out = []
        for e in range(self.n_edges):
            nb = int(self.edge_neighbor[e])
            out.append(Edge(
                vertices=(int(self.edge_vertices[e, 0]), int(self.edge_vertices[e, 1])),
                owner=int(self.edge_owner[e]),
                neighbor=None if nb < 0 else nb,
                normal=self.edge_normal[e],
                length=float(self.edge_length[e]),
                beta_dot_n=float(self.edge_beta[e]),
                boundary_sign=BoundarySign(int(self.edge_boundary_sign[e])),
            ))
        return out

    def affine_maps(self):
        """Return ``(B, b)`` with ``x = B[j] @ xi + b[j]`` on triangle ``j``."""
        p = self.vertices[self.triangles]
        B = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        return B, p[:, 0]

    def locate(self, point, tol: float = 1e-12) -> int:
        """Index of the first triangle containing ``point`` (-1 if none)."""
        B, b = self.affine_maps()
        xi = np.linalg.solve(B, (np.asarray(point, float) - b)[..., None])[..., 0]
        lam = np.column_stack([1 - xi.sum(axis=1), xi])
        hit = np.flatnonzero(np.all(lam >= -tol, axis=1))
        return int(hit[0]) if len(hit) else -1

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.vertices).tobytes())
        h.update(np.ascontiguousarray(self.triangles).tobytes())
        return h.hexdigest()

    def __repr__(self):
        return f"Mesh(K={self.n_triangles}, nv={len(self.vertices)}, h={self.h:.4g})"


def _check_no_hanging(vertices, ev, t, length, chunk=512):
    # a vertex strictly inside a single-sided edge is a T-junction
    tol = 1e-10
    for lo in range(0, len(ev), chunk):
        sl = slice(lo, lo + chunk)
        a = vertices[ev[sl, 0]]
        d = vertices[None, :, :] - a[:, None, :]
        tt = t[sl][:, None, :]
        along = (d * tt).sum(axis=2) / length[sl, None] ** 2
        off = np.abs(d[..., 0] * tt[..., 1] - d[..., 1] * tt[..., 0]) / length[sl, None]
        inside = (along > tol) & (along < 1 - tol) & (off < tol * length[sl, None])
        if np.any(inside):
            e, v = np.argwhere(inside)[0]
            raise MeshError(f"hanging vertex {v} on edge {tuple(ev[lo + e])}")


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[...,0]


def build_edges(vertices, triangles) -> Mesh:
    """Build a :class:`Mesh` (and thus its edge table) from raw arrays."""
    return Mesh(vertices, triangles)


# -- disk generator -------------------------------------------------------

def square_to_disk(points) -> np.ndarray:
    """Radial map of [-1, 1]^2 onto the unit disk.

    ``(x, y) -> (x, y) max(|x|, |y|) / sqrt(x^2 + y^2)``; the origin is fixed
    and the square boundary lands on the unit circle.
    """
    p = np.asarray(points, dtype=float)
    r = np.hypot(p[:, 0], p[:, 1])
    m = np.abs(p).max(axis=1)
    scale = np.divide(m, r, out=np.ones_like(r), where=r > 0)
    q = p * scale[:, None]
    on_square = m == 1.0
    q[on_square] /= np.hypot(q[on_square, 0], q[on_square, 1])[:, None]
    return q


def disk_mesh(divisions: int) -> Mesh:
    """Unit-disk mesh from a ``divisions x divisions`` split of the square.

    Cell diagonals point toward the origin in every quadrant so that the
    corner cells do not collapse onto the circle.
    """
    n = int(divisions)
    if n < 2 or n % 2:
        raise ValueError("divisions must be an even integer >= 2")
    t = np.linspace(-1.0, 1.0, n + 1)
    t[n // 2] = 0.0
    X, Y = np.meshgrid(t, t, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    a = i * (n + 1) + j
    b = (i + 1) * (n + 1) + j
    c = (i + 1) * (n + 1) + j + 1
    d = i * (n + 1) + j + 1
    slash = (2 * i + 1 - n) * (2 * j + 1 - n) > 0
    t1 = np.where(slash[:, None], np.column_stack([a, b, c]), np.column_stack([a, b, d]))
    t2 = np.where(slash[:, None], np.column_stack([a, c, d]), np.column_stack([b, c, d]))
    tris = np.empty((2 * len(a), 3), dtype=np.int64)
    tris[0::2] = t1
    tris[1::2] = t2
    return Mesh(square_to_disk(pts), tris)


def generate_disk_mesh(refinement_level: int, base_divisions: int = 4) -> Mesh:
    """Unit-disk mesh at a given uniform refinement level.

    Level ``L`` splits the square into ``base_divisions * 2**L`` cells per
    side.  With the default base, levels 0, 1, 2 give ``h`` close to 0.6,
    0.33 and 0.17.
    """
    if refinement_level < 0:
        raise ValueError("refinement level must be nonnegative")
    return disk_mesh(base_divisions * 2 ** int(refinement_level))


# -- text format ----------------------------------------------------------

def load_mesh(document) -> Mesh:
    """Parse the ``$Nodes`` / ``$Triangles`` text format.

    ``document`` may be a string holding the file contents, a path-like or an
    open text file.  Ids are 1-based; ``#`` starts a comment.
    """
    if hasattr(document, "read"):
        text = document.read()
    elif isinstance(document, str) and ("$Nodes" in document or "\n" in document):
        text = document
    else:
        with open(document, encoding="utf-8") as fh:
            text = fh.read()

    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))

    def expect_count(pos, what):
        if pos >= len(lines):
            raise MeshError(f"unexpected end of file: missing {what} count")
        lineno, line = lines[pos]
        try:
            n = int(line)
        except ValueError:
            raise MeshError(f"line {lineno}: expected {what} count, got {line!r}") from None
        if n < 0:
            raise MeshError(f"line {lineno}: negative {what} count")
        return n

    pos = 0
    if not lines or lines[0][1] != "$Nodes":
        raise MeshError(f"line {lines[0][0] if lines else 1}: expected '$Nodes'")
    nn = expect_count(1, "node")
    pos = 2
    ids, coords = [], []
    for _ in range(nn):
        if pos >= len(lines):
            raise MeshError("unexpected end of file inside $Nodes")
        lineno, line = lines[pos]
        parts = line.split()
        if len(parts) != 3:
            raise MeshError(f"line {lineno}: node line needs 'id x y'")
        try:
            ids.append(int(parts[0]))
            coords.append((float(parts[1]), float(parts[2])))
        except ValueError:
            raise MeshError(f"line {lineno}: cannot parse node {line!r}") from None
        pos += 1
    if sorted(ids) != list(range(1, nn + 1)):
        raise MeshError("node ids must be 1..n")

    if pos >= len(lines) or lines[pos][1] != "$Triangles":
        lineno = lines[pos][0] if pos < len(lines) else len(text.splitlines()) + 1
        raise MeshError(f"line {lineno}: expected '$Triangles'")
    nt = expect_count(pos + 1, "triangle")
    pos += 2
    tri_ids, tris = [], []
    for _ in range(nt):
        if pos >= len(lines):
            raise MeshError("unexpected end of file inside $Triangles")
        lineno, line = lines[pos]
        parts = line.split()
        if len(parts) != 4:
            raise MeshError(f"line {lineno}: triangle line needs 'id v1 v2 v3'")
        try:
            tid, *vs = (int(v) for v in parts)
        except ValueError:
            raise MeshError(f"line {lineno}: cannot parse triangle {line!r}") from None
        if any(v < 1 or v > nn for v in vs):
            raise MeshError(f"line {lineno}: vertex index out of range 1..{nn}")
        tri_ids.append(tid)
        tris.append(vs)
        pos += 1
    if pos != len(lines):
        raise MeshError(f"line {lines[pos][0]}: trailing content")

    order = np.argsort(ids)
    vertices = np.array(coords, dtype=float).reshape(-1, 2)[order]
    triangles = np.array(tris, dtype=np.int64).reshape(-1, 3)[np.argsort(tri_ids, kind="stable")] - 1
    return Mesh(vertices, triangles)


def dump_mesh(mesh: Mesh) -> str:
    """Serialize ``mesh`` in the text format read by :func:`load_mesh`."""
    out = io.StringIO()
    out.write("$Nodes\n")
    out.write(f"{len(mesh.vertices)}\n")
    for i, (x, y) in enumerate(mesh.vertices, start=1):
        out.write(f"{i} {float(x)!r} {float(y)!r}\n")
    out.write("$Triangles\n")
    out.write(f"{mesh.n_triangles}\n")
    for i, (a, b, c) in enumerate(mesh.triangles, start=1):
        out.write(f"{i} {a + 1} {b + 1} {c + 1}\n")
    return out.getvalue()


def write_mesh(mesh: Mesh, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_mesh(mesh))
