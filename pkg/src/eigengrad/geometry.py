"""Triangle meshes for the model manifolds, graph distances and geodesic balls.

All meshes carry the metric induced by their embedding in R^3.  The flat
torus is stored with a periodic identification: every triangle corner has an
integer lattice shift so that ``positions[tri] + shift * period`` gives
unwrapped corner coordinates.  The mesh is then combinatorially closed.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

logger = logging.getLogger(__name__)

MAX_ICOSPHERE_SUBDIVISIONS = 8


class MeshError(ValueError):
    """Raised for invalid mesh input or a violated mesh invariant."""


class BallTooSmallError(MeshError):
    """The requested ball contains no interior vertex at this resolution."""


class TriangleMesh:
    """Indexed triangle surface, optionally with boundary or periodic gluing.

    Parameters
    ----------
    positions : array_like, shape (V, 3)
        Vertex coordinates.
    triangles : array_like, shape (F, 3)
        Counterclockwise vertex-index triples.
    period : array_like, shape (3,), optional
        Translation lattice of a periodic identification (flat torus).
    corner_shifts : array_like, shape (F, 3, 3), optional
        Integer multiples of ``period`` added to each triangle corner.
    name : str, optional
        Human-readable identifier; the content hash is appended in
        :attr:`mesh_id`.
    """

    def __init__(self, positions, triangles, period=None, corner_shifts=None, name="mesh"):
        self.positions = np.ascontiguousarray(positions, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise MeshError("positions must have shape (V, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must have shape (F, 3)")
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= len(self.positions)):
            raise MeshError("triangle index out of range")
        if (period is None) != (corner_shifts is None):
            raise MeshError("period and corner_shifts must be given together")
        self.period = None if period is None else np.asarray(period, dtype=np.float64)
        self.corner_shifts = None if corner_shifts is None else np.asarray(corner_shifts, dtype=np.int64)
        if self.corner_shifts is not None and self.corner_shifts.shape != (len(self.triangles), 3, 3):
            raise MeshError("corner_shifts must have shape (F, 3, 3)")
        self.name = name

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def identification(self) -> dict | None:
        if self.period is None:
            return None
        return {"period": self.period.tolist(), "corner_shifts": self.corner_shifts.tolist()}

    @cached_property
    def mesh_id(self) -> str:
        h = hashlib.sha1()
        h.update(self.positions.tobytes())
        h.update(self.triangles.tobytes())
        if self.corner_shifts is not None:
            h.update(self.corner_shifts.tobytes())
        return f"{self.name}:{h.hexdigest()[:12]}"

    def corners(self) -> np.ndarray:
        """Unwrapped corner coordinates, shape (F, 3, 3)."""
        c = self.positions[self.triangles]
        if self.corner_shifts is not None:
            c = c + self.corner_shifts * self.period
        return c

    @cached_property
    def _edge_data(self):
        tri = self.triangles
        F = len(tri)
        a = tri.reshape(-1)
        b = tri[:, [1, 2, 0]].reshape(-1)
        if self.corner_shifts is not None:
            sa = self.corner_shifts.reshape(-1, 3)
            sb = self.corner_shifts[:, [1, 2, 0]].reshape(-1, 3)
        else:
            sa = sb = np.zeros((3 * F, 3), dtype=np.int64)
        flip = a > b
        lo = np.where(flip, b, a)
        hi = np.where(flip, a, b)
        ds = np.where(flip[:, None], sa - sb, sb - sa)
        keys = np.column_stack([lo, hi, ds])
        uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        c = self.corners()
        d = c[:, [1, 2, 0]] - c
        d = d.reshape(-1, 3)
        lengths = np.empty(len(uniq))
        lengths[inverse] = np.linalg.norm(d, axis=1)
        vectors = np.empty((len(uniq), 3))
        vectors[inverse] = np.where(flip[:, None], -d, d)
        # directed check: each interior edge appears once per direction
        dkeys = np.column_stack([a, b, sb - sa])
        _, dcounts = np.unique(dkeys, axis=0, return_counts=True)
        return uniq[:, :2].copy(), inverse.reshape(F, 3), counts, lengths, int(dcounts.max(initial=0)), vectors

    @property
    def edges(self) -> np.ndarray:
        """Unique edges as vertex pairs ``(lo, hi)``, shape (E, 2)."""
        return self._edge_data[0]

    @property
    def triangle_edges(self) -> np.ndarray:
        """Edge id of side ``k`` (from corner k to corner k+1) per triangle."""
        return self._edge_data[1]

    @property
    def edge_lengths(self) -> np.ndarray:
        return self._edge_data[3]

    @property
    def edge_vectors(self) -> np.ndarray:
        """Unwrapped vector from ``edges[:, 0]`` to ``edges[:, 1]``."""
        return self._edge_data[5]

    def edge_point(self, edge_id, t) -> np.ndarray:
        """Coordinates of the point at parameter ``t`` along an edge."""
        edge_id = np.asarray(edge_id)
        p = self.positions[self.edges[edge_id, 0]] + np.asarray(t)[..., None] * self.edge_vectors[edge_id]
        if self.period is not None:
            per = np.where(self.period > 0, self.period, np.inf)
            p = np.where(self.period > 0, np.mod(p, per), p)
        return p

    @property
    def edge_triangle_counts(self) -> np.ndarray:
        return self._edge_data[2]

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        e = self.edges[self.edge_triangle_counts == 1]
        return np.unique(e)

    @property
    def is_closed(self) -> bool:
        return len(self.boundary_vertices) == 0

    def areas(self) -> np.ndarray:
        c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    def total_area(self) -> float:
        return float(self.areas().sum())

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_triangles

    def max_edge_length(self) -> float:
        return float(self.edge_lengths.max())

    @cached_property
    def vertex_triangles(self) -> sparse.csr_matrix:
        """Vertex-by-triangle incidence (rows: vertices)."""
        F = self.n_triangles
        rows = self.triangles.reshape(-1)
        cols = np.repeat(np.arange(F), 3)
        return sparse.csr_matrix((np.ones(3 * F), (rows, cols)), shape=(self.n_vertices, F))

    def incident_triangles(self, vertex: int) -> np.ndarray:
        m = self.vertex_triangles
        return m.indices[m.indptr[vertex]:m.indptr[vertex + 1]]

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric edge graph weighted by the shortest parallel edge length."""
        return _min_weight_graph(self.edges[:, 0], self.edges[:, 1], self.edge_lengths, self.n_vertices)

    @cached_property
    def diameter_estimate(self) -> float:
        """Double-sweep lower bound on the graph diameter."""
        return mesh_diameter_estimate(self)

    def validate(self) -> None:
        """Check the mesh invariants, raising :class:`MeshError` on failure."""
        areas = self.areas()
        if self.n_triangles == 0:
            raise MeshError("mesh has no triangles")
        bad = np.flatnonzero(areas <= 0.0)
        if bad.size:
            raise MeshError(f"triangle {bad[0]} has nonpositive area")
        counts = self.edge_triangle_counts
        if counts.max() > 2:
            raise MeshError("non-manifold edge (shared by more than two triangles)")
        if self._edge_data[4] > 1:
            raise MeshError("inconsistent orientation: a directed edge appears twice")


def _min_weight_graph(i, j, w, n):
    """Symmetric sparse graph keeping the minimum weight among duplicates."""
    i = np.asarray(i)
    j = np.asarray(j)
    w = np.asarray(w, dtype=np.float64)
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    vals = np.concatenate([w, w])
    order = np.lexsort((vals, cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    keep = np.ones(len(rows), dtype=bool)
    keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    return sparse.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n))


# ---------------------------------------------------------------- generators


def make_icosphere(subdivisions: int) -> TriangleMesh:
    """Unit sphere from a recursively subdivided icosahedron.

    Each subdivision splits every triangle into four through edge midpoints,
    which are projected back onto the sphere.  The result has
    ``10 * 4**s + 2`` vertices and ``20 * 4**s`` triangles.
    """
    if subdivisions < 0 or subdivisions > MAX_ICOSPHERE_SUBDIVISIONS:
        raise MeshError(f"subdivisions must be in [0, {MAX_ICOSPHERE_SUBDIVISIONS}]")
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    pos = np.array(verts, dtype=np.float64)
    pos /= np.linalg.norm(pos, axis=1)[:, None]
    tri = np.array(faces, dtype=np.int64)
    for _ in range(subdivisions):
        pos, tri = _subdivide(pos, tri)
        pos /= np.linalg.norm(pos, axis=1)[:, None]
    c = pos[tri]
    normal = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    inward = np.einsum("ij,ij->i", normal, c.mean(axis=1)) < 0
    tri[inward] = tri[inward][:, ::-1]
    return TriangleMesh(pos, tri, name=f"icosphere(s={subdivisions})")


def _subdivide(pos, tri):
    V = len(pos)
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    e.sort(axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    mids = 0.5 * (pos[uniq[:, 0]] + pos[uniq[:, 1]])
    F = len(tri)
    m01, m12, m20 = inv[:F] + V, inv[F:2 * F] + V, inv[2 * F:] + V
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    new = np.stack([
        np.column_stack([a, m01, m20]),
        np.column_stack([b, m12, m01]),
        np.column_stack([c, m20, m12]),
        np.column_stack([m01, m12, m20]),
    ], axis=1).reshape(-1, 3)
    return np.vstack([pos, mids]), new


def make_flat_torus(divisions_per_side: int, side_length: float = 2 * np.pi) -> TriangleMesh:
    """Uniform periodic grid on the square torus ``[0, L)^2``.

    Every grid cell is cut along its (1, 1) diagonal, giving ``n**2`` vertices
    and ``2 n**2`` triangles, all of valence 6.
    """
    n = int(divisions_per_side)
    if n < 2:
        raise MeshError("divisions_per_side must be at least 2")
    if side_length <= 0:
        raise MeshError("side_length must be positive")
    h = side_length / n
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    pos = np.column_stack([i * h, j * h, np.zeros(n * n)])

    def vid(a, b):
        return (a % n) * n + (b % n)

    v00, v10, v11, v01 = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    tri = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    wi = (i + 1 == n).astype(np.int64)
    wj = (j + 1 == n).astype(np.int64)
    zero = np.zeros_like(wi)
    s00 = np.column_stack([zero, zero, zero])
    s10 = np.column_stack([wi, zero, zero])
    s11 = np.column_stack([wi, wj, zero])
    s01 = np.column_stack([zero, wj, zero])
    shifts = np.concatenate([np.stack([s00, s10, s11], axis=1), np.stack([s00, s11, s01], axis=1)])
    return TriangleMesh(pos, tri, period=[side_length, side_length, 0.0], corner_shifts=shifts,
                        name=f"flat_torus(n={n},side={side_length:.17g})")


def make_embedded_torus(major_radius: float, minor_radius: float, n_u: int, n_v: int) -> TriangleMesh:
    """Torus of revolution in R^3 sampled on an ``n_u x n_v`` parameter grid."""
    R, r = float(major_radius), float(minor_radius)
    if not (0 < r < R):
        raise MeshError("need 0 < minor_radius < major_radius")
    if n_u < 3 or n_v < 3:
        raise MeshError("n_u and n_v must be at least 3")
    i, j = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="ij")
    i, j = i.ravel(), j.ravel()
    u = 2 * np.pi * i / n_u
    v = 2 * np.pi * j / n_v
    pos = np.column_stack([(R + r * np.cos(v)) * np.cos(u), (R + r * np.cos(v)) * np.sin(u), r * np.sin(v)])

    def vid(a, b):
        return (a % n_u) * n_v + (b % n_v)

    v00, v10, v11, v01 = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    tri = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    return TriangleMesh(pos, tri, name=f"embedded_torus(R={R:.17g},r={r:.17g},nu={n_u},nv={n_v})")


def make_disk(refinement: int) -> TriangleMesh:
    """Unit disk from concentric rings.

    Ring ``k`` (``1 <= k <= refinement``) has ``6 k`` vertices at radius
    ``k / refinement``; consecutive rings are zipped into triangles by angle.
    """
    n = int(refinement)
    if n < 1:
        raise MeshError("refinement must be positive")
    pos = [np.zeros(3)]
    rings = [np.array([0])]
    angles = [np.array([0.0])]
    start = 1
    for k in range(1, n + 1):
        m = 6 * k
        th = 2 * np.pi * np.arange(m) / m
        rad = k / n
        pts = np.column_stack([rad * np.cos(th), rad * np.sin(th), np.zeros(m)])
        if k == n:
            pts[:, :2] /= np.linalg.norm(pts[:, :2], axis=1)[:, None]
        pos.append(pts)
        rings.append(np.arange(start, start + m))
        angles.append(th)
        start += m
    tri = []
    for k in range(1, n + 1):
        inner, outer = rings[k - 1], rings[k]
        if k == 1:
            for a in range(6):
                tri.append((0, outer[a], outer[(a + 1) % 6]))
            continue
        tri.extend(_zip_rings(inner, angles[k - 1], outer, angles[k]))
    pos = np.vstack([pos[0][None, :]] + pos[1:])
    return TriangleMesh(pos, np.array(tri, dtype=np.int64), name=f"disk(refinement={n})")


def _zip_rings(inner, th_in, outer, th_out):
    """Triangulate the annulus between two closed rings, counterclockwise."""
    ni, no = len(inner), len(outer)
    out = []
    i = j = 0
    while i < ni or j < no:
        next_in = th_in[i + 1] if i + 1 < ni else 2 * np.pi
        next_out = th_out[j + 1] if j + 1 < no else 2 * np.pi
        if j < no and (i >= ni or next_out <= next_in):
            out.append((inner[i % ni], outer[j], outer[(j + 1) % no]))
            j += 1
        else:
            out.append((inner[i], outer[j % no], inner[(i + 1) % ni]))
            i += 1
    return out


# ---------------------------------------------------------------- distances


@dataclass
class DistanceField:
    """Graph distances to a source set.

    ``distance`` holds one value per mesh vertex; ``predecessors`` and
    ``node_distance`` cover the augmented graph (vertices followed by any
    points-on-edges supplied as sources or extra nodes).
    """

    sources: np.ndarray
    distance: np.ndarray
    node_distance: np.ndarray = field(repr=False)
    predecessors: np.ndarray = field(repr=False)
    edge_points: np.ndarray = field(repr=False)

    def path_to(self, node: int) -> list[int]:
        """Node chain from the nearest source to ``node`` (inclusive)."""
        path = [int(node)]
        while self.predecessors[path[-1]] >= 0:
            path.append(int(self.predecessors[path[-1]]))
        return path[::-1]


def augmented_graph(mesh: TriangleMesh, edge_points=None):
    """Edge graph plus nodes placed on edges.

    ``edge_points`` is an array of ``(edge_id, t)`` rows: the point lies at
    parameter ``t`` from ``edges[edge_id, 0]`` towards ``edges[edge_id, 1]``.
    Point ``p`` becomes graph node ``V + p``.
    """
    V = mesh.n_vertices
    e, L = mesh.edges, mesh.edge_lengths
    if edge_points is None or len(edge_points) == 0:
        return mesh.adjacency, np.empty((0, 2))
    pts = np.asarray(edge_points, dtype=np.float64).reshape(-1, 2)
    eid = pts[:, 0].astype(np.int64)
    t = pts[:, 1]
    nodes = V + np.arange(len(pts))
    i = np.concatenate([e[:, 0], e[eid, 0], nodes])
    j = np.concatenate([e[:, 1], nodes, e[eid, 1]])
    w = np.concatenate([L, t * L[eid], (1 - t) * L[eid]])
    return _min_weight_graph(i, j, w, V + len(pts)), pts


def graph_distance(mesh: TriangleMesh, sources=None, edge_points=None, extra_points=None) -> DistanceField:
    """Shortest-path distance along mesh edges (Dijkstra).

    Parameters
    ----------
    sources : int or array_like of int, optional
        Source vertices.
    edge_points : array_like, shape (P, 2), optional
        Source points on edges as ``(edge_id, t)`` rows.
    extra_points : array_like, shape (Q, 2), optional
        Points on edges inserted as graph nodes without being sources.

    Notes
    -----
    Graph distance overestimates the intrinsic distance by a factor that
    depends on the triangulation (up to sqrt(2) along the unsupported
    diagonal of the flat-torus grid); it is exact along mesh edges.
    """
    src = np.atleast_1d(np.asarray([] if sources is None else sources, dtype=np.int64))
    ep = np.empty((0, 2)) if edge_points is None else np.asarray(edge_points, dtype=np.float64).reshape(-1, 2)
    xp = np.empty((0, 2)) if extra_points is None else np.asarray(extra_points, dtype=np.float64).reshape(-1, 2)
    if len(src) == 0 and len(ep) == 0:
        raise ValueError("graph_distance needs a nonempty source set")
    if len(src) and (src.min() < 0 or src.max() >= mesh.n_vertices):
        raise ValueError("source vertex out of range")
    pts = np.vstack([ep, xp])
    graph, pts = augmented_graph(mesh, pts)
    V = mesh.n_vertices
    start = np.concatenate([src, V + np.arange(len(ep))]).astype(np.int64)
    dist, pred, _ = csgraph.dijkstra(graph, directed=False, indices=start, min_only=True,
                                     return_predecessors=True)
    return DistanceField(sources=start, distance=dist[:V], node_distance=dist, predecessors=pred,
                         edge_points=pts)


# ---------------------------------------------------------------- balls


@dataclass
class BallSubmesh:
    """Vertices and triangles of a graph-geodesic ball ``B(center, radius)``."""

    parent: TriangleMesh = field(repr=False)
    center: int
    radius: float
    vertices: np.ndarray
    interior_vertices: np.ndarray
    boundary_vertices: np.ndarray
    triangles: np.ndarray
    distance: np.ndarray = field(repr=False)

    def layers(self) -> int:
        """Edge hops from the center to the nearest ball-boundary vertex."""
        hops = csgraph.shortest_path(self.parent.adjacency, unweighted=True, indices=self.center)
        return int(hops[self.boundary_vertices].min()) if len(self.boundary_vertices) else 0


def mesh_diameter_estimate(mesh: TriangleMesh, start: int = 0) -> float:
    """Double-sweep lower bound on the graph diameter."""
    d0 = graph_distance(mesh, start).distance
    far = int(np.argmax(d0))
    return float(graph_distance(mesh, far).distance.max())


def extract_ball(mesh: TriangleMesh, center: int, radius: float, distance=None) -> BallSubmesh:
    """Submesh of triangles whose vertices all lie within ``radius`` of ``center``.

    A submesh vertex is interior when every parent neighbour is also in the
    submesh, so its whole triangle fan belongs to the ball.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if distance is None:
        distance = graph_distance(mesh, center).distance
    diam = mesh.diameter_estimate
    if radius >= 0.5 * diam:
        raise MeshError(f"radius {radius:.6g} is not below half the mesh diameter ({diam:.6g})")
    inside = distance <= radius
    tmask = inside[mesh.triangles].all(axis=1)
    tris = np.flatnonzero(tmask)
    verts = np.unique(mesh.triangles[tris])
    member = np.zeros(mesh.n_vertices, dtype=bool)
    member[verts] = True
    adj = mesh.adjacency
    # count parent neighbours outside the submesh
    outside_nbrs = adj.astype(bool).astype(np.int64) @ (~member).astype(np.int64)
    interior = verts[outside_nbrs[verts] == 0]
    # the parent boundary is a boundary of the ball too
    if len(mesh.boundary_vertices):
        interior = np.setdiff1d(interior, mesh.boundary_vertices)
    boundary = np.setdiff1d(verts, interior)
    if center not in set(interior.tolist()):
        raise BallTooSmallError(
            f"ball of radius {radius:.6g} around vertex {center} has no interior at this resolution; "
            "refine the mesh or lower lambda")
    return BallSubmesh(parent=mesh, center=int(center), radius=float(radius), vertices=verts,
                       interior_vertices=interior, boundary_vertices=boundary, triangles=tris,
                       distance=distance)


# ---------------------------------------------------------------- OFF I/O


def write_off(mesh: TriangleMesh, path) -> Path:
    """Write ASCII OFF plus ``<path>.json`` with the name and any periodic identification."""
    path = Path(path)
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_triangles} {len(mesh.edges)}"]
    lines += [" ".join(format(x, ".17g") for x in p) for p in mesh.positions]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    path.write_text("\n".join(lines) + "\n")
    sidecar = {"name": mesh.name, **(mesh.identification or {})}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar))
    return path


def read_off(path) -> TriangleMesh:
    path = Path(path)
    tokens = path.read_text().split()
    if not tokens or tokens[0] != "OFF":
        raise MeshError(f"{path}: not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    k = 4
    pos = np.array(tokens[k:k + 3 * nv], dtype=np.float64).reshape(nv, 3)
    k += 3 * nv
    tri = []
    for _ in range(nf):
        cnt = int(tokens[k])
        if cnt != 3:
            raise MeshError(f"{path}: only triangular faces are supported")
        tri.append([int(x) for x in tokens[k + 1:k + 4]])
        k += 4
    tri = np.array(tri, dtype=np.int64).reshape(-1, 3)
    sidecar = path.with_suffix(path.suffix + ".json")
    ident = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    return TriangleMesh(pos, tri, period=ident.get("period"), corner_shifts=ident.get("corner_shifts"),
                        name=ident.get("name", path.stem))
