"""Empirical checks of the two-sided gradient bound and its supporting facts.

Every report is a dataclass with a ``to_dict`` method; the JSON key for the
eigenfrequency is ``"lambda"`` (the attribute is ``lam``).
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csgraph, csr_matrix

from . import analytic
from .eigensolve import EigenCluster, Spectrum, band_select
from .fem import SparsePencil, dirichlet_solve, gradient, grad_sup_norm, sup_norm
from .geometry import BallTooSmallError, TriangleMesh, extract_ball, graph_distance

logger = logging.getLogger(__name__)

DEFAULT_ZERO_TOL = 1e-9


class LambdaTooSmallError(ValueError):
    """The gradient bound is only claimed for lambda >= 1."""


class UnderResolvedError(BallTooSmallError):
    """The wavelength ball spans too few mesh layers."""


class EmptyNodalSetError(ValueError):
    """The function has no sign change."""


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


class _Report:
    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if f.metadata.get("skip"):
                continue
            key = "lambda" if f.name == "lam" else f.name
            out[key] = _plain(getattr(self, f.name))
        return out

    @classmethod
    def from_dict(cls, d: dict):
        names = {f.name for f in dataclasses.fields(cls)}
        kw = {("lam" if k == "lambda" else k): v for k, v in d.items()}
        return cls(**{k: v for k, v in kw.items() if k in names})


# ---------------------------------------------------------------- ratios


@dataclass
class RatioReport(_Report):
    lam: float
    sup_e: float
    sup_grad: float
    ratio: float
    source: str
    seed: int | None = None
    under_resolved: bool = False


def _check_lambda(lam, floor):
    if lam < floor:
        raise LambdaTooSmallError(f"lambda = {lam:.6g} < {floor:g}: the bound is stated for lambda >= 1")


def discrete_ratio(mesh: TriangleMesh, values, lam: float, source: str = "values",
                   seed=None, lambda_floor: float = 1.0, lambda_cap: float | None = None) -> RatioReport:
    """Ratio ``sup|grad e| / (lam sup|e|)`` from vertex values."""
    _check_lambda(lam, lambda_floor)
    se = sup_norm(values)
    if se == 0.0 or np.ptp(values) <= 1e-12 * se:
        raise ValueError("constant function has no gradient ratio")
    sg = grad_sup_norm(gradient(mesh, values))
    under = lambda_cap is not None and lam > lambda_cap
    return RatioReport(float(lam), se, sg, sg / (lam * se), source, seed, bool(under))


def random_combination(spectrum: Spectrum, indices, rng) -> tuple[np.ndarray, float]:
    """Unit random combination of eigenvectors and its Rayleigh-quotient lambda."""
    idx = np.asarray(indices)
    c = rng.standard_normal(len(idx))
    c /= np.linalg.norm(c)
    values = spectrum.vectors[:, idx] @ c
    lam = math.sqrt(float(np.sum(c * c * spectrum.eigenvalues[idx])))
    return values, lam


def gradient_ratio(source, mesh: TriangleMesh | None = None, spectrum: Spectrum | None = None,
                   seed: int = 0, samples: int = 4096, lambda_floor: float = 1.0) -> RatioReport:
    """Gradient ratio of an analytic mode, a spectrum index, or a cluster combination.

    For an :class:`EigenCluster` a seeded Gaussian unit combination of the
    cluster's eigenvectors is used.
    """
    if isinstance(source, (analytic.TorusMode, analytic.SphereMode, analytic.DiskMode)):
        _check_lambda(source.lam, lambda_floor)
        se, sg = analytic.sup_norms(source, samples=samples, seed=seed)
        return RatioReport(source.lam, se, sg, sg / (source.lam * se), f"analytic:{type(source).__name__}", seed)
    if mesh is None or spectrum is None:
        raise ValueError("discrete sources need mesh and spectrum")
    if isinstance(source, EigenCluster):
        values, lam = random_combination(spectrum, source.indices, np.random.default_rng(seed))
        return discrete_ratio(mesh, values, lam, f"cluster[{source.start}:{source.stop}]", seed, lambda_floor)
    j = int(source)
    return discrete_ratio(mesh, spectrum.vectors[:, j], float(spectrum.lambdas[j]), f"index:{j}", None,
                          lambda_floor)


def envelope(reports) -> tuple[float, float]:
    r = [x.ratio for x in reports]
    if not r:
        return (float("nan"), float("nan"))
    return (min(r), max(r))


# ---------------------------------------------------------------- nodal sets


@dataclass
class NodalSet(_Report):
    """Zero set of a piecewise-linear function.

    ``crossing_edges[p]`` and ``crossing_params[p]`` place crossing ``p`` at
    parameter ``t`` from the edge's first vertex.  ``segments`` pairs two
    crossings inside ``segment_triangles``.
    """

    crossing_edges: np.ndarray
    crossing_params: np.ndarray
    segments: np.ndarray
    segment_triangles: np.ndarray
    vertex_zeros: np.ndarray
    degenerate_triangles: np.ndarray
    signs: np.ndarray = field(repr=False, metadata={"skip": True})

    def __len__(self):
        return len(self.crossing_edges) + len(self.vertex_zeros)

    def points(self, mesh: TriangleMesh) -> np.ndarray:
        return mesh.edge_point(self.crossing_edges, self.crossing_params)


def extract_nodal(mesh: TriangleMesh, values, zero_tol: float = DEFAULT_ZERO_TOL) -> NodalSet:
    """Nodal set by linear interpolation along sign-changing edges.

    Vertices with ``|value| <= zero_tol * sup`` count as zeros; triangles
    touching them are flagged as degenerate and contribute no segment.
    """
    v = np.asarray(values, dtype=np.float64)
    sup = np.abs(v).max() if v.size else 0.0
    zero = np.abs(v) <= zero_tol * sup
    signs = np.where(zero, 0, np.sign(v)).astype(np.int8)
    e = mesh.edges
    si, sj = signs[e[:, 0]], signs[e[:, 1]]
    cross = si * sj < 0
    ce = np.flatnonzero(cross)
    a, b = v[e[ce, 0]], v[e[ce, 1]]
    t = a / (a - b)
    if len(ce) == 0 and not zero.any():
        logger.warning("no sign change: nodal set is empty")
    # crossings per triangle
    pid = np.full(len(e), -1)
    pid[ce] = np.arange(len(ce))
    tp = pid[mesh.triangle_edges]
    has_zero = zero[mesh.triangles].any(axis=1)
    ncross = (tp >= 0).sum(axis=1)
    degenerate = np.flatnonzero(has_zero)
    regular = np.flatnonzero(~has_zero & (ncross == 2))
    seg = np.sort(tp[regular], axis=1)[:, 1:]
    if len(degenerate):
        logger.info("%d degenerate nodal triangles skipped", len(degenerate))
    return NodalSet(ce, t, seg, regular, np.flatnonzero(zero), degenerate, signs)


@dataclass
class NodalDensityReport(_Report):
    lam: float
    r_max: float
    normalized: float
    nodal_domain_count: int
    farthest_vertex: int = -1


def nodal_domain_count(mesh: TriangleMesh, signs) -> int:
    """Connected components of same-sign vertices across uncut edges."""
    e = mesh.edges
    s = np.asarray(signs)
    same = (s[e[:, 0]] == s[e[:, 1]]) & (s[e[:, 0]] != 0)
    V = mesh.n_vertices
    g = csr_matrix((np.ones(same.sum()), (e[same, 0], e[same, 1])), shape=(V, V))
    _, labels = csgraph.connected_components(g, directed=False)
    return int(len(np.unique(labels[s != 0])))


def nodal_density(mesh: TriangleMesh, nodal: NodalSet, lam: float) -> NodalDensityReport:
    """Largest vertex distance to the nodal set, also scaled by ``lam``."""
    if len(nodal) == 0:
        raise EmptyNodalSetError("nodal set is empty")
    pts = np.column_stack([nodal.crossing_edges, nodal.crossing_params])
    field_ = graph_distance(mesh, sources=nodal.vertex_zeros, edge_points=pts)
    d = field_.distance
    far = int(np.argmax(d))
    r_max = float(d[far])
    return NodalDensityReport(float(lam), r_max, float(lam) * r_max,
                              nodal_domain_count(mesh, nodal.signs), far)


# ---------------------------------------------------------------- certificate


@dataclass
class LowerBoundCertificate(_Report):
    """Mean-value certificate: ``|e(x*)| / d(x*, y) <= max |grad e|`` along the path."""

    argmax_vertex: int
    nearest_nodal_point: list
    path: list
    path_length: float
    implied_bound: float
    normalized: float
    path_gradient_max: float
    mean_value_holds: bool
    lam: float = 0.0


def lower_bound_certificate(mesh: TriangleMesh, values, lam: float, zero_tol: float = DEFAULT_ZERO_TOL,
                            nodal: NodalSet | None = None) -> LowerBoundCertificate:
    """Walk from the maximizer of ``|e|`` to the nearest nodal point."""
    v = np.asarray(values, dtype=np.float64)
    if nodal is None:
        nodal = extract_nodal(mesh, v, zero_tol)
    if len(nodal) == 0:
        raise EmptyNodalSetError("nodal set is empty")
    V = mesh.n_vertices
    x_star = int(np.argmax(np.abs(v)))
    pts = np.column_stack([nodal.crossing_edges, nodal.crossing_params])
    dfield = graph_distance(mesh, sources=x_star, extra_points=pts)
    cand = np.concatenate([nodal.vertex_zeros, V + np.arange(len(pts))]).astype(np.int64)
    y = int(cand[np.argmin(dfield.node_distance[cand])])
    chain = dfield.path_to(y)
    length = float(dfield.node_distance[y])

    def describe(node):
        if node < V:
            return int(node)
        p = node - V
        lo, hi = mesh.edges[nodal.crossing_edges[p]]
        return [int(lo), int(hi), float(nodal.crossing_params[p])]

    def pair(a, b):
        if a >= V:
            a, b = b, a
        if b >= V:
            return mesh.edges[nodal.crossing_edges[b - V]]
        return (a, b)

    gnorm = np.linalg.norm(gradient(mesh, v), axis=1)
    gmax = 0.0
    for a, b in zip(chain[:-1], chain[1:]):
        i, j = pair(a, b)
        tris = np.intersect1d(mesh.incident_triangles(int(i)), mesh.incident_triangles(int(j)))
        gmax = max(gmax, float(gnorm[tris].max()))
    e_y = abs(v[y]) if y < V else 0.0
    implied = abs(v[x_star]) / length
    holds = implied <= gmax * (1 + 1e-12) + e_y / length
    sup = np.abs(v).max()
    return LowerBoundCertificate(x_star, describe(y), [describe(n) for n in chain], length, implied,
                                 implied / (lam * sup), gmax, bool(holds), float(lam))


# ---------------------------------------------------------------- decomposition


@dataclass
class DecompositionReport(_Report):
    center: int
    ball_radius: float
    harmonic_part_sup: float
    poisson_part_sup: float
    grad_u_at_p: float
    grad_v_at_p: float
    grad_e_at_p: float
    reconstruction_error: float
    lam: float = 0.0
    sup_e: float = 0.0
    layers: int = 0
    interior_count: int = 0


def decomposition_probe(mesh: TriangleMesh, pencil: SparsePencil, values, lam: float,
                        center: int | None = None, kappa: float = 1.0, min_layers: int = 3) -> DecompositionReport:
    """Split ``e`` on the ball ``B(p, kappa/lam)`` into harmonic and Poisson parts.

    ``u`` is discrete-harmonic with the boundary trace of ``e``; ``v`` vanishes
    on the ball boundary and solves ``S v = lam^2 M e`` inside.  ``lam`` must be
    the eigenfrequency of ``values`` in this pencil.
    """
    e = np.asarray(values, dtype=np.float64)
    if center is None:
        center = int(np.argmax(np.abs(e)))
    radius = kappa / lam
    try:
        ball = extract_ball(mesh, center, radius)
    except BallTooSmallError as exc:
        raise UnderResolvedError(str(exc)) from exc
    layers = ball.layers()
    if layers < min_layers:
        raise UnderResolvedError(
            f"ball of radius {radius:.4g} spans {layers} mesh layers (< {min_layers}); refine the mesh")
    I = ball.interior_vertices
    zero = np.zeros_like(e)
    u = dirichlet_solve(pencil, I, e, zero)
    v = dirichlet_solve(pencil, I, zero, lam * lam * pencil.mass * e)
    recon = float(np.abs(e[I] - u[I] - v[I]).max())
    fan = mesh.incident_triangles(center)
    verts = ball.vertices

    def grad_at_p(f):
        return float(np.linalg.norm(gradient(mesh, f)[fan], axis=1).max())

    return DecompositionReport(int(center), float(radius), float(np.abs(u[verts]).max()),
                               float(np.abs(v[verts]).max()), grad_at_p(u), grad_at_p(v), grad_at_p(e),
                               recon, float(lam), float(np.abs(e).max()), layers, len(I))


# ---------------------------------------------------------------- Weyl law


@dataclass
class WeylReport(_Report):
    lambda_grid: list
    e_diag: list
    weyl_ratio: list
    probe_vertex: int = 0
    dim: int = 2


def weyl_constant(dim: int) -> float:
    """``(4 pi)^(n/2) Gamma(1 + n/2)``."""
    return (4 * math.pi) ** (dim / 2) * math.gamma(1 + dim / 2)


def weyl_check(spectrum: Spectrum, probe_vertex: int, lambda_grid, dim: int = 2) -> WeylReport:
    """Truncated spectral function ``e(x, x, lam)`` against its leading Weyl term."""
    grid = np.asarray(lambda_grid, dtype=np.float64)
    if grid.size and grid.max() > spectrum.lambdas[-1]:
        raise ValueError(f"lambda grid reaches {grid.max():g} beyond the computed spectrum "
                         f"({spectrum.lambdas[-1]:.6g})")
    sq = spectrum.vectors[probe_vertex] ** 2
    csum = np.cumsum(sq)
    counts = np.searchsorted(spectrum.lambdas, grid, side="right")
    e_diag = np.where(counts > 0, csum[np.maximum(counts - 1, 0)], 0.0)
    ratio = e_diag * weyl_constant(dim) / grid ** dim
    return WeylReport(grid.tolist(), e_diag.tolist(), ratio.tolist(), int(probe_vertex), dim)


# ---------------------------------------------------------------- cluster gradient sums


@dataclass
class ClusterGradReport(_Report):
    lambda_grid: list
    sums: list
    slope: float | None
    probe_vertex: int = 0
    band_sizes: list = field(default_factory=list)


def fit_loglog_slope(x, y) -> float | None:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 3:
        return None
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def cluster_grad_sum(mesh: TriangleMesh, spectrum: Spectrum, probe_vertex: int, lambda_grid) -> ClusterGradReport:
    """Band sums ``sum |grad e_j|^2`` over ``lambda_j in (lam, lam + 1]``.

    The sum is formed per triangle of the probe vertex's fan and the largest
    fan value is reported.
    """
    fan = mesh.incident_triangles(probe_vertex)
    sums, sizes = [], []
    for lam in lambda_grid:
        idx = band_select(spectrum, float(lam))
        sizes.append(int(len(idx)))
        total = np.zeros(len(fan))
        for j in idx:
            g = gradient(mesh, spectrum.vectors[:, j])[fan]
            total += np.einsum("ij,ij->i", g, g)
        sums.append(float(total.max()) if len(idx) else 0.0)
    return ClusterGradReport([float(x) for x in lambda_grid], sums, fit_loglog_slope(lambda_grid, sums),
                             int(probe_vertex), sizes)
