"""P1 finite elements for the positive Laplace-Beltrami operator.

The discrete operator is the pencil ``S x = lambda^2 M x`` with the cotangent
stiffness matrix ``S`` and the lumped (diagonal) mass ``M``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import io as spio
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import norm as sparse_norm
from scipy.sparse.linalg import splu

from .geometry import MeshError, TriangleMesh

logger = logging.getLogger(__name__)


class SingularSystemError(RuntimeError):
    """The Dirichlet block is singular (an interior component has no boundary)."""


@dataclass
class SparsePencil:
    """Stiffness/mass pair of the discrete Laplacian.

    Attributes
    ----------
    stiffness : scipy.sparse.csr_matrix
        Symmetric positive semidefinite cotangent matrix ``S``.
    mass : ndarray
        Positive diagonal of the lumped mass matrix ``M`` (vertex areas).
    mesh_ref : str
        Identifier of the source mesh.
    """

    stiffness: sparse.csr_matrix
    mass: np.ndarray
    mesh_ref: str = ""
    index_map: np.ndarray | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.stiffness.shape[0]

    @property
    def mass_matrix(self) -> sparse.dia_matrix:
        return sparse.diags(self.mass)

    def restrict(self, indices) -> "SparsePencil":
        """Principal sub-pencil on ``indices`` (e.g. Dirichlet interior)."""
        idx = np.asarray(indices, dtype=np.int64)
        S = self.stiffness[idx][:, idx].tocsr()
        return SparsePencil(S, self.mass[idx].copy(), mesh_ref=f"{self.mesh_ref}[restricted]", index_map=idx)

    def rayleigh_quotient(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(x @ (self.stiffness @ x) / (x @ (self.mass * x)))

    def nonnegative_weights(self) -> bool:
        """True when every off-diagonal entry of ``S`` is <= 0."""
        S = self.stiffness.tocoo()
        off = S.row != S.col
        return bool(np.all(S.data[off] <= 1e-14 * np.abs(S.data).max()))


def _cotangents(corners):
    """Cotangent of the angle at each corner, shape (F, 3)."""
    out = np.empty(corners.shape[:2])
    for k in range(3):
        a = corners[:, (k + 1) % 3] - corners[:, k]
        b = corners[:, (k + 2) % 3] - corners[:, k]
        out[:, k] = np.einsum("ij,ij->i", a, b) / np.linalg.norm(np.cross(a, b), axis=1)
    return out


def assemble(mesh: TriangleMesh) -> SparsePencil:
    """Cotangent stiffness and lumped mass of a triangle mesh.

    Raises
    ------
    MeshError
        If a triangle's area is below ``1e-14`` times the mean area.
    """
    areas = mesh.areas()
    tiny = np.flatnonzero(areas < 1e-14 * areas.mean())
    if tiny.size:
        raise MeshError(f"degenerate triangle {tiny[0]} (area {areas[tiny[0]]:.3e})")
    tri = mesh.triangles
    cot = _cotangents(mesh.corners())
    V = mesh.n_vertices
    # corner k weights the opposite side (k+1, k+2)
    i = np.concatenate([tri[:, 1], tri[:, 2], tri[:, 0]])
    j = np.concatenate([tri[:, 2], tri[:, 0], tri[:, 1]])
    w = 0.5 * np.concatenate([cot[:, 0], cot[:, 1], cot[:, 2]])
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-w, -w, w, w])
    S = sparse.coo_matrix((vals, (rows, cols)), shape=(V, V)).tocsr()
    S.sum_duplicates()
    S.sort_indices()
    mass = np.bincount(tri.reshape(-1), weights=np.repeat(areas / 3.0, 3), minlength=V)
    return SparsePencil(S, mass, mesh_ref=mesh.mesh_id)


def gradient(mesh: TriangleMesh, values) -> np.ndarray:
    """Per-triangle gradient of the piecewise-linear interpolant, shape (F, 3)."""
    f = np.asarray(values, dtype=np.float64)
    if f.shape != (mesh.n_vertices,):
        raise ValueError(f"expected {mesh.n_vertices} vertex values, got shape {f.shape}")
    c = mesh.corners()
    n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    twice_area = np.linalg.norm(n, axis=1)
    unit = n / twice_area[:, None]
    fv = f[mesh.triangles]
    g = np.zeros((mesh.n_triangles, 3))
    for k in range(3):
        opp = c[:, (k + 2) % 3] - c[:, (k + 1) % 3]
        g += fv[:, k, None] * np.cross(unit, opp)
    return g / twice_area[:, None]


def sup_norm(values) -> float:
    """Max of ``|values|`` over vertices.

    The vertex maximum underestimates the continuum sup by a relative
    ``O(h^2 lambda^2)``.
    """
    v = np.asarray(values)
    if v.size == 0:
        raise ValueError("sup_norm of empty input")
    return float(np.abs(v).max())


def grad_sup_norm(field) -> float:
    """Max per-triangle gradient magnitude."""
    g = np.asarray(field)
    if g.size == 0:
        raise ValueError("grad_sup_norm of empty input")
    return float(np.linalg.norm(g, axis=-1).max())


def dirichlet_solve(pencil: SparsePencil, interior, boundary_values, rhs) -> np.ndarray:
    """Solve ``S_II x_I = rhs_I - S_IB b_B`` and return ``x`` with ``x_B = b_B``.

    Parameters
    ----------
    pencil : SparsePencil
    interior : array_like of int
        Unknown vertices.  Every other vertex is prescribed.
    boundary_values : array_like, shape (V,)
        Values on the complement of ``interior``; entries on ``interior``
        are ignored.
    rhs : array_like, shape (V,)
        Load vector (already multiplied by the mass where appropriate).
    """
    S = pencil.stiffness
    V = pencil.dimension
    I = np.asarray(interior, dtype=np.int64)
    if I.size == 0:
        raise ValueError("interior set is empty")
    b = np.array(boundary_values, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if b.shape != (V,) or rhs.shape != (V,):
        raise ValueError("boundary_values and rhs must have one entry per vertex")
    mask = np.zeros(V, dtype=bool)
    mask[I] = True
    b[mask] = 0.0
    S_I = S[I]
    S_II = S_I[:, I].tocsc()
    _check_components(S_I, S_II, mask)
    load = rhs[I] - S_I @ b
    x_I = splu(S_II).solve(load)
    x = b
    x[I] = x_I
    res = np.linalg.norm(S_I @ x - rhs[I])
    bound = 1e-10 * (np.linalg.norm(rhs) + sparse_norm(S) * np.linalg.norm(x))
    if res > bound:
        raise SingularSystemError(f"Dirichlet solve residual {res:.3e} exceeds {bound:.3e}")
    return x


def _check_components(S_I, S_II, mask):
    ncomp, labels = csgraph.connected_components(S_II, directed=False)
    coupling = np.asarray(abs(S_I[:, ~mask]).sum(axis=1)).ravel()
    touches = np.bincount(labels, weights=coupling, minlength=ncomp) > 0
    if not touches.all():
        sizes = np.bincount(labels, minlength=ncomp)
        bad = np.flatnonzero(~touches)
        raise SingularSystemError(
            f"{len(bad)} of {ncomp} interior components have no boundary coupling "
            f"(sizes {sizes[bad].tolist()})")


def export_matrix_market(pencil: SparsePencil, prefix) -> tuple[Path, Path]:
    """Write ``<prefix>_stiffness.mtx`` and ``<prefix>_mass.mtx``."""
    prefix = Path(prefix)
    s_path = prefix.with_name(prefix.name + "_stiffness.mtx")
    m_path = prefix.with_name(prefix.name + "_mass.mtx")
    spio.mmwrite(str(s_path), pencil.stiffness.tocoo(), symmetry="symmetric", precision=17)
    spio.mmwrite(str(m_path), sparse.diags(pencil.mass).tocoo(), symmetry="symmetric", precision=17)
    return s_path, m_path
