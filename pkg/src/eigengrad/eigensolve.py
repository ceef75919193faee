"""Lowest eigenpairs of the pencil ``S x = lambda^2 M x``.

The sparse path is a block preconditioned conjugate-gradient iteration
(LOBPCG) in the M-inner product.  The preconditioner is a sparse LU
factorization of ``S + sigma M`` with a small positive shift.  A dense
solver covers small pencils and serves as the oracle for the sparse one.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import splu

from .fem import SparsePencil

logger = logging.getLogger(__name__)

DENSE_LIMIT = 6000


class EigenSolveError(RuntimeError):
    """The iteration did not converge; carries the diagnostics."""

    def __init__(self, message, iterations=None, residuals=None):
        super().__init__(message)
        self.iterations = iterations
        self.residuals = residuals


class BandIncompleteError(ValueError):
    """A requested spectral band extends past the computed spectrum."""


@dataclass
class Spectrum:
    """Ascending eigenpairs with M-orthonormal vectors (one column per pair)."""

    lambdas: np.ndarray
    vectors: np.ndarray = field(repr=False)
    residuals: np.ndarray
    mesh_ref: str = ""
    seed: int = 0
    tol: float = 0.0

    def __len__(self):
        return len(self.lambdas)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Pencil eigenvalues ``lambda^2``."""
        return self.lambdas ** 2

    def truncate(self, count: int) -> "Spectrum":
        return Spectrum(self.lambdas[:count].copy(), self.vectors[:, :count].copy(),
                        self.residuals[:count].copy(), self.mesh_ref, self.seed, self.tol)


@dataclass(frozen=True)
class EigenCluster:
    """Index range ``[start, stop)`` of numerically degenerate eigenpairs."""

    start: int
    stop: int
    lam: float

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop)

    def __len__(self):
        return self.stop - self.start


def _m_residuals(pencil, X, mu):
    R = pencil.stiffness @ X - pencil.mass[:, None] * X * mu
    return np.sqrt(np.sum(R * R / pencil.mass[:, None], axis=0))


def _finalize(pencil, X, mu, seed, tol):
    order = np.argsort(mu, kind="stable")
    mu, X = mu[order], X[:, order]
    X = X / np.sqrt(np.sum(pencil.mass[:, None] * X * X, axis=0))
    # deterministic sign: largest-magnitude entry positive
    piv = np.argmax(np.abs(X), axis=0)
    X = X * np.where(X[piv, np.arange(X.shape[1])] < 0, -1.0, 1.0)
    res = _m_residuals(pencil, X, mu)
    lam = np.sqrt(np.clip(mu, 0.0, None))
    return Spectrum(lam, X, res, pencil.mesh_ref, seed, tol)


def solve_dense(pencil: SparsePencil) -> Spectrum:
    """Full spectrum by a dense symmetric eigensolver (``dimension <= 6000``)."""
    n = pencil.dimension
    if n > DENSE_LIMIT:
        raise ValueError(f"dense solve limited to dimension {DENSE_LIMIT}, got {n}")
    d = 1.0 / np.sqrt(pencil.mass)
    A = pencil.stiffness.toarray()
    A *= d[:, None]
    A *= d[None, :]
    A = 0.5 * (A + A.T)
    mu, Y = sla.eigh(A, overwrite_a=True)
    return _finalize(pencil, d[:, None] * Y, mu, seed=0, tol=0.0)


def _m_orthonormalize(Y, mass, drop=1e-10):
    """M-orthonormal basis of span(Y), dropping numerically dependent directions."""
    if Y.shape[1] == 0:
        return Y
    nrm = np.sqrt(np.sum(mass[:, None] * Y * Y, axis=0))
    keep = nrm > 0
    Y = Y[:, keep] / nrm[keep]
    G = Y.T @ (mass[:, None] * Y)
    w, V = np.linalg.eigh(0.5 * (G + G.T))
    good = w > drop * w.max()
    return Y @ (V[:, good] / np.sqrt(w[good]))


def _project_out(Y, X, mass):
    return Y - X @ (X.T @ (mass[:, None] * Y))


def solve_lowest(pencil: SparsePencil, count: int, tol: float = 1e-9, seed: int = 0,
                 max_iter: int = 500, dense_threshold: int = 0, guard: int | None = None) -> Spectrum:
    """Lowest ``count`` eigenpairs by LOBPCG.

    Parameters
    ----------
    pencil : SparsePencil
    count : int
        Number of wanted pairs (``count < dimension``).
    tol : float
        Convergence threshold on ``||S x - lambda^2 M x||_{M^-1}``, relative to
        ``max(1, lambda^2)``.
    seed : int
        Seed of the random initial block.
    dense_threshold : int
        Pencils of at most this dimension are solved densely instead.
    guard : int, optional
        Extra block columns beyond ``count`` (default ``max(8, count // 4)``).

    Raises
    ------
    EigenSolveError
        When the wanted pairs are not converged after ``max_iter`` iterations.
    """
    n = pencil.dimension
    if not 0 < count < n:
        raise ValueError(f"count must be in (0, {n}), got {count}")
    if tol < 1e-12:
        raise ValueError("tol must be at least 1e-12")
    if n <= dense_threshold:
        spec = solve_dense(pencil).truncate(count)
        spec.seed, spec.tol = seed, tol
        return spec

    S, m = pencil.stiffness, pencil.mass
    b = min(count + (guard if guard is not None else max(8, count // 4)), n // 2)
    if b < count:
        raise ValueError("pencil too small for a sparse solve; use the dense path")
    sigma = 1e-3 * S.diagonal().sum() / m.sum()
    lu = splu((S + sigma * pencil.mass_matrix).tocsc())

    rng = np.random.default_rng(seed)
    X = _m_orthonormalize(rng.standard_normal((n, b)), m)
    SX = S @ X
    mu, C = sla.eigh(0.5 * (X.T @ SX + SX.T @ X))
    X, SX = X @ C, SX @ C
    P = np.empty((n, 0))
    res = None
    for it in range(1, max_iter + 1):
        R = SX - m[:, None] * X * mu
        res = np.sqrt(np.sum(R * R / m[:, None], axis=0))
        done = res <= tol * np.maximum(1.0, mu)
        if done[:count].all():
            logger.debug("LOBPCG converged in %d iterations", it)
            break
        active = ~done
        W = lu.solve(R[:, active])
        Y = np.hstack([W, P])
        for _ in range(2):
            Y = _project_out(Y, X, m)
            Y = _m_orthonormalize(Y, m)
        SY = S @ Y
        # [X, Y] is M-orthonormal and X^T S X = diag(mu)
        XSY = X.T @ SY
        YSY = Y.T @ SY
        A = np.block([[np.diag(mu), XSY], [XSY.T, 0.5 * (YSY + YSY.T)]])
        mu_all, C = sla.eigh(A)
        C = C[:, :b]
        mu = mu_all[:b]
        Cx, Cy = C[:b], C[b:]
        X, SX = X @ Cx + Y @ Cy, SX @ Cx + SY @ Cy
        P = Y @ Cy[:, active]
    else:
        bad = int((~done[:count]).sum())
        raise EigenSolveError(
            f"LOBPCG: {bad} of {count} pairs unconverged after {max_iter} iterations "
            f"(max residual {res[:count].max():.3e})", iterations=max_iter, residuals=res[:count])
    X, mu = X[:, :count], mu[:count]
    return _finalize(pencil, X, mu, seed, tol)


def cluster(spectrum: Spectrum, cluster_tol: float = 1e-2) -> list[EigenCluster]:
    """Group consecutive eigenvalues whose relative gap is below ``cluster_tol``."""
    lam = np.asarray(spectrum.lambdas)
    if np.any(np.diff(lam) < 0):
        raise ValueError("spectrum must be sorted")
    out = []
    start = 0
    for i in range(1, len(lam) + 1):
        if i < len(lam):
            scale = max(lam[i], 1e-300)
            if (lam[i] - lam[i - 1]) / scale < cluster_tol:
                continue
        out.append(EigenCluster(start, i, float(lam[start:i].mean())))
        start = i
    return out


def band_select(spectrum: Spectrum, lam: float) -> np.ndarray:
    """Indices with ``lam < lambda_j <= lam + 1``."""
    lambdas = np.asarray(spectrum.lambdas)
    if lam + 1 >= lambdas[-1]:
        raise BandIncompleteError(
            f"band ({lam:g}, {lam + 1:g}] reaches past the computed spectrum (max {lambdas[-1]:.6g})")
    return np.flatnonzero((lambdas > lam) & (lambdas <= lam + 1))


def check_spectrum(spectrum: Spectrum, pencil: SparsePencil | None = None, tol: float | None = None) -> None:
    """Validate ordering, M-orthonormality and residuals; raise ``ValueError``."""
    lam = spectrum.lambdas
    if np.any(np.diff(lam) < 0) or np.any(lam < 0):
        raise ValueError("lambdas must be nonnegative and ascending")
    if spectrum.vectors.shape[1] != len(lam) or len(spectrum.residuals) != len(lam):
        raise ValueError("inconsistent spectrum shapes")
    if pencil is None:
        return
    X = spectrum.vectors
    G = X.T @ (pencil.mass[:, None] * X)
    err = np.abs(G - np.eye(len(lam))).max()
    if err > 1e-8:
        raise ValueError(f"vectors not M-orthonormal (max deviation {err:.3e})")
    tol = spectrum.tol if tol is None else tol
    if tol > 0:
        res = _m_residuals(pencil, X, spectrum.eigenvalues)
        bound = tol * np.maximum(1.0, spectrum.eigenvalues)
        if np.any(res > bound):
            raise ValueError(f"residual {res.max():.3e} exceeds tolerance")


def save_spectrum(spectrum: Spectrum, path) -> tuple[Path, Path]:
    """JSON header at ``path`` plus little-endian float64 vectors in ``<path>.bin``."""
    path = Path(path)
    bin_path = path.with_suffix(path.suffix + ".bin")
    X = np.ascontiguousarray(spectrum.vectors, dtype="<f8")
    header = {
        "mesh_ref": spectrum.mesh_ref,
        "seed": int(spectrum.seed),
        "tol": float(spectrum.tol),
        "lambdas": [float(x) for x in spectrum.lambdas],
        "residuals": [float(x) for x in spectrum.residuals],
        "shape": list(X.shape),
        "dtype": "<f8",
        "order": "C",
        "data_file": bin_path.name,
    }
    path.write_text(json.dumps(header, indent=1))
    bin_path.write_bytes(X.tobytes())
    return path, bin_path


def load_spectrum(path, pencil: SparsePencil | None = None) -> Spectrum:
    path = Path(path)
    header = json.loads(path.read_text())
    raw = (path.parent / header["data_file"]).read_bytes()
    shape = tuple(header["shape"])
    if len(raw) != 8 * math.prod(shape):
        raise ValueError(f"{path}: binary block has {len(raw)} bytes, expected {8 * math.prod(shape)}")
    X = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
    spec = Spectrum(np.array(header["lambdas"]), X, np.array(header["residuals"]),
                    header["mesh_ref"], header["seed"], header["tol"])
    check_spectrum(spec, pencil)
    return spec
