"""Closed-form Laplace eigenfunctions on the flat torus, round sphere and unit disk.

Each mode evaluates values and intrinsic gradients exactly.  Sup norms are
taken over a scrambled Halton sample followed by a batched coordinate ascent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .special import bessel_triplet, bessel_zero, real_sph_harm

TWO_PI = 2.0 * math.pi


class OffManifoldError(ValueError):
    """A point does not lie on the mode's manifold."""


# ---------------------------------------------------------------- torus


@dataclass
class TorusMode:
    """Trigonometric eigenfunction on the cube torus ``[0, side)^d``.

    ``e(x) = sum_k a_k cos(w k.x) + b_k sin(w k.x)`` with ``w = 2 pi / side``.
    """

    wave_vectors: np.ndarray
    cos_coefficients: np.ndarray
    sin_coefficients: np.ndarray
    side: float = TWO_PI

    def __post_init__(self):
        self.wave_vectors = np.atleast_2d(np.asarray(self.wave_vectors, dtype=np.int64))
        self.cos_coefficients = np.atleast_1d(np.asarray(self.cos_coefficients, dtype=np.float64))
        self.sin_coefficients = np.atleast_1d(np.asarray(self.sin_coefficients, dtype=np.float64))
        K, d = self.wave_vectors.shape
        if d not in (1, 2, 3):
            raise ValueError("torus dimension must be 1, 2 or 3")
        if self.cos_coefficients.shape != (K,) or self.sin_coefficients.shape != (K,):
            raise ValueError("one cos and one sin coefficient per wave vector")
        if not (np.any(self.cos_coefficients) or np.any(self.sin_coefficients)):
            raise ValueError("mode has no nonzero coefficient")
        n2 = (self.wave_vectors ** 2).sum(axis=1)
        if np.any(n2 != n2[0]):
            raise ValueError("wave vectors must share one |k| (single eigenspace)")

    @property
    def dim(self) -> int:
        return self.wave_vectors.shape[1]

    @property
    def lam(self) -> float:
        return float(np.sqrt((self.wave_vectors[0] ** 2).sum()) * TWO_PI / self.side)

    def _phase(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dim:
            raise OffManifoldError(f"torus points need {self.dim} coordinates")
        return (TWO_PI / self.side) * x @ self.wave_vectors.T

    def eval(self, x):
        ph = self._phase(x)
        return np.cos(ph) @ self.cos_coefficients + np.sin(ph) @ self.sin_coefficients

    def eval_gradient(self, x):
        ph = self._phase(x)
        w = (-np.sin(ph) * self.cos_coefficients + np.cos(ph) * self.sin_coefficients)
        return (TWO_PI / self.side) * w @ self.wave_vectors

    def scaled(self, c: float) -> "TorusMode":
        return TorusMode(self.wave_vectors, c * self.cos_coefficients, c * self.sin_coefficients, self.side)

    def to_dict(self) -> dict:
        return {"type": "torus", "wave_vectors": self.wave_vectors.tolist(),
                "cos_coefficients": self.cos_coefficients.tolist(),
                "sin_coefficients": self.sin_coefficients.tolist(), "side": self.side}


def lattice_shell(norm_sq: int, dim: int = 2) -> np.ndarray:
    """Integer vectors with ``|k|^2 = norm_sq``, one of each ``+-k`` pair."""
    r = int(math.isqrt(norm_sq))
    out = []
    for k in itertools.product(range(-r, r + 1), repeat=dim):
        if sum(c * c for c in k) == norm_sq and k > tuple([0] * dim):
            out.append(k)
    return np.array(out, dtype=np.int64).reshape(-1, dim)


def torus_eigenvalues(max_norm_sq: int, dim: int = 2) -> list[tuple[int, int]]:
    """``(|k|^2, multiplicity)`` for every nonempty lattice shell up to ``max_norm_sq``."""
    out = [(0, 1)]
    for n2 in range(1, max_norm_sq + 1):
        shell = lattice_shell(n2, dim)
        if len(shell):
            out.append((n2, 2 * len(shell)))
    return out


def random_torus_mode(norm_sq: int, rng, dim: int = 2, side: float = TWO_PI) -> TorusMode:
    """Gaussian random element of the ``|k|^2 = norm_sq`` eigenspace."""
    shell = lattice_shell(norm_sq, dim)
    if len(shell) == 0:
        raise ValueError(f"{norm_sq} is not a sum of {dim} squares")
    a = rng.standard_normal(len(shell))
    b = rng.standard_normal(len(shell))
    return TorusMode(shell, a, b, side)


# ---------------------------------------------------------------- sphere


def _to_spherical(points):
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if p.shape[1] != 3:
        raise OffManifoldError("sphere points need 3 coordinates")
    r = np.linalg.norm(p, axis=1)
    if np.any(np.abs(r - 1.0) > 1e-8):
        raise OffManifoldError("point is not on the unit sphere")
    theta = np.arccos(np.clip(p[:, 2] / r, -1.0, 1.0))
    phi = np.arctan2(p[:, 1], p[:, 0])
    return theta, phi


def _spherical_frame(theta, phi):
    ct, st, cp, sp = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    e_theta = np.column_stack([ct * cp, ct * sp, -st])
    e_phi = np.column_stack([-sp, cp, np.zeros_like(cp)])
    return e_theta, e_phi


@dataclass
class SphereMode:
    """Combination of the real spherical harmonics of one degree ``l``.

    ``coefficients[i]`` multiplies ``Y_l^m`` with ``m = i - l``.
    """

    degree: int
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if self.coefficients.shape != (2 * self.degree + 1,):
            raise ValueError("need 2l+1 coefficients")
        if not np.any(self.coefficients):
            raise ValueError("mode has no nonzero coefficient")
        if self.degree > 100:
            raise ValueError("degree above 100 is not supported")

    @property
    def lam(self) -> float:
        return math.sqrt(self.degree * (self.degree + 1))

    def _eval_angles(self, theta, phi):
        val = np.zeros_like(theta)
        dth = np.zeros_like(theta)
        dph = np.zeros_like(theta)
        for i, c in enumerate(self.coefficients):
            if c == 0.0:
                continue
            y, a, b = real_sph_harm(self.degree, i - self.degree, theta, phi)
            val += c * y
            dth += c * a
            dph += c * b
        return val, dth, dph

    def eval(self, points):
        return self._eval_angles(*_to_spherical(points))[0]

    def eval_gradient(self, points):
        theta, phi = _to_spherical(points)
        _, a, b = self._eval_angles(theta, phi)
        e_theta, e_phi = _spherical_frame(theta, phi)
        return a[:, None] * e_theta + b[:, None] * e_phi

    def scaled(self, c: float) -> "SphereMode":
        return SphereMode(self.degree, c * self.coefficients)

    def to_dict(self) -> dict:
        return {"type": "sphere", "degree": self.degree, "coefficients": self.coefficients.tolist()}


def random_sphere_mode(degree: int, rng) -> SphereMode:
    return SphereMode(degree, rng.standard_normal(2 * degree + 1))


# ---------------------------------------------------------------- disk


@dataclass
class DiskMode:
    """Separated Bessel eigenfunction ``J_m(lam r) cos(m phi)`` (or ``sin``) of the unit disk."""

    angular_order: int
    radial_index: int
    kind: str = "dirichlet"
    phase: str = "cos"
    lam: float = field(init=False)

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann"):
            raise ValueError("kind must be 'dirichlet' or 'neumann'")
        if self.phase not in ("cos", "sin"):
            raise ValueError("phase must be 'cos' or 'sin'")
        if self.phase == "sin" and self.angular_order == 0:
            raise ValueError("sin phase needs angular_order >= 1")
        which = "function" if self.kind == "dirichlet" else "derivative"
        self.lam = bessel_zero(self.angular_order, self.radial_index, which)

    def _polar(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if p.shape[1] != 2:
            raise OffManifoldError("disk points need 2 coordinates")
        r = np.hypot(p[:, 0], p[:, 1])
        if np.any(r > 1.0 + 1e-12):
            raise OffManifoldError("point outside the closed unit disk")
        return np.minimum(r, 1.0), np.arctan2(p[:, 1], p[:, 0])

    def _trig(self, phi):
        m = self.angular_order
        if self.phase == "cos":
            return np.cos(m * phi), -m * np.sin(m * phi)
        return np.sin(m * phi), m * np.cos(m * phi)

    def _eval_polar(self, r, phi):
        m, lam = self.angular_order, self.lam
        z = lam * r
        t, dt = self._trig(phi)
        j, jp, j_x = bessel_triplet(m, z)
        return j * t, lam * jp * t, lam * j_x * dt

    def eval(self, points):
        return self._eval_polar(*self._polar(points))[0]

    def eval_gradient(self, points):
        r, phi = self._polar(points)
        _, d_r, d_phi = self._eval_polar(r, phi)
        c, s = np.cos(phi), np.sin(phi)
        return np.column_stack([d_r * c - d_phi * s, d_r * s + d_phi * c])

    def to_dict(self) -> dict:
        return {"type": "disk", "angular_order": self.angular_order, "radial_index": self.radial_index,
                "kind": self.kind, "phase": self.phase}


def mode_from_dict(d: dict):
    kind = d["type"]
    if kind == "torus":
        return TorusMode(d["wave_vectors"], d["cos_coefficients"], d["sin_coefficients"], d.get("side", TWO_PI))
    if kind == "sphere":
        return SphereMode(d["degree"], d["coefficients"])
    if kind == "disk":
        return DiskMode(d["angular_order"], d["radial_index"], d.get("kind", "dirichlet"), d.get("phase", "cos"))
    raise ValueError(f"unknown mode type {kind!r}")


# ---------------------------------------------------------------- sup norms


class _Chart:
    """Parameter box of a mode's manifold with wrap/clip rules."""

    def __init__(self, mode, max_radius=1.0):
        self.mode = mode
        if isinstance(mode, TorusMode):
            d = mode.dim
            self.lo = np.zeros(d)
            self.hi = np.full(d, mode.side)
            self.periodic = np.ones(d, dtype=bool)
        elif isinstance(mode, SphereMode):
            self.lo = np.array([0.0, -math.pi])
            self.hi = np.array([math.pi, math.pi])
            self.periodic = np.array([False, True])
        elif isinstance(mode, DiskMode):
            self.lo = np.array([0.0, -math.pi])
            self.hi = np.array([max_radius, math.pi])
            self.periodic = np.array([False, True])
        else:
            raise TypeError(f"unsupported mode {type(mode).__name__}")

    def sample(self, n, seed):
        u = qmc.Halton(d=len(self.lo), scramble=True, seed=seed).random(n)
        if isinstance(self.mode, TorusMode):
            return u * self.hi
        if isinstance(self.mode, SphereMode):
            return np.column_stack([np.arccos(1.0 - 2.0 * u[:, 0]), math.pi * (2.0 * u[:, 1] - 1.0)])
        return np.column_stack([self.hi[0] * np.sqrt(u[:, 0]), math.pi * (2.0 * u[:, 1] - 1.0)])

    def normalize(self, x):
        span = self.hi - self.lo
        wrapped = self.lo + np.mod(x - self.lo, span)
        clipped = np.clip(x, self.lo, self.hi)
        return np.where(self.periodic, wrapped, clipped)

    def value_and_grad(self, x):
        m = self.mode
        if isinstance(m, TorusMode):
            g = m.eval_gradient(x)
            return m.eval(x), np.linalg.norm(g, axis=1)
        if isinstance(m, SphereMode):
            v, a, b = m._eval_angles(x[:, 0], x[:, 1])
            return v, np.hypot(a, b)
        v, d_r, d_phi = m._eval_polar(x[:, 0], x[:, 1])
        return v, np.hypot(d_r, d_phi)


def _coordinate_ascent(f, chart, x, step, tol=1e-6, max_sweeps=5000):
    x = chart.normalize(x)
    fx = f(x)
    h = np.full(len(x), step)
    d = x.shape[1]
    for _ in range(max_sweeps):
        live = h >= tol
        if not live.any():
            break
        improved = np.zeros(len(x), dtype=bool)
        for i in range(d):
            for sgn in (1.0, -1.0):
                trial = x.copy()
                trial[:, i] += sgn * h
                trial = chart.normalize(trial)
                ft = f(trial)
                better = live & (ft > fx)
                x[better] = trial[better]
                fx[better] = ft[better]
                improved |= better
        h = np.where(improved, h, 0.5 * h)
    return x, fx


def sup_norms(mode, samples: int = 4096, seed: int = 0, starts: int = 16,
              max_radius: float = 1.0) -> tuple[float, float]:
    """``(sup |e|, sup |grad e|)`` over the manifold.

    ``max_radius`` restricts a disk mode to ``r <= max_radius`` (used for
    the interior region away from the boundary).
    """
    if samples < 1000:
        raise ValueError("samples must be at least 1000")
    chart = _Chart(mode, max_radius)
    x = chart.sample(samples, seed)
    val, grad = chart.value_and_grad(x)
    step = float(np.max(chart.hi - chart.lo)) / math.sqrt(samples)
    out = []
    for k, f in enumerate((lambda y: np.abs(chart.value_and_grad(y)[0]),
                           lambda y: chart.value_and_grad(y)[1])):
        score = np.abs(val) if k == 0 else grad
        best = np.argsort(-score, kind="stable")[:starts]
        _, fx = _coordinate_ascent(f, chart, x[best].copy(), step)
        out.append(float(max(fx.max(), score.max())))
    return out[0], out[1]
