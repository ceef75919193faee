import numpy as np
import pytest
import scipy.io
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from eigengrad.fem import (SingularSystemError, assemble, dirichlet_solve, export_matrix_market, gradient,
                           grad_sup_norm, sup_norm)
from eigengrad.geometry import MeshError, TriangleMesh, make_disk, make_flat_torus, make_icosphere


@pytest.mark.parametrize("maker", [lambda: make_flat_torus(9), lambda: make_icosphere(2), lambda: make_disk(5)])
def test_pencil_structure(maker):
    m = maker()
    p = assemble(m)
    S = p.stiffness
    assert abs(S - S.T).max() < 1e-14
    assert_allclose(np.asarray(S.sum(axis=1)).ravel(), 0.0, atol=1e-12)
    assert_allclose(p.mass.sum(), m.total_area(), rtol=1e-13)
    assert np.all(p.mass > 0)
    w = np.linalg.eigvalsh(S.toarray())
    assert w.min() > -1e-12


def test_torus_is_five_point_stencil():
    n = 10
    h = 2 * np.pi / n
    p = assemble(make_flat_torus(n))
    S = p.stiffness.toarray()
    assert_allclose(np.diag(S), 4.0, rtol=1e-13)
    assert_allclose(p.mass, h * h, rtol=1e-13)
    assert np.count_nonzero(np.abs(S[0]) > 1e-12) == 5
    assert p.nonnegative_weights()


@pytest.mark.parametrize("k", [1, 2, 3])
def test_torus_discrete_symbol(k):
    # [DERIVED] S cos(k x) = (4/h^2) sin^2(k h / 2) M cos(k x)
    n = 24
    h = 2 * np.pi / n
    m = make_flat_torus(n)
    p = assemble(m)
    v = np.cos(k * m.positions[:, 0])
    mu = 4.0 / h ** 2 * np.sin(k * h / 2) ** 2
    assert_allclose(p.stiffness @ v, mu * p.mass * v, atol=1e-12)
    assert_allclose(p.rayleigh_quotient(v), mu, rtol=1e-12)


def test_gradient_of_linear_function_is_exact():
    m = make_disk(6)
    x, y = m.positions[:, 0], m.positions[:, 1]
    g = gradient(m, 2 * x - 3 * y + 1)
    assert_allclose(g, np.tile([2.0, -3.0, 0.0], (m.n_triangles, 1)), atol=1e-12)
    assert_allclose(grad_sup_norm(g), np.sqrt(13.0))


def test_gradient_tangent_on_sphere():
    m = make_icosphere(2)
    g = gradient(m, m.positions[:, 2] ** 2)
    c = m.corners()
    n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    assert_allclose(np.einsum("ij,ij->i", g, n), 0.0, atol=1e-12)


def test_gradient_on_torus_unwraps_corners():
    n = 16
    m = make_flat_torus(n)
    h = 2 * np.pi / n
    g = gradient(m, np.sin(m.positions[:, 0]))
    # steepest difference quotient is (sin(h) - sin(0)) / h; a wrapped corner would give ~2 pi / h
    assert_allclose(grad_sup_norm(g), np.sin(h) / h, rtol=1e-13)


def test_norm_errors():
    with pytest.raises(ValueError):
        sup_norm([])
    with pytest.raises(ValueError):
        grad_sup_norm(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        gradient(make_icosphere(0), np.zeros(3))


def test_degenerate_triangle_rejected():
    pos = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0]]
    m = TriangleMesh(pos, [[0, 1, 2], [1, 3, 1]])
    with pytest.raises(MeshError, match="triangle 1"):
        assemble(m)


def test_dirichlet_reproduces_linear_functions():
    # the cotangent Laplacian of a planar linear function vanishes at interior vertices
    m = make_disk(8)
    p = assemble(m)
    f = 0.5 + m.positions[:, 0] - 2 * m.positions[:, 1]
    interior = np.setdiff1d(np.arange(m.n_vertices), m.boundary_vertices)
    u = dirichlet_solve(p, interior, f, np.zeros(m.n_vertices))
    assert_allclose(u, f, atol=1e-12)


def test_dirichlet_poisson_converges():
    # -Laplace u = 4 on the unit disk with u = 0 on the circle: u = 1 - r^2
    errs = []
    for ref in (8, 16):
        m = make_disk(ref)
        p = assemble(m)
        interior = np.setdiff1d(np.arange(m.n_vertices), m.boundary_vertices)
        u = dirichlet_solve(p, interior, np.zeros(m.n_vertices), 4.0 * p.mass)
        exact = 1 - np.sum(m.positions[:, :2] ** 2, axis=1)
        errs.append(np.abs(u - exact).max())
    assert errs[1] < 0.35 * errs[0]
    assert errs[1] < 5e-3


def test_dirichlet_singular_component():
    m = make_flat_torus(6)
    p = assemble(m)
    with pytest.raises(SingularSystemError):
        dirichlet_solve(p, np.arange(m.n_vertices), np.zeros(m.n_vertices), np.zeros(m.n_vertices))
    with pytest.raises(ValueError):
        dirichlet_solve(p, [], np.zeros(m.n_vertices), np.zeros(m.n_vertices))


def test_restrict():
    p = assemble(make_disk(4))
    idx = np.array([0, 3, 5])
    r = p.restrict(idx)
    assert_allclose(r.stiffness.toarray(), p.stiffness.toarray()[np.ix_(idx, idx)])
    assert_allclose(r.mass, p.mass[idx])


def test_matrix_market_round_trip(tmp_path):
    p = assemble(make_icosphere(1))
    s_path, m_path = export_matrix_market(p, tmp_path / "pencil")
    S = scipy.io.mmread(str(s_path)).tocsr()
    M = scipy.io.mmread(str(m_path)).tocsr()
    assert abs(S - p.stiffness).max() == 0.0
    assert_allclose(M.diagonal(), p.mass, rtol=0, atol=0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.integers(0, 2 ** 31 - 1))
def test_sup_norms_homogeneous(c, seed):
    m = make_icosphere(1)
    v = np.random.default_rng(seed).standard_normal(m.n_vertices)
    assert_allclose(sup_norm(c * v), abs(c) * sup_norm(v), rtol=1e-14)
    assert_allclose(grad_sup_norm(gradient(m, c * v)), abs(c) * grad_sup_norm(gradient(m, v)), rtol=1e-13)
