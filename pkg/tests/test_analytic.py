import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from eigengrad.analytic import (DiskMode, OffManifoldError, SphereMode, TorusMode, lattice_shell, mode_from_dict,
                                random_sphere_mode, random_torus_mode, sup_norms, torus_eigenvalues)
from eigengrad.special import bessel_zero

FD_STEP = 1e-4


def central(f, h=FD_STEP):
    """Five-point central difference of ``t -> f(t)`` at 0."""
    return (8 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12 * h)


def _unit_points(rng, n):
    p = rng.standard_normal((n, 3))
    return p / np.linalg.norm(p, axis=1)[:, None]


def test_torus_eigenvalue_multiplicities():
    # [DERIVED] brute-force count of lattice points on each circle
    got = dict(torus_eigenvalues(50))
    pts = [(a, b) for a in range(-8, 9) for b in range(-8, 9)]
    for nsq in range(51):
        count = sum(1 for a, b in pts if a * a + b * b == nsq)
        assert got.get(nsq, 0) == count
    assert [m for _, m in torus_eigenvalues(5)] == [1, 4, 4, 4, 8]
    assert len(lattice_shell(25)) == 6


@pytest.mark.parametrize("nsq", [1, 2, 5, 25, 64])
def test_torus_mode_fd(nsq):
    rng = np.random.default_rng(nsq)
    mode = random_torus_mode(nsq, rng)
    assert_allclose(mode.lam, math.sqrt(nsq))
    x = rng.uniform(0, 2 * np.pi, (1000, 2))
    g = mode.eval_gradient(x)
    fd = np.column_stack([central(lambda t: mode.eval(x + t * e)) for e in np.eye(2)])
    assert np.abs(g - fd).max() <= 1e-6
    # five-point Laplacian equals -lambda^2 e up to O(step^2)
    s = 1e-3
    lap = sum(mode.eval(x + s * e) + mode.eval(x - s * e) for e in np.eye(2)) - 4 * mode.eval(x)
    assert_allclose(lap / s ** 2, -nsq * mode.eval(x), atol=1e-4 * nsq ** 2)


@pytest.mark.parametrize("degree", [1, 2, 5, 10])
def test_sphere_mode_fd(degree):
    rng = np.random.default_rng(degree)
    mode = random_sphere_mode(degree, rng)
    assert_allclose(mode.lam, math.sqrt(degree * (degree + 1)))
    p = _unit_points(rng, 1000)
    g = mode.eval_gradient(p)
    assert_allclose(np.einsum("ij,ij->i", g, p), 0.0, atol=1e-12)
    # directional derivatives along great circles through p
    t1 = np.cross(p, [0.3, -0.5, 0.8])
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(p, t1)
    for t in (t1, t2):
        fd = central(lambda s: mode.eval(np.cos(s) * p + np.sin(s) * t))
        assert np.abs(np.einsum("ij,ij->i", g, t) - fd).max() <= 1e-6


@pytest.mark.parametrize("m,k,kind", [(0, 1, "dirichlet"), (3, 2, "dirichlet"), (1, 1, "neumann"),
                                      (5, 3, "neumann")])
def test_disk_mode_fd(m, k, kind):
    mode = DiskMode(m, k, kind=kind)
    rng = np.random.default_rng(m + 10 * k)
    r = np.sqrt(rng.uniform(0.01, 0.98 ** 2, 1000))
    phi = rng.uniform(-np.pi, np.pi, 1000)
    x = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    g = mode.eval_gradient(x)
    fd = np.column_stack([central(lambda t: mode.eval(x + t * e)) for e in np.eye(2)])
    assert np.abs(g - fd).max() <= 1e-6
    s = 1e-3
    lap = sum(mode.eval(x + s * e) + mode.eval(x - s * e) for e in np.eye(2)) - 4 * mode.eval(x)
    assert_allclose(lap / s ** 2, -mode.lam ** 2 * mode.eval(x), atol=1e-4 * mode.lam ** 4)


def test_disk_boundary_conditions():
    phi = np.linspace(-np.pi, np.pi, 50)
    circle = np.column_stack([np.cos(phi), np.sin(phi)])
    d = DiskMode(0, 1)
    assert_allclose(d.lam, bessel_zero(0, 1))
    assert np.abs(d.eval(circle)).max() < 1e-10
    n = DiskMode(2, 3, kind="neumann", phase="sin")
    radial = np.einsum("ij,ij->i", n.eval_gradient(circle), circle)
    assert np.abs(radial).max() < 1e-10


def test_sphere_north_pole_value():
    y10 = SphereMode(1, [0.0, 1.0, 0.0])
    assert_allclose(y10.eval([[0.0, 0.0, 1.0]]), math.sqrt(3 / (4 * math.pi)), atol=1e-12)
    assert abs(y10.eval([[0.0, 0.0, 1.0]])[0] - 0.488603) < 1e-6


def test_off_manifold_points():
    with pytest.raises(OffManifoldError):
        SphereMode(1, [0, 1, 0]).eval([[0.0, 0.0, 1.1]])
    with pytest.raises(OffManifoldError):
        DiskMode(0, 1).eval([[1.0, 0.5]])


def test_mode_validation():
    with pytest.raises(ValueError):
        SphereMode(2, [1.0, 2.0])
    with pytest.raises(ValueError):
        DiskMode(0, 1, phase="sin")
    with pytest.raises(ValueError):
        DiskMode(0, 1, kind="robin")


@pytest.mark.parametrize("mode", [
    TorusMode([[1, 2]], [0.3], [0.7]),
    SphereMode(2, [0.1, -0.2, 0.3, 0.4, -0.5]),
    DiskMode(2, 1, kind="neumann", phase="sin"),
])
def test_json_round_trip(mode):
    back = mode_from_dict(mode.to_dict())
    assert back.to_dict() == mode.to_dict()
    assert_allclose(back.lam, mode.lam)


def test_sup_norms_exact_values():
    # [TRIVIAL] cos x and [DERIVED] cos x + cos y
    c = TorusMode([[1, 0]], [1.0], [0.0])
    assert_allclose(sup_norms(c), (1.0, 1.0), atol=1e-6)
    cc = TorusMode([[1, 0], [0, 1]], [1.0, 1.0], [0.0, 0.0])
    se, sg = sup_norms(cc)
    assert abs(se - 2.0) < 1e-4 and abs(sg - math.sqrt(2)) < 1e-4
    y10 = SphereMode(1, [0.0, 1.0, 0.0])
    se, sg = sup_norms(y10)
    assert_allclose((se, sg), math.sqrt(3 / (4 * math.pi)), atol=1e-8)
    assert abs(sg / (y10.lam * se) - 1 / math.sqrt(2)) < 1e-4


def test_sup_norms_disk_dirichlet_01():
    # [DERIVED] ratio = max |J_1| on [0, j_01], attained at s ~ 1.8412
    d = DiskMode(0, 1)
    se, sg = sup_norms(d)
    assert_allclose(se, 1.0, atol=1e-10)
    assert abs(sg / (d.lam * se) - 0.581865) < 1e-4


def test_sup_norms_sample_floor():
    with pytest.raises(ValueError):
        sup_norms(TorusMode([[1, 0]], [1.0], [0.0]), samples=999)


def test_sup_norms_deterministic():
    mode = random_sphere_mode(4, np.random.default_rng(1))
    assert sup_norms(mode, seed=5) == sup_norms(mode, seed=5)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.01, 100.0), st.booleans(), st.integers(1, 10))
def test_ratio_scale_invariance(c, negate, degree):
    c = -c if negate else c
    mode = random_sphere_mode(degree, np.random.default_rng(degree))
    se, sg = sup_norms(mode, samples=1024)
    se2, sg2 = sup_norms(mode.scaled(c), samples=1024)
    assert_allclose(sg2 / (mode.lam * se2), sg / (mode.lam * se), rtol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.01, 100.0), st.sampled_from([1, 2, 5, 13]))
def test_torus_ratio_scale_invariance(c, nsq):
    mode = random_torus_mode(nsq, np.random.default_rng(nsq))
    se, sg = sup_norms(mode, samples=1024)
    se2, sg2 = sup_norms(mode.scaled(-c), samples=1024)
    assert_allclose(sg2 / (mode.lam * se2), sg / (mode.lam * se), rtol=1e-12)
