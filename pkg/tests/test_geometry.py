import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from eigengrad import fem
from eigengrad.geometry import (BallTooSmallError, MeshError, TriangleMesh, extract_ball, graph_distance,
                                make_disk, make_embedded_torus, make_flat_torus, make_icosphere, read_off,
                                write_off)


@pytest.mark.parametrize("s", [0, 1, 2, 3])
def test_icosphere_counts(s):
    m = make_icosphere(s)
    assert m.n_vertices == 10 * 4 ** s + 2
    assert m.n_triangles == 20 * 4 ** s
    assert m.euler_characteristic() == 2
    assert m.is_closed
    assert_allclose(np.linalg.norm(m.positions, axis=1), 1.0, atol=1e-14)
    m.validate()


def test_icosphere_outward_orientation():
    m = make_icosphere(2)
    c = m.corners()
    n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    assert np.all(np.einsum("ij,ij->i", n, c.mean(axis=1)) > 0)


def test_icosphere_area_converges():
    # inscribed polyhedron: area approaches 4 pi from below
    a3, a4 = make_icosphere(3).total_area(), make_icosphere(4).total_area()
    assert a3 < a4 < 4 * np.pi
    assert abs(a4 - 4 * np.pi) < 0.01 * 4 * np.pi


def test_icosphere_limit():
    with pytest.raises(ValueError):
        make_icosphere(9)


@pytest.mark.parametrize("n", [2, 3, 8, 17])
def test_flat_torus_topology(n):
    m = make_flat_torus(n)
    assert m.n_vertices == n * n
    assert m.n_triangles == 2 * n * n
    assert len(m.edges) == 3 * n * n
    assert m.euler_characteristic() == 0
    assert m.is_closed
    assert_allclose(m.total_area(), (2 * np.pi) ** 2, rtol=1e-13)
    m.validate()


def test_flat_torus_edge_lengths():
    n = 12
    h = 2 * np.pi / n
    m = make_flat_torus(n)
    L = np.sort(np.unique(np.round(m.edge_lengths, 12)))
    assert_allclose(L, [h, math.sqrt(2) * h])
    assert_allclose(m.max_edge_length(), math.sqrt(2) * h)


def test_edge_point_midpoint_wraps():
    m = make_flat_torus(4)
    p = m.edge_point(np.arange(len(m.edges)), np.full(len(m.edges), 0.5))
    assert np.all(p[:, :2] >= 0) and np.all(p[:, :2] < 2 * np.pi)
    assert_allclose(p[:, 2], 0.0)


def test_embedded_torus():
    R, r = 3.0, 1.0
    m = make_embedded_torus(R, r, 96, 48)
    assert m.euler_characteristic() == 0
    assert m.is_closed
    assert_allclose(m.total_area(), 4 * np.pi ** 2 * R * r, rtol=2e-3)
    m.validate()


def test_disk():
    m = make_disk(12)
    assert m.euler_characteristic() == 1
    b = m.boundary_vertices
    assert_allclose(np.linalg.norm(m.positions[b, :2], axis=1), 1.0, atol=1e-14)
    inner = np.setdiff1d(np.arange(m.n_vertices), b)
    assert np.all(np.linalg.norm(m.positions[inner, :2], axis=1) < 1.0)
    assert_allclose(m.total_area(), np.pi, rtol=0.01)
    m.validate()


def test_mesh_errors():
    with pytest.raises(MeshError):
        TriangleMesh(np.zeros((3, 3)), [[0, 1, 3]])
    with pytest.raises(MeshError):
        TriangleMesh(np.zeros((3, 2)), [[0, 1, 2]])
    pos = [[0, 0, 0], [1, 0, 0], [2, 0, 0]]
    with pytest.raises(MeshError):
        TriangleMesh(pos, [[0, 1, 2]]).validate()
    # two triangles with the same orientation on a shared edge
    pos = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]]
    with pytest.raises(MeshError):
        TriangleMesh(pos, [[0, 1, 2], [1, 2, 3]]).validate()


def test_graph_distance_axis_exact():
    n = 16
    h = 2 * np.pi / n
    m = make_flat_torus(n)
    d = graph_distance(m, 0).distance
    # vertex id = i + n*j along the first axis; the torus wraps at n/2
    row = d[:n]
    expected = h * np.minimum(np.arange(n), n - np.arange(n))
    assert_allclose(row, expected, atol=1e-12)


def test_graph_distance_edge_point_source():
    m = make_flat_torus(8)
    e = 5
    lo, hi = m.edges[e]
    L = m.edge_lengths[e]
    f = graph_distance(m, edge_points=[[e, 0.25]])
    assert_allclose(f.distance[lo], 0.25 * L)
    assert_allclose(f.distance[hi], 0.75 * L)
    with pytest.raises(ValueError):
        graph_distance(m)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 99), st.integers(0, 99), st.integers(0, 99))
def test_graph_distance_metric(a, b, c):
    m = make_icosphere(2)
    a, b, c = a % m.n_vertices, b % m.n_vertices, c % m.n_vertices
    da, db = graph_distance(m, a).distance, graph_distance(m, b).distance
    assert_allclose(da[b], db[a], rtol=1e-14)
    assert da[c] <= da[b] + db[c] + 1e-12
    # graph paths are never shorter than chords
    assert da[b] >= np.linalg.norm(m.positions[a] - m.positions[b]) - 1e-12


def test_extract_ball():
    m = make_flat_torus(64)
    ball = extract_ball(m, 0, 1.0)
    assert 0 in ball.interior_vertices
    assert np.all(ball.distance[ball.vertices] <= 1.0 + 1e-12)
    assert set(ball.interior_vertices) | set(ball.boundary_vertices) == set(ball.vertices)
    assert ball.layers() >= 3
    with pytest.raises(BallTooSmallError):
        extract_ball(m, 0, 0.5 * 2 * np.pi / 64)
    with pytest.raises(MeshError):
        extract_ball(m, 0, 10.0)


def test_disk_ball_excludes_parent_boundary():
    m = make_disk(10)
    b = m.boundary_vertices[0]
    nb = m.adjacency[b].indices
    center = [v for v in nb if v not in set(m.boundary_vertices)][0]
    ball = extract_ball(m, center, 0.4)
    assert not set(ball.interior_vertices) & set(m.boundary_vertices)


@pytest.mark.parametrize("maker", [lambda: make_flat_torus(5), lambda: make_icosphere(1), lambda: make_disk(3)])
def test_off_round_trip(tmp_path, maker):
    m = maker()
    write_off(m, tmp_path / "m.off")
    r = read_off(tmp_path / "m.off")
    assert_array_equal(r.positions, m.positions)
    assert_array_equal(r.triangles, m.triangles)
    assert r.mesh_id == m.mesh_id
    p, q = fem.assemble(m), fem.assemble(r)
    assert (p.stiffness != q.stiffness).nnz == 0
    assert_array_equal(p.mass, q.mass)


def test_read_off_rejects(tmp_path):
    (tmp_path / "bad.off").write_text("PLY\n")
    with pytest.raises(MeshError):
        read_off(tmp_path / "bad.off")
    (tmp_path / "quad.off").write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    with pytest.raises(MeshError):
        read_off(tmp_path / "quad.off")
