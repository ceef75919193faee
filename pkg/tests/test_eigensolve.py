import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy import sparse

from eigengrad import analytic
from eigengrad.eigensolve import (BandIncompleteError, EigenSolveError, Spectrum, band_select, check_spectrum,
                                  cluster, load_spectrum, save_spectrum, solve_dense, solve_lowest)
from eigengrad.fem import SparsePencil, assemble
from eigengrad.geometry import make_disk, make_flat_torus, make_icosphere


@pytest.fixture(scope="module")
def disk_pencil():
    return assemble(make_disk(10))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_diagonal_pencil_oracle(seed):
    # [DERIVED] for diagonal S and M the eigenvalues are sorted s_i / m_i
    rng = np.random.default_rng(seed)
    n = 120
    s = rng.uniform(0.0, 50.0, n)
    m = rng.uniform(0.5, 2.0, n)
    p = SparsePencil(sparse.diags(s).tocsr(), m)
    spec = solve_lowest(p, 10, tol=1e-10, seed=seed)
    assert_allclose(spec.eigenvalues, np.sort(s / m)[:10], rtol=1e-9, atol=1e-9)


def test_sparse_matches_dense(disk_pencil):
    dense = solve_dense(disk_pencil)
    sp = solve_lowest(disk_pencil, 25, tol=1e-10)
    assert_allclose(sp.eigenvalues, dense.eigenvalues[:25], rtol=1e-9, atol=1e-12)
    check_spectrum(sp, disk_pencil)
    check_spectrum(dense, disk_pencil, tol=1e-10)


def test_sparse_vectors_span_dense(disk_pencil):
    dense = solve_dense(disk_pencil)
    sp = solve_lowest(disk_pencil, 12, tol=1e-10)
    M = disk_pencil.mass
    # projection of each sparse vector onto the matching dense eigenspace
    for j in range(12):
        near = np.flatnonzero(np.abs(dense.lambdas - sp.lambdas[j]) < 1e-6 * max(1, sp.lambdas[j]))
        c = dense.vectors[:, near].T @ (M * sp.vectors[:, j])
        assert_allclose(np.sum(c * c), 1.0, atol=1e-9)


def test_deterministic_and_sign_convention(disk_pencil):
    a = solve_lowest(disk_pencil, 8, seed=3)
    b = solve_lowest(disk_pencil, 8, seed=3)
    assert_array_equal(a.lambdas, b.lambdas)
    assert_array_equal(a.vectors, b.vectors)
    piv = np.argmax(np.abs(a.vectors), axis=0)
    assert np.all(a.vectors[piv, np.arange(8)] > 0)


def test_torus_lattice_eigenvalues():
    # [DERIVED] pencil eigenvalues of the 5-point stencil: (4/h^2)(sin^2(k1 h/2) + sin^2(k2 h/2))
    n = 24
    h = 2 * np.pi / n
    spec = solve_lowest(assemble(make_flat_torus(n)), 21, tol=1e-10)
    ks = [(a, b) for a in range(-3, 4) for b in range(-3, 4)]
    sym = sorted(4 / h ** 2 * (np.sin(a * h / 2) ** 2 + np.sin(b * h / 2) ** 2) for a, b in ks)
    assert_allclose(spec.eigenvalues, sym[:21], rtol=1e-9, atol=1e-10)


def test_argument_errors(disk_pencil):
    with pytest.raises(ValueError):
        solve_lowest(disk_pencil, 0)
    with pytest.raises(ValueError):
        solve_lowest(disk_pencil, disk_pencil.dimension)
    with pytest.raises(ValueError):
        solve_lowest(disk_pencil, 5, tol=1e-14)


def test_nonconvergence_reports_diagnostics(disk_pencil):
    with pytest.raises(EigenSolveError) as info:
        solve_lowest(disk_pencil, 10, max_iter=1)
    assert info.value.iterations == 1
    assert len(info.value.residuals) == 10


def test_dense_threshold_path(disk_pencil):
    spec = solve_lowest(disk_pencil, 6, dense_threshold=10 ** 6, seed=4, tol=1e-8)
    assert len(spec) == 6 and spec.seed == 4
    assert_allclose(spec.eigenvalues, solve_dense(disk_pencil).eigenvalues[:6])


def test_cluster_torus_multiplicities():
    spec = solve_dense(assemble(make_flat_torus(16)))
    sizes = [len(c) for c in cluster(spec)[:6]]
    expected = [mult for _, mult in analytic.torus_eigenvalues(9)][:6]
    assert sizes == expected
    singles = cluster(spec.truncate(20), cluster_tol=0.0)
    assert all(len(c) == 1 for c in singles)


def test_cluster_rejects_unsorted():
    spec = Spectrum(np.array([2.0, 1.0]), np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        cluster(spec)


def test_band_select():
    spec = Spectrum(np.array([0.0, 1.0, 1.5, 2.0, 2.5, 4.0]), np.zeros((3, 6)), np.zeros(6))
    assert_array_equal(band_select(spec, 1.0), [2, 3])
    assert_array_equal(band_select(spec, 2.9), [])
    with pytest.raises(BandIncompleteError):
        band_select(spec, 3.0)


def test_spectrum_round_trip(tmp_path, disk_pencil):
    spec = solve_lowest(disk_pencil, 7, tol=1e-10)
    save_spectrum(spec, tmp_path / "s.json")
    back = load_spectrum(tmp_path / "s.json", disk_pencil)
    assert_array_equal(back.lambdas, spec.lambdas)
    assert_array_equal(back.vectors, spec.vectors)
    assert back.mesh_ref == spec.mesh_ref and back.tol == spec.tol
    raw = (tmp_path / "s.json.bin").read_bytes()
    (tmp_path / "s.json.bin").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        load_spectrum(tmp_path / "s.json")


def test_check_spectrum_detects_bad_vectors(disk_pencil):
    spec = solve_lowest(disk_pencil, 5, tol=1e-10)
    bad = Spectrum(spec.lambdas, 2 * spec.vectors, spec.residuals, tol=spec.tol)
    with pytest.raises(ValueError):
        check_spectrum(bad, disk_pencil)


def test_dense_limit():
    with pytest.raises(ValueError):
        solve_dense(assemble(make_icosphere(5)))
