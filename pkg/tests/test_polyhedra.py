import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cnnpreimage import AffinePiece, AffineSubspace, LayerMap, build_dual_basis
from cnnpreimage.polyhedra import attach_span, remapped_face


def test_unconstrained_plane():
    p = AffinePiece.build([0, 0, 1], [[2, 0, 0], [1, 1, 0]])
    assert p.dim == 2 and p.A.shape == (0, 2)
    np.testing.assert_allclose(p.spanning @ p.spanning.T, np.eye(2), atol=1e-12)
    assert p.contains([5, -3, 1]) and not p.contains([0, 0, 1.1])


def test_empty_and_degenerate_constraints():
    # t <= -1 and t >= 0
    assert AffinePiece.build([0, 0], [[1, 0]], [[1], [-1]], [-1, 0]) is None
    # t <= 0 and t >= 0 collapses to a point
    p = AffinePiece.build([0.3, 0.4], [[1, 0]], [[1], [-1]], [0, 0])
    assert p.dim == 0
    np.testing.assert_allclose(p.base, [0.3, 0.4])
    # inconsistent equality
    assert AffinePiece.build([0, 0], [[1, 0], [2, 0.0 + 1e-3]], A_eq=[[1, 0], [1, 0]], b_eq=[0, 1]) is None


def test_dependent_vectors_rejected():
    with pytest.raises(ValueError):
        AffinePiece.build([0, 0], [[1, 0], [2, 0]])


def test_orthant_triangle():
    M = AffineSubspace([1 / 3] * 3, [[1, -1, 0], [1, 0, -1]])
    p = AffinePiece.from_subspace(M)
    assert p.dim == 2 and p.A.shape[0] == 3
    poly = p.polygon(2.0)
    assert poly.shape == (3, 3)
    np.testing.assert_allclose(np.sort(poly, axis=0), np.sort(np.eye(3), axis=0), atol=1e-12)
    bounds = p.bounds()
    assert np.all(np.isfinite(bounds))
    assert AffinePiece.from_subspace(AffineSubspace([-1, -1, -1], M.directions)) is None


def test_segment_and_facets():
    ray = AffinePiece.build([0.5, 0.5], [[1, 1]], [[-1]], [0])
    seg = ray.segment(2.0)
    np.testing.assert_allclose(seg[np.argsort(seg[:, 0])], [[0.5, 0.5], [2, 2]], atol=1e-12)
    assert np.isinf(ray.bounds()).sum() == 1
    cube = AffinePiece.build([0, 0, 0], np.eye(3))
    facets = cube.facets(1.0)
    assert len(facets) == 6 and all(f.shape == (4, 3) for f in facets)
    with pytest.raises(ValueError):
        cube.polygon(1.0)


def test_sample_inside_piece_and_box():
    p = AffinePiece.from_subspace(AffineSubspace([1 / 3] * 3, [[1, -1, 0], [1, 0, -1]]))
    X = p.sample(200, np.random.default_rng(0), radius=2.0)
    assert X.shape == (200, 3)
    assert np.all(p.contains_batch(X))
    assert np.all(X >= 0) and np.all(X <= 2.0)
    far = AffinePiece.build([5, 5], [[1, 0]], [[1]], [1])
    assert far.sample(10, np.random.default_rng(0), radius=2.0).shape == (0, 2)


def test_signature_and_meta():
    p = AffinePiece.build([0, 0, 0], np.eye(3)[:1], zero_idx=(1,), tag="x")
    assert [int(s) for s in p.signature] == [1, -1, 1]
    q = p.with_zero_idx((0, 2), extra=1)
    assert q.zero_idx == (0, 2) and q.meta == {"tag": "x", "extra": 1}


def test_remap_and_attach_identity():
    layer = LayerMap(np.eye(2), [-0.5, -0.5])
    B = build_dual_basis(layer)
    # output line y2 = 0.3
    piece = AffinePiece.from_subspace(AffineSubspace([0, 0.3], [[1, 0]]))
    face = remapped_face(piece, np.linalg.inv(layer.weights), layer.bias, (0,))
    assert face.dim == 0
    np.testing.assert_allclose(face.base, [0.5, 0.8])
    child = attach_span(face, B.vectors, (0,))
    seg = child.segment(2.0)
    np.testing.assert_allclose(seg[np.argsort(seg[:, 0])], [[0, 0.8], [0.5, 0.8]], atol=1e-12)
    assert remapped_face(piece, np.linalg.inv(layer.weights), layer.bias, (1,)) is None


@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_random_pieces_canonical(seed, d):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, d + 1))
    m = int(rng.integers(0, 2 * k + 1))
    base = rng.uniform(0, 1, d)
    V = rng.normal(size=(k, d))
    A = rng.normal(size=(m, k))
    c = rng.uniform(0.1, 1.0, m)  # t = 0 is strictly feasible
    p = AffinePiece.build(base, V, A, c)
    assert p is not None and p.dim == k
    np.testing.assert_allclose(p.spanning @ p.spanning.T, np.eye(k), atol=1e-10)
    assert p.contains(base) and p.contains(p.interior_point())
    # original parametrisation and canonical form describe the same set
    T = rng.normal(size=(200, k))
    X = base + T @ V
    inside = np.all(T @ A.T <= c + 1e-12, axis=1) if m else np.ones(200, bool)
    clear = np.all(np.abs(T @ A.T - c) > 1e-7, axis=1) if m else np.ones(200, bool)
    assert np.array_equal(p.contains_batch(X[clear], 1e-9), inside[clear])
