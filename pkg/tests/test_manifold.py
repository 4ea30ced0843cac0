import itertools
import time

import numpy as np
import pytest
from scipy.optimize import linprog

from cnnpreimage import (AffinePiece, AffineSubspace, EmptyIntersection, EmptyPreimage, Kernel, LayerMap,
                         Network, PieceBudgetExceeded, affine_intersect, backtrace_layer, build_dual_basis,
                         circulant_layer, continuity_error, intersect_manifold, pushforward_distance,
                         trace_manifold)
from cnnpreimage.network import net_forward_batch

from conftest import random_layer

FIG4 = [((1.0, -0.15, 0.1), -0.1), ((0.9, 0.1, -0.1), -0.05), ((1.1, -0.1, -0.05), -0.1)]
TRIANGLE = AffineSubspace([1 / 3] * 3, [[1, -1, 0], [1, 0, -1]])


@pytest.fixture(scope="module")
def fig4_net():
    return Network(tuple(circulant_layer(Kernel(t, b), 3) for t, b in FIG4))


@pytest.fixture(scope="module")
def fig4_trace(fig4_net):
    return trace_manifold(fig4_net, TRIANGLE)


def test_triangle_against_coordinate_planes():
    layer = LayerMap(np.eye(3), np.zeros(3))
    tagged = intersect_manifold(TRIANGLE, layer)
    dims = {}
    for Z, piece in tagged:
        dims.setdefault(len(Z), []).append(piece.dim)
    assert dims == {0: [2], 1: [1, 1, 1], 2: [0, 0, 0]}
    # enumeration order: by size, lexicographic within a size
    assert [Z for Z, _ in tagged] == sorted((Z for Z, _ in tagged), key=lambda Z: (len(Z), Z))
    vertices = sorted(tuple(np.round(p.base, 12)) for Z, p in tagged if len(Z) == 2)
    assert vertices == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_parallel_manifold_misses_plane():
    layer = LayerMap(np.eye(3), np.zeros(3))
    M = AffineSubspace([0.5, 0, 0], [[0, 1, 0], [0, 0, 1]])
    tagged = intersect_manifold(M, layer)
    assert tagged and all(0 not in Z for Z, _ in tagged)


def test_random_manifold_matches_brute_force(rng):
    d = 4
    layer = random_layer(rng, d)
    M = AffineSubspace(rng.uniform(0.2, 1.0, d), rng.normal(size=(d - 1, d)))
    got = {Z: p.dim for Z, p in intersect_manifold(M, layer)}
    expected = {}
    for size in range(d + 1):
        for Z in itertools.combinations(range(d), size):
            try:
                S = M if not Z else affine_intersect(M, AffineSubspace(np.zeros(d), np.delete(np.eye(d), Z, 0)))
            except EmptyIntersection:
                continue
            # non-empty part of the orthant, and its dimension from a strict-interior LP
            k = S.dim
            D = S.directions.T
            if k == 0:
                if np.all(S.base >= -1e-9):
                    expected[Z] = 0
                continue
            free = [i for i in range(d) if i not in Z]
            res = linprog(np.r_[np.zeros(k), -1.0], A_ub=np.hstack([-D[free], np.ones((len(free), 1))]),
                          b_ub=S.base[free], bounds=[(None, None)] * k + [(0, 1)], method="highs")
            if res.status != 0:
                continue
            expected[Z] = k if res.x[-1] > 1e-9 else -1
    expected = {Z: v for Z, v in expected.items() if v >= 0}
    assert got.keys() >= expected.keys()
    assert all(got[Z] == expected[Z] for Z in expected)


def test_backtrace_single_zero_gives_a_ray():
    layer = circulant_layer(Kernel((1.0, -0.1, 0.1), -0.2), 3)
    B = build_dual_basis(layer)
    y = np.array([0.3, 0.0, 0.2])
    tagged = intersect_manifold(AffinePiece.build(y, np.zeros((0, 3))), layer)
    # the bare point x* (pre-activation exactly y) and the ray from it
    assert [Z for Z, _ in tagged] == [(), (1,)]
    point, ray = backtrace_layer(tagged, layer, B)
    assert point.dim == 0 and ray.dim == 1
    assert ray.contains(point.base)
    assert abs(abs(ray.spanning[0] @ B.vectors[1]) - 1) < 1e-12
    X = ray.sample(50, np.random.default_rng(0))
    np.testing.assert_allclose(np.maximum(layer.affine(X), 0), np.tile(y, (50, 1)), atol=1e-8)


def test_backtrace_vertex_spans_a_patch(fig4_net):
    layer = fig4_net.layers[-1]
    vertex = AffinePiece.build([1.0, 0, 0], np.zeros((0, 3)))
    tagged = intersect_manifold(vertex, layer)
    assert [Z for Z, _ in tagged] == [(), (1,), (2,), (1, 2)]
    pieces = backtrace_layer(tagged, layer)
    assert [p.dim for p in pieces] == [0, 1, 1, 2]
    assert all(pieces[-1].contains(p.interior_point()) for p in pieces[:-1])


def test_backtraced_points_map_into_source(rng, fig4_net):
    layer = fig4_net.layers[0]
    src = AffinePiece.from_subspace(TRIANGLE)
    for piece in backtrace_layer(intersect_manifold(src, layer), layer):
        X = piece.sample(50, rng)
        if X.shape[0]:
            assert np.all(src.contains_batch(np.maximum(layer.affine(X), 0), 1e-8))


def test_identity_layer_trace():
    net = Network((LayerMap(np.eye(3), np.full(3, -0.5)),))
    M = AffineSubspace([0.4, 0, 0], [[0, 1, 0], [0, 0, 1]])
    traced = trace_manifold(net, M)
    # the quadrant x2, x3 >= 0.5 of the plane x1 = 0.9 plus extensions where x2 or x3 drop below 0.5
    assert len(traced.pieces) == 4 and {p.dim for p in traced.pieces} == {2}
    X = np.column_stack([np.full(500, 0.9), np.random.default_rng(0).uniform(0, 2, size=(500, 2))])
    covered = np.zeros(500, bool)
    for p in traced.pieces:
        covered |= p.contains_batch(X)
    assert covered.all()
    assert np.max(pushforward_distance(net, traced, M)) < 1e-12


def test_fig4_trace(fig4_net, fig4_trace):
    assert [len(s) for s in fig4_trace.stages] == [7, 13, 31]
    assert {p.dim for p in fig4_trace.pieces} == {2}
    assert len(fig4_trace.adjacency) == len(fig4_trace.boundaries) > 0
    assert np.max(pushforward_distance(fig4_net, fig4_trace, TRIANGLE, n=100)) < 1e-6
    assert continuity_error(fig4_trace, n=20) < 1e-9
    assert fig4_trace.max_link_residual < 1e-9
    for parent_count, stage in zip(fig4_trace.parents, fig4_trace.stages):
        assert len(parent_count) == len(stage)


def test_fig4_dimension_accounting(fig4_net):
    layer = fig4_net.layers[-1]
    for Z, face in intersect_manifold(TRIANGLE, layer):
        kids = backtrace_layer([(Z, face)], layer)
        for kid in kids:
            assert kid.dim == face.dim + len(Z)


def test_interior_points_keep_signature(rng, fig4_net, fig4_trace):
    # the pieces of the first stage feed the last layer with the recorded zero set
    layer = fig4_net.layers[-1]
    for piece in fig4_trace.stages[0]:
        pre = layer.affine(piece.interior_point())
        assert all((pre[i] <= 1e-9) == (i in piece.zero_idx) for i in range(3))


def test_trace_errors(fig4_net):
    far = AffineSubspace([-1.0, -1.0, -1.0], TRIANGLE.directions)
    with pytest.raises(EmptyPreimage):
        trace_manifold(fig4_net, far)
    with pytest.raises(PieceBudgetExceeded):
        trace_manifold(fig4_net, TRIANGLE, max_pieces=10)
    with pytest.raises(TypeError):
        intersect_manifold("plane", fig4_net.layers[0])


def test_parallel_manifolds_are_separated(fig4_net, fig4_trace):
    from cnnpreimage.scenarios import separation

    shifted = AffineSubspace(TRIANGLE.base + 0.2 * np.ones(3) / np.sqrt(3), TRIANGLE.directions)
    other = trace_manifold(fig4_net, shifted)
    assert separation(fig4_trace, other, n=100) > 1e-3


def test_fig4_runtime(fig4_net):
    t = time.perf_counter()
    trace_manifold(fig4_net, TRIANGLE)
    assert time.perf_counter() - t < 10
