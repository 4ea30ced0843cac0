import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cnnpreimage import (DimensionMismatch, Kernel, LayerMap, Sign, cell_signature, circulant_layer,
                         enumerate_cells, forward, output_pattern)
from cnnpreimage.layer import OrthantWarning

from conftest import layers

P, M, Z = Sign.PLUS, Sign.MINUS, Sign.ZERO


def shifted_identity(d, b=-0.5):
    return LayerMap(np.eye(d), np.full(d, b))


def test_forward_identity():
    np.testing.assert_allclose(forward(shifted_identity(2), [1, 0.2]), [0.5, 0])


def test_forward_apex_is_zero():
    layer = circulant_layer(Kernel((0.7, 0.2, 0.1), -0.4), 3)
    np.testing.assert_allclose(forward(layer, np.full(3, 0.4)), 0, atol=1e-15)


def test_forward_matches_scalar_loop(rng):
    W, b, x = rng.normal(size=(4, 4)), rng.normal(size=4), rng.uniform(0, 2, 4)
    naive = [max(0.0, sum(W[j, k] * x[k] for k in range(4)) + b[j]) for j in range(4)]
    np.testing.assert_allclose(forward(LayerMap(W, b), x), naive, atol=1e-14)


def test_forward_errors_and_warning():
    layer = shifted_identity(2)
    with pytest.raises(DimensionMismatch):
        forward(layer, [1, 2, 3])
    with pytest.warns(OrthantWarning):
        forward(layer, [-1, 2])
    with pytest.raises(DimensionMismatch):
        LayerMap(np.ones((2, 3)), [0, 0])


def test_output_pattern():
    p = output_pattern([0.0, 0.3, 0.0])
    assert p.positive_idx == (1,) and p.zero_idx == (0, 2)
    with pytest.raises(ValueError):
        output_pattern([-0.1, 0.2])


def test_cell_signature():
    layer = shifted_identity(2)
    assert cell_signature(layer, [1, 0.2]) == (P, M)
    assert cell_signature(layer, [0.5, 1.0])[0] == Z


def test_signature_plus_set_is_forward_support(rng):
    layer = LayerMap(rng.normal(size=(3, 3)), rng.normal(size=3))
    X = rng.uniform(0, 2, size=(10_000, 3))
    Y = np.maximum(layer.affine(X), 0)
    for x, y in zip(X, Y):
        sig = cell_signature(layer, x)
        assert {i for i, s in enumerate(sig) if s == P} == set(np.flatnonzero(y > 1e-9))


def test_cell_counts():
    assert len(enumerate_cells(shifted_identity(2), 2.0, 0.05)) == 4
    assert len(enumerate_cells(circulant_layer(Kernel((1, 0, 0), -0.5), 3), 2.0, 0.05)) == 8


# ---- properties -------------------------------------------------------------

@given(layers(max_d=6), st.integers(0, 1000))
def test_forward_non_negative(layer, seed):
    X = np.random.default_rng(seed).normal(size=(50, layer.d)) * 3
    assert np.all(np.maximum(layer.affine(X), 0) >= 0)


@given(layers(max_d=5), st.integers(0, 1000))
def test_piecewise_linear_on_common_cell(layer, seed):
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(0, 2, layer.d)
    x2 = x1 + rng.normal(scale=0.05, size=layer.d)
    ts = np.linspace(0, 1, 21)[:, None]
    seg = x1 + ts * (x2 - x1)
    signs = np.sign(layer.affine(seg))
    if np.any(signs == 0) or not np.all(signs == signs[0]):
        return
    f = lambda x: np.maximum(layer.affine(x), 0)  # noqa: E731
    assert np.max(np.abs(f((x1 + x2) / 2) - (f(x1) + f(x2)) / 2)) < 1e-9


@given(layers(max_d=4))
def test_cell_bound(layer):
    assert len(enumerate_cells(layer, 2.0, 0.1)) <= 2 ** layer.d
