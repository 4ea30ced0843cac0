"""Stacks of equal-width ReLU layers and their layer-by-layer preimages."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dual_basis import build_dual_basis, preimage
from .errors import DimensionMismatch, EmptyPreimage, PieceBudgetExceeded
from .geometry import as_vec
from .layer import LayerMap
from .manifold import DEFAULT_PIECE_BUDGET, backtrace_layer, intersect_manifold
from .polyhedra import AffinePiece


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        if any(l.d != layers[0].d for l in layers):
            raise DimensionMismatch("all layers must have the same dimension")
        object.__setattr__(self, "layers", layers)

    @property
    def d(self) -> int:
        return self.layers[0].d

    @property
    def depth(self) -> int:
        return len(self.layers)

    @cached_property
    def bases(self) -> tuple:
        return tuple(build_dual_basis(l) for l in self.layers)


def net_forward(net: Network, x) -> np.ndarray:
    x = as_vec(x, name="x")
    if x.shape[0] != net.d:
        raise DimensionMismatch(f"input has length {x.shape[0]}, network expects {net.d}")
    for layer in net.layers:
        x = np.maximum(layer.affine(x), 0.0)
    return x


def net_forward_batch(net: Network, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    for layer in net.layers:
        X = np.maximum(layer.affine(X), 0.0)
    return X


def activations(net: Network, x) -> list:
    """Input followed by every layer output."""
    out = [as_vec(x)]
    for layer in net.layers:
        out.append(np.maximum(layer.affine(out[-1]), 0.0))
    return out


@dataclass
class LayeredPreimage:
    """Preimage pieces per layer input, ``stages[l]`` feeding layer ``l``.

    ``stages[L]`` holds the target output as a single point piece.
    ``parents[l][i]`` indexes the piece of ``stages[l + 1]`` that piece ``i``
    of ``stages[l]`` maps into.
    """

    stages: list
    parents: list
    y: np.ndarray

    @property
    def input_pieces(self) -> list:
        return self.stages[0]

    def contains(self, x, tol: float = 1e-9) -> bool:
        return any(p.contains(x, tol) for p in self.stages[0])

    def contains_batch(self, X, tol: float = 1e-9) -> np.ndarray:
        X = np.atleast_2d(X)
        hit = np.zeros(X.shape[0], bool)
        for p in self.stages[0]:
            hit |= p.contains_batch(X, tol)
        return hit


def _preimage_piece(layer, y, basis) -> AffinePiece:
    p = preimage(layer, y, basis)
    k = p.dim
    A = np.vstack([-np.eye(k), -p.generators.T])
    c = np.concatenate([np.zeros(k), p.base])
    piece = AffinePiece.build(p.base, p.generators, A, c, zero_idx=p.zero_idx)
    if piece is None:
        raise EmptyPreimage("preimage misses the non-negative orthant")
    return piece


def net_preimage(net: Network, y, max_pieces: int = DEFAULT_PIECE_BUDGET) -> LayeredPreimage:
    """Exact preimage of ``y`` as linked pieces, one list per layer input.

    The last layer uses the single-layer dual-basis preimage; every earlier
    layer cuts each piece by its zero constraints and widens the cuts by
    dual-vector spans.
    """
    y = as_vec(y, net.d, name="y")
    L = net.depth
    target = AffinePiece.build(y, np.zeros((0, net.d)))
    stages = [None] * (L + 1)
    parents = [None] * (L + 1)
    stages[L] = [target]
    parents[L] = [-1]
    stages[L - 1] = [_preimage_piece(net.layers[-1], y, net.bases[-1])]
    parents[L - 1] = [0]
    total = 1
    for l in range(L - 2, -1, -1):
        layer, basis = net.layers[l], net.bases[l]
        pieces, par = [], []
        for pi, piece in enumerate(stages[l + 1]):
            kids = backtrace_layer(intersect_manifold(piece, layer), layer, basis, check_links=False)
            pieces.extend(kids)
            par.extend([pi] * len(kids))
        total += len(pieces)
        if total > max_pieces:
            raise PieceBudgetExceeded(f"{total} pieces exceed the budget of {max_pieces}")
        if not pieces:
            raise EmptyPreimage(f"output {y.tolist()} is unreachable (no pieces at layer {l})")
        stages[l] = pieces
        parents[l] = par
    return LayeredPreimage(stages, parents, y)
