"""The single-layer map ``y = max(0, W x + b)`` and its hyperplane arrangement."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import get_tolerances
from .errors import DimensionMismatch
from .geometry import MAX_DIM, MIN_DIM, Hyperplane, Sign, as_vec


class OrthantWarning(UserWarning):
    """An input point lies outside the non-negative orthant."""


@dataclass(frozen=True, eq=False)
class LayerMap:
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise DimensionMismatch(f"weights must be square, got shape {W.shape}")
        if not MIN_DIM <= W.shape[0] <= MAX_DIM:
            raise DimensionMismatch(f"dimension {W.shape[0]} outside [{MIN_DIM}, {MAX_DIM}]")
        if not np.all(np.isfinite(W)):
            raise ValueError("weights have non-finite entries")
        b = np.array(as_vec(self.bias, W.shape[0], name="bias"))
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "bias", b)

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    @cached_property
    def planes(self) -> tuple:
        return tuple(Hyperplane(w, b) for w, b in zip(self.weights, self.bias))

    def affine(self, x) -> np.ndarray:
        """Pre-activation ``W x + b``; accepts a single point or an (n, d) batch."""
        return np.asarray(x) @ self.weights.T + self.bias

    def __repr__(self):
        return f"LayerMap(d={self.d}, weights={self.weights.tolist()}, bias={self.bias.tolist()})"


@dataclass(frozen=True, eq=False)
class OutputPattern:
    values: np.ndarray
    positive_idx: tuple
    zero_idx: tuple


def output_pattern(y, tol: float | None = None) -> OutputPattern:
    """Split an output into its positive and zero components."""
    tol = get_tolerances().sign_tol if tol is None else tol
    y = as_vec(y, name="y")
    if np.any(y < -tol):
        raise ValueError("ReLU outputs must be non-negative")
    pos = tuple(int(j) for j in np.flatnonzero(y > tol))
    zero = tuple(int(i) for i in np.flatnonzero(y <= tol))
    return OutputPattern(y, pos, zero)


def forward(layer: LayerMap, x) -> np.ndarray:
    x = as_vec(x, name="x")
    if x.shape[0] != layer.d:
        raise DimensionMismatch(f"input has length {x.shape[0]}, layer expects {layer.d}")
    if np.any(x < 0):
        warnings.warn("input outside the non-negative orthant", OrthantWarning, stacklevel=2)
    return np.maximum(layer.affine(x), 0.0)


def cell_signature(layer: LayerMap, x, tol: float | None = None) -> tuple:
    tol = get_tolerances().sign_tol if tol is None else tol
    x = as_vec(x, layer.d)
    return _signs(layer.affine(x), tol)


def _signs(values, tol):
    return tuple(Sign.PLUS if v > tol else Sign.MINUS if v < -tol else Sign.ZERO for v in values)


def enumerate_cells(layer: LayerMap, box_radius: float = 2.0, resolution: float = 0.05,
                    tol: float | None = None) -> set:
    """Sign patterns realised by grid points of ``[0, box_radius]^d``.

    Zero entries are counted as Minus, so the result lists open cells; it can
    never hold more than ``2^d`` patterns.
    """
    tol = get_tolerances().sign_tol if tol is None else tol
    d = layer.d
    axis = np.arange(0.0, box_radius + 0.5 * resolution, resolution)
    n = axis.size
    # evaluate in chunks along the leading axes to keep memory bounded
    lead = max(0, d - 4)
    tail_grid = np.stack(np.meshgrid(*([axis] * (d - lead)), indexing="ij"), -1).reshape(-1, d - lead)
    found = set()
    for head in itertools.product(range(n), repeat=lead):
        pts = np.hstack([np.broadcast_to(axis[list(head)], (tail_grid.shape[0], lead)), tail_grid])
        plus = layer.affine(pts) > tol
        codes = np.unique(np.packbits(plus, axis=1, bitorder="little"), axis=0)
        for code in codes:
            bits = np.unpackbits(code, bitorder="little")[:d]
            found.add(tuple(Sign.PLUS if bit else Sign.MINUS for bit in bits))
    return found
