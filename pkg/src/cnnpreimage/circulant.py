"""Circulant layers, their polyhedral cone and nesting/contraction diagnostics.

A single-channel convolution is made square by cyclic wrap-around. All rows
of the resulting circulant matrix have the same sum ``a``, so with a shared
bias ``b`` the d planes meet on the identity line at ``(-b/a, ..., -b/a)``
and form a regular cone around that line.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .config import get_tolerances
from .dual_basis import build_dual_basis
from .errors import ApexAtInfinity, DimensionMismatch, NotCirculant
from .layer import LayerMap


@dataclass(frozen=True)
class Kernel:
    taps: tuple
    bias: float

    def __post_init__(self):
        taps = tuple(float(t) for t in self.taps)
        if not taps:
            raise ValueError("kernel needs at least one tap")
        if not all(np.isfinite(taps)) or not np.isfinite(self.bias):
            raise ValueError("kernel entries must be finite")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "bias", float(self.bias))


def circulant_layer(kernel: Kernel, d: int) -> LayerMap:
    """Square layer whose row ``i`` is the zero-padded kernel shifted ``i`` places to the right."""
    k = len(kernel.taps)
    if k > d:
        raise DimensionMismatch(f"kernel support {k} exceeds dimension {d}")
    row = np.zeros(d)
    row[:k] = kernel.taps
    W = np.array([np.roll(row, i) for i in range(d)])
    return LayerMap(W, np.full(d, kernel.bias))


def is_circulant(layer: LayerMap, tol: float = 1e-12) -> bool:
    W = layer.weights
    rows_ok = all(np.allclose(W[i], np.roll(W[0], i), atol=tol, rtol=0) for i in range(layer.d))
    return rows_ok and np.ptp(layer.bias) <= tol


def kernel_of(layer: LayerMap) -> Kernel:
    if not is_circulant(layer):
        raise NotCirculant("layer is not circulant")
    return Kernel(tuple(layer.weights[0]), float(layer.bias[0]))


@dataclass(frozen=True, eq=False)
class ConeDescriptor:
    apex: np.ndarray
    axis: np.ndarray
    half_angle: float
    row_sum: float
    rotation: np.ndarray = field(repr=False)

    @property
    def plane_angle(self) -> float:
        """Angle between each plane and the identity line (complement of ``half_angle``)."""
        return np.pi / 2 - self.half_angle


def cone_of(layer: LayerMap) -> ConeDescriptor:
    """Apex, axis and opening of the regular cone formed by a circulant layer.

    ``half_angle`` is the angle between each plane normal and the identity
    axis. ``rotation`` holds, per row, the angle between the normal's
    component orthogonal to the axis and that of the matching coordinate
    normal; it is zero for kernels concentrated on the centre tap.
    """
    tol = get_tolerances()
    if not is_circulant(layer):
        raise NotCirculant("cone analysis needs a circulant layer")
    d = layer.d
    a = math.fsum(layer.weights[0])
    if abs(a) < tol.eps_rank:
        raise ApexAtInfinity("row sum is zero; planes are parallel to the identity line")
    b = float(layer.bias[0])
    apex = np.full(d, -b / a)
    axis = np.ones(d) / np.sqrt(d)
    W = layer.weights
    cosines = (W @ axis) / np.linalg.norm(W, axis=1)
    angles = np.arccos(np.clip(cosines, -1.0, 1.0))
    if np.ptp(angles) > 1e-9:
        raise NotCirculant("plane-to-axis angles differ; cone is not regular")
    perp = W - np.outer(W @ axis, axis)
    ref = np.eye(d) - np.outer(axis, axis)
    rotation = np.zeros(d)
    for i in range(d):
        n1, n2 = np.linalg.norm(perp[i]), np.linalg.norm(ref[i])
        if n1 > tol.eps_rank:
            rotation[i] = np.arccos(np.clip(perp[i] @ ref[i] / (n1 * n2), -1.0, 1.0))
    return ConeDescriptor(apex, axis, float(angles[0]), a, rotation)


def check_shift_equivariance(layer: LayerMap, trials: int = 100, seed: int = 0) -> float:
    """Largest ``|f(P x) - P f(x)|`` over random inputs, ``P`` the single cyclic shift."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 2.0, size=(trials, layer.d))
    shifted_in = np.maximum(layer.affine(np.roll(X, 1, axis=1)), 0.0)
    shifted_out = np.roll(np.maximum(layer.affine(X), 0.0), 1, axis=1)
    return float(np.max(np.abs(shifted_in - shifted_out)))


@dataclass
class NestingViolation:
    subset: tuple
    witness: np.ndarray       # point on M_subset whose positive span fails
    face_point: np.ndarray    # matching point on the coordinate face
    coefficients: np.ndarray  # span coefficients, at least one negative


@dataclass
class NestingReport:
    fully_nested: bool
    violated_subsets: list
    checked_subsets: int
    radius: float
    # per subset: number of failing samples out of the number checked
    per_subset: dict = field(default_factory=dict)


def _box_vertices(k: int, radius: float) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0))
    return radius * np.array(list(itertools.product((0.0, 1.0), repeat=k)))


def check_nesting(layer: LayerMap, samples_per_subset: int = 64, seed: int = 0,
                  radius: float = 2.0, tol: float = 1e-9) -> NestingReport:
    """Sampled test that the layer cone is completely nested in the coordinate cone.

    For every nonempty subset ``I`` the points ``z`` of the coordinate face
    ``{z_I = 0, 0 <= z_k <= radius}`` are written as ``x + sum_{i in I} alpha_i e_i``
    with ``x`` on the plane intersection ``M_I``. The subset passes when every
    sampled ``alpha`` is non-negative, i.e. the positive span of ``e_I`` from
    ``M_I`` reaches the whole face. Box vertices are always included; since
    ``alpha`` is affine in ``z`` the verdict is exact on the box.
    """
    d = layer.d
    if d > 12:
        raise DimensionMismatch("nesting check enumerates 2^d subsets; d must be <= 12")
    basis = build_dual_basis(layer)
    rng = np.random.default_rng(seed)
    violated = []
    per_subset = {}
    checked = 0
    for size in range(1, d + 1):
        for subset in itertools.combinations(range(d), size):
            rest = [k for k in range(d) if k not in subset]
            free = np.vstack([_box_vertices(len(rest), radius),
                              rng.uniform(0.0, radius, size=(samples_per_subset, len(rest)))])
            Z = np.zeros((free.shape[0], d))
            Z[:, rest] = free
            coeffs = np.linalg.solve(basis.vectors.T, (Z - basis.apex).T).T
            alpha = coeffs[:, list(subset)]
            # violations measured in output units, like preimage membership
            bad = np.flatnonzero(np.min(alpha * np.abs(basis.scales[list(subset)]), axis=1) < -tol)
            per_subset[subset] = (int(bad.size), int(free.shape[0]))
            checked += 1
            if bad.size:
                j = bad[0]
                x = Z[j] - alpha[j] @ basis.vectors[list(subset)]
                violated.append(NestingViolation(subset, x, Z[j], alpha[j]))
    return NestingReport(not violated, violated, checked, radius, per_subset)


@dataclass
class ContractionReport:
    violations: list          # (input zero set, output zero set, witness point)
    transitions: dict         # (input zero set, output zero set) -> count
    points_checked: int

    @property
    def ok(self) -> bool:
        return not self.violations


def _grid_points(d: int, radius: float, max_points: int) -> np.ndarray:
    n = max(2, int(np.floor(max_points ** (1.0 / d))))
    axis = np.linspace(0.0, radius, n)
    return np.stack(np.meshgrid(*([axis] * d), indexing="ij"), -1).reshape(-1, d)


def check_contraction(layer: LayerMap, seed: int = 0, radius: float = 2.0,
                      max_grid_points: int = 200_000, face_samples: int = 32,
                      tol: float | None = None) -> ContractionReport:
    """Look for inputs whose output lies on a higher-dimensional intersection subspace.

    An input on the coordinate face with zero set ``Z_in`` sits on a subspace
    of dimension ``d - |Z_in|``; its output sits on ``d - |Z_out|``. Points
    come from a grid over ``[0, radius]^d`` (faces included) plus random
    samples on every coordinate face.
    """
    tol = get_tolerances().sign_tol if tol is None else tol
    d = layer.d
    if d > 8:
        raise DimensionMismatch("contraction sweep is limited to d <= 8")
    rng = np.random.default_rng(seed)
    pts = [_grid_points(d, radius, max_grid_points)]
    for size in range(1, d + 1):
        for subset in itertools.combinations(range(d), size):
            face = rng.uniform(0.0, radius, size=(face_samples, d))
            face[:, list(subset)] = 0.0
            pts.append(face)
    X = np.vstack(pts)
    Y = np.maximum(layer.affine(X), 0.0)
    zin = X <= tol
    zout = Y <= tol
    transitions = {}
    keys_in = np.packbits(zin, axis=1, bitorder="little")
    keys_out = np.packbits(zout, axis=1, bitorder="little")
    keys = np.hstack([keys_in, keys_out])
    uniq, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    violations = []
    for idx, cnt in zip(first, counts):
        zi = tuple(int(k) for k in np.flatnonzero(zin[idx]))
        zo = tuple(int(k) for k in np.flatnonzero(zout[idx]))
        transitions[(zi, zo)] = int(cnt)
        if len(zo) < len(zi):
            violations.append((zi, zo, X[idx].copy()))
    return ContractionReport(violations, transitions, X.shape[0])
