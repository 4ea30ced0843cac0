"""Dual basis of a layer's hyperplane arrangement and exact single-layer preimages.

For an invertible layer the d planes ``w_i . x + b_i = 0`` meet in one point,
the apex. Dropping plane ``i`` leaves a line through the apex; its unit
direction, oriented towards the negative side of plane ``i``, is the dual
vector ``e_i``. The preimage of an output ``y`` is then

    x* + sum_{i : y_i = 0} alpha_i e_i,   alpha_i >= 0,

restricted to the non-negative orthant, where ``x*`` is the unique point on
the translated planes of the positive components and on the planes of the
zero components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .config import get_tolerances
from .errors import EmptyIntersection, EmptyPreimage, NoSolution, SamplingExhausted, SingularArrangement
from .geometry import as_vec, intersect_planes
from .layer import LayerMap, output_pattern

MAX_DRAWS = 1_000_000
MIN_ACCEPTANCE = 1e-3


@dataclass(frozen=True, eq=False)
class DualBasis:
    apex: np.ndarray
    vectors: np.ndarray  # row i is e_i
    scales: np.ndarray   # w_i . e_i, strictly negative

    @property
    def d(self) -> int:
        return self.apex.shape[0]

    def coordinates(self, x) -> np.ndarray:
        """Coefficients ``c`` with ``x - apex = sum_i c_i e_i``."""
        return np.linalg.solve(self.vectors.T, np.asarray(x, dtype=float) - self.apex)


def build_dual_basis(layer: LayerMap) -> DualBasis:
    tol = get_tolerances()
    s = np.linalg.svd(layer.weights, compute_uv=False)
    if s[-1] <= tol.eps_rank * max(1.0, s[0]):
        raise SingularArrangement(f"weight matrix is singular (smallest singular value {s[-1]:.3g})")
    planes = layer.planes
    apex = intersect_planes(planes)
    if apex.dim != 0:
        raise SingularArrangement("planes do not meet in a single point")
    vectors = np.empty((layer.d, layer.d))
    for i in range(layer.d):
        line = intersect_planes(planes[:i] + planes[i + 1:])
        if line.dim != 1:
            raise SingularArrangement(f"planes other than {i} do not meet in a line")
        e = line.directions[0]
        if layer.weights[i] @ e > 0:
            e = -e
        vectors[i] = e
    scales = np.einsum("ij,ij->i", layer.weights, vectors)
    apex_pt = apex.base.copy()
    for a in (apex_pt, vectors, scales):
        a.setflags(write=False)
    return DualBasis(apex_pt, vectors, scales)


@dataclass(frozen=True, eq=False)
class PreimageSet:
    """``base + cone(generators)`` clipped to the non-negative orthant."""

    base: np.ndarray
    generators: np.ndarray  # rows, one per zero component
    zero_idx: tuple
    positive_idx: tuple
    y: np.ndarray
    basis: DualBasis

    @property
    def ambient_dim(self) -> int:
        return self.base.shape[0]

    @property
    def dim(self) -> int:
        return len(self.zero_idx)


def preimage(layer: LayerMap, y, basis: DualBasis | None = None) -> PreimageSet:
    """Exact preimage of ``y`` under ``layer``.

    Raises :class:`EmptyPreimage` when the cone misses the orthant.
    """
    y = as_vec(y, layer.d, name="y")
    pattern = output_pattern(y)
    basis = build_dual_basis(layer) if basis is None else basis
    planes = layer.planes
    constraints = [planes[j].translated(y[j]) for j in pattern.positive_idx]
    constraints += [planes[i] for i in pattern.zero_idx]
    try:
        point = intersect_planes(constraints)
    except EmptyIntersection as exc:
        raise NoSolution(str(exc)) from exc
    if point.dim != 0:
        raise NoSolution("constraint planes do not determine a unique point")
    base = point.base
    gens = basis.vectors[list(pattern.zero_idx)]
    if not _orthant_feasible(base, gens):
        raise EmptyPreimage(f"output {y.tolist()} has no preimage in the non-negative orthant")
    return PreimageSet(base, gens, pattern.zero_idx, pattern.positive_idx, y, basis)


def _orthant_feasible(base, gens) -> bool:
    tol = get_tolerances().membership_tol
    if gens.shape[0] == 0:
        return bool(np.all(base >= -tol))
    # find alpha >= 0 with base + gens^T alpha >= 0
    res = linprog(np.zeros(gens.shape[0]), A_ub=-gens.T, b_ub=base + tol,
                  bounds=[(0, None)] * gens.shape[0], method="highs")
    return res.status == 0


def preimage_contains(p: PreimageSet, x, tol: float | None = None) -> bool:
    """Membership test in dual coordinates.

    ``x - base`` is expanded in the full dual basis. Coefficients on the
    positive components must vanish and those on the zero components must be
    non-negative. Violations are measured in output units (coefficient times
    ``|w_i . e_i|``) so that ``tol`` has the same meaning as a forward residual.
    """
    x = as_vec(x, p.ambient_dim)
    return bool(preimage_contains_batch(p, x[None, :], tol)[0])


def preimage_contains_batch(p: PreimageSet, X, tol: float | None = None) -> np.ndarray:
    """Vectorised :func:`preimage_contains` over the rows of ``X``."""
    tol = get_tolerances().membership_tol if tol is None else tol
    X = np.atleast_2d(np.asarray(X, dtype=float))
    coeff = np.linalg.solve(p.basis.vectors.T, (X - p.base).T).T
    violation = coeff * np.abs(p.basis.scales)
    ok = np.all(X >= -tol, axis=1)
    pos, zero = list(p.positive_idx), list(p.zero_idx)
    if pos:
        ok &= np.max(np.abs(violation[:, pos]), axis=1) <= tol
    if zero:
        ok &= np.min(violation[:, zero], axis=1) >= -tol
    return ok


def _alpha_box(p: PreimageSet, radius: float) -> np.ndarray:
    """Bounding box ``(2, k)`` of the orthant-feasible coefficients inside ``[0, radius]^k``."""
    k = p.generators.shape[0]
    box = np.array([np.zeros(k), np.full(k, float(radius))])
    for i in range(k):
        for row, sign in ((0, 1.0), (1, -1.0)):
            c = np.zeros(k)
            c[i] = sign
            res = linprog(c, A_ub=-p.generators.T, b_ub=p.base, bounds=[(0, radius)] * k, method="highs")
            if res.status == 2:
                raise SamplingExhausted(f"no orthant-feasible coefficients within radius {radius}")
            if res.status == 0:
                box[row, i] = np.clip(sign * res.fun, 0.0, radius)
    return box


def sample_preimage(p: PreimageSet, n: int, seed: int = 0, radius: float = 1.0) -> np.ndarray:
    """``n`` points ``base + sum alpha_i e_i`` with ``alpha_i ~ U[0, radius]``, kept if in the orthant.

    The proposal box is first shrunk to the bounding box of the feasible
    coefficients, which leaves the accepted distribution unchanged.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    k = p.generators.shape[0]
    if k == 0:
        return np.tile(p.base, (n, 1))
    rng = np.random.default_rng(seed)
    lo, hi = _alpha_box(p, radius)
    accepted = []
    count = draws = 0
    batch = max(1024, 4 * n)
    while count < n:
        alpha = lo + rng.uniform(0.0, 1.0, size=(batch, k)) * (hi - lo)
        pts = p.base + alpha @ p.generators
        # tiny negative rounding on orthant faces is clipped, not rejected
        keep = np.maximum(pts[np.all(pts >= -1e-12, axis=1)], 0.0)
        accepted.append(keep)
        count += keep.shape[0]
        draws += batch
        if draws >= MAX_DRAWS and count < MIN_ACCEPTANCE * draws:
            raise SamplingExhausted(f"accepted {count} of {draws} draws")
    return np.vstack(accepted)[:n]
