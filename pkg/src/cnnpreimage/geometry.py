"""Small dense linear algebra: hyperplanes, affine subspaces and their intersections.

Points are plain 1-D numpy arrays. Affine subspaces keep an orthonormal set of
direction vectors so that two subspaces can be compared for equality.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import get_tolerances
from .errors import DegenerateInput, DimensionMismatch, EmptyIntersection

MIN_DIM = 2
MAX_DIM = 32


class Sign(enum.IntEnum):
    MINUS = -1
    ZERO = 0
    PLUS = 1

    def __str__(self):
        return {Sign.MINUS: "-", Sign.ZERO: "0", Sign.PLUS: "+"}[self]


SignPattern = tuple  # tuple[Sign, ...], one entry per hyperplane


def pattern_str(pattern: Sequence[Sign]) -> str:
    return "".join(str(s) for s in pattern)


def as_vec(x, d: int | None = None, name: str = "x") -> np.ndarray:
    """Validate ``x`` as a finite real vector, optionally of length ``d``."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {d}")
    if not MIN_DIM <= v.shape[0] <= MAX_DIM:
        raise DimensionMismatch(f"dimension {v.shape[0]} outside [{MIN_DIM}, {MAX_DIM}]")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """The plane ``normal . x + offset = 0``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = as_vec(self.normal, name="normal")
        if np.linalg.norm(n) <= get_tolerances().eps_rank:
            raise DegenerateInput("hyperplane normal is numerically zero")
        if not np.isfinite(self.offset):
            raise ValueError("hyperplane offset must be finite")
        object.__setattr__(self, "normal", _frozen(n))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def value(self, x) -> float:
        return float(self.normal @ x + self.offset)

    def negated(self) -> "Hyperplane":
        return Hyperplane(-self.normal, -self.offset)

    def translated(self, amount: float) -> "Hyperplane":
        """The plane ``normal . x + offset = amount``."""
        return Hyperplane(self.normal, self.offset - amount)


def orthonormal_rows(vectors, eps: float | None = None) -> np.ndarray:
    """Orthonormal basis (as rows) for the span of ``vectors``, rank-revealing."""
    eps = get_tolerances().eps_rank if eps is None else eps
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if V.size == 0:
        return np.zeros((0, V.shape[-1]))
    _, s, vt = np.linalg.svd(V, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, V.shape[1]))
    rank = int(np.sum(s > eps * max(1.0, s[0])))
    return vt[:rank]


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """``base + span(directions)``; directions are stored as orthonormal rows."""

    base: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        base = as_vec(self.base, name="base")
        dirs = np.asarray(self.directions, dtype=float)
        if dirs.size == 0:
            dirs = np.zeros((0, base.shape[0]))
        dirs = np.atleast_2d(dirs)
        if dirs.shape[1] != base.shape[0]:
            raise DimensionMismatch("directions do not match base dimension")
        gram = dirs @ dirs.T
        if not np.allclose(gram, np.eye(dirs.shape[0]), atol=1e-10, rtol=0):
            dirs = orthonormal_rows(dirs)
        object.__setattr__(self, "base", _frozen(base))
        object.__setattr__(self, "directions", _frozen(dirs))

    @classmethod
    def point(cls, p) -> "AffineSubspace":
        p = as_vec(p)
        return cls(p, np.zeros((0, p.shape[0])))

    @property
    def ambient_dim(self) -> int:
        return self.base.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[0]

    def project(self, x) -> np.ndarray:
        r = np.asarray(x, dtype=float) - self.base
        return self.base + (r @ self.directions.T) @ self.directions

    def distance(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.project(x)))

    def contains(self, x, tol: float = 1e-9) -> bool:
        return self.distance(x) <= tol

    def normals(self) -> np.ndarray:
        """Orthonormal rows spanning the orthogonal complement of the directions."""
        d = self.ambient_dim
        if self.dim == 0:
            return np.eye(d)
        _, _, vt = np.linalg.svd(self.directions, full_matrices=True)
        return vt[self.dim:]

    def same_as(self, other: "AffineSubspace", tol: float = 1e-9) -> bool:
        if self.ambient_dim != other.ambient_dim or self.dim != other.dim:
            return False
        if not self.contains(other.base, tol):
            return False
        # each direction of ``other`` must lie in our span
        resid = other.directions - (other.directions @ self.directions.T) @ self.directions
        return bool(np.all(np.linalg.norm(resid, axis=1) <= tol))


def _solve_stacked(N: np.ndarray, rhs: np.ndarray) -> AffineSubspace:
    """Solution set of ``N x = rhs`` as an affine subspace (minimum-norm base point)."""
    tol = get_tolerances()
    d = N.shape[1]
    if N.shape[0] == 0:
        return AffineSubspace(np.zeros(d), np.eye(d))
    u, s, vt = np.linalg.svd(N, full_matrices=True)
    rank = int(np.sum(s > tol.eps_rank * max(1.0, s[0])))
    coeff = (u[:, :rank].T @ rhs) / s[:rank]
    base = vt[:rank].T @ coeff
    resid = np.linalg.norm(N @ base - rhs) / max(1.0, np.linalg.norm(rhs))
    if resid > tol.eps_solve:
        raise EmptyIntersection(f"inconsistent system (relative residual {resid:.3g})")
    return AffineSubspace(base, vt[rank:])


def intersect_planes(planes: Sequence[Hyperplane]) -> AffineSubspace:
    """Common solution set of a family of hyperplanes.

    The dimension of the result is ``d - rank`` of the stacked normals.
    Raises :class:`EmptyIntersection` for inconsistent (e.g. parallel) planes.
    """
    planes = list(planes)
    if not planes:
        raise ValueError("need at least one plane")
    d = planes[0].dim
    if any(p.dim != d for p in planes):
        raise DimensionMismatch("planes live in different dimensions")
    N = np.array([p.normal for p in planes])
    rhs = -np.array([p.offset for p in planes])
    return _solve_stacked(N, rhs)


def side_of(plane: Hyperplane, x, tol: float | None = None) -> Sign:
    tol = get_tolerances().sign_tol if tol is None else tol
    x = as_vec(x, plane.dim)
    v = plane.value(x)
    if v > tol:
        return Sign.PLUS
    if v < -tol:
        return Sign.MINUS
    return Sign.ZERO


def affine_intersect(a: AffineSubspace, b: AffineSubspace) -> AffineSubspace:
    """Intersection of two affine subspaces, or :class:`EmptyIntersection`."""
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch("subspaces live in different dimensions")
    Na, Nb = a.normals(), b.normals()
    N = np.vstack([Na, Nb])
    rhs = np.concatenate([Na @ a.base, Nb @ b.base])
    return _solve_stacked(N, rhs)
