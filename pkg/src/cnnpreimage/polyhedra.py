"""Parametric polyhedral pieces ``{base + s @ spanning : A s <= c}``.

A piece is kept in canonical form: ``spanning`` has orthonormal rows, the
coefficient polyhedron is full-dimensional (implicit equalities have been
detected by linear programming and eliminated) and ``interior`` is a
relative-interior coefficient vector. Pieces may be unbounded; a scene box
is only applied when sampling or exporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .config import get_tolerances
from .geometry import AffineSubspace, Sign

SLACK_TOL = 1e-9


def _nullspace(A, eps):
    """Orthonormal columns spanning ``{u : A u = 0}``."""
    k = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(k)
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > eps * max(1.0, s[0] if s.size else 0.0)))
    return vt[rank:].T


def _solve_equalities(A_eq, b_eq):
    """Particular solution and null-space basis of ``A_eq t = b_eq``; ``None`` if inconsistent."""
    tol = get_tolerances()
    k = A_eq.shape[1]
    if A_eq.shape[0] == 0:
        return np.zeros(k), np.eye(k)
    t0, *_ = np.linalg.lstsq(A_eq, b_eq, rcond=None)
    resid = np.linalg.norm(A_eq @ t0 - b_eq) / max(1.0, np.linalg.norm(b_eq))
    if resid > tol.eps_solve:
        return None
    return t0, _nullspace(A_eq, tol.eps_rank)


def _normalize_rows(A, c):
    """Scale rows to unit norm; report constant rows that are violated."""
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 1e-12
    if np.any(c[~keep] < -SLACK_TOL):
        return None, None
    A, c = A[keep] / norms[keep, None], c[keep] / norms[keep]
    if A.shape[0] > 1:
        # drop exact duplicates
        key = np.round(np.hstack([A, c[:, None]]), 12)
        _, idx = np.unique(key, axis=0, return_index=True)
        idx.sort()
        A, c = A[idx], c[idx]
    return A, c


def _implicit_equalities(A, c):
    """Split rows into always-tight ones and the rest; returns (tight mask, interior point) or None.

    Repeatedly maximises the capped slack of rows not yet known to admit a
    strictly feasible point. Rows whose slack stays zero are implicit equalities.
    """
    m, k = A.shape
    if m == 0:
        return np.zeros(0, bool), np.zeros(k)
    open_rows = np.ones(m, bool)
    points = []
    while True:
        J = np.flatnonzero(open_rows)
        nj = J.size
        # variables: u (k, free), sigma (nj, in [0, 1])
        cost = np.concatenate([np.zeros(k), -np.ones(nj)])
        S = np.zeros((m, nj))
        S[J, np.arange(nj)] = 1.0
        res = linprog(cost, A_ub=np.hstack([A, S]), b_ub=c,
                      bounds=[(None, None)] * k + [(0.0, 1.0)] * nj, method="highs")
        if res.status == 2:
            return None
        if res.status != 0:
            raise RuntimeError(f"LP failed: {res.message}")
        u = res.x[:k]
        points.append(u)
        slack = c - A @ u
        newly = J[slack[J] > SLACK_TOL]
        if newly.size == 0:
            break
        open_rows[newly] = False
        if not open_rows.any():
            break
    # the mean of the LP solutions is strictly feasible for every non-tight row
    return open_rows, np.mean(points, axis=0)


@dataclass(frozen=True, eq=False)
class AffinePiece:
    base: np.ndarray
    spanning: np.ndarray     # (k, d) orthonormal rows
    A: np.ndarray            # (m, k) unit rows
    c: np.ndarray            # (m,)
    interior: np.ndarray     # (k,) relative-interior coefficients
    zero_idx: tuple = ()     # zero set of the layer this piece feeds
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def d(self) -> int:
        return self.base.shape[0]

    @property
    def dim(self) -> int:
        return self.spanning.shape[0]

    @property
    def signature(self) -> tuple:
        """Cell of the layer this piece feeds: Minus on the zero set, Plus elsewhere."""
        return tuple(Sign.MINUS if i in self.zero_idx else Sign.PLUS for i in range(self.d))

    @property
    def hull(self) -> AffineSubspace:
        return AffineSubspace(self.base, self.spanning)

    def point(self, s) -> np.ndarray:
        return self.base + np.asarray(s) @ self.spanning

    def interior_point(self) -> np.ndarray:
        return self.point(self.interior)

    def coefficients(self, X) -> np.ndarray:
        return (np.asarray(X) - self.base) @ self.spanning.T

    def contains(self, x, tol: float = 1e-9) -> bool:
        return bool(self.contains_batch(np.atleast_2d(x), tol)[0])

    def contains_batch(self, X, tol: float = 1e-9) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        S = self.coefficients(X)
        resid = np.linalg.norm(X - self.base - S @ self.spanning, axis=1)
        ok = resid <= tol
        if self.A.shape[0]:
            ok &= np.all(S @ self.A.T <= self.c + tol, axis=1)
        return ok

    def with_zero_idx(self, zero_idx, **meta) -> "AffinePiece":
        return AffinePiece(self.base, self.spanning, self.A, self.c, self.interior,
                           tuple(zero_idx), {**self.meta, **meta})

    # ---- construction -------------------------------------------------

    @classmethod
    def build(cls, base, vectors, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
              zero_idx=(), **meta) -> "AffinePiece | None":
        """Canonical piece for ``{base + t @ vectors : A_ub t <= b_ub, A_eq t = b_eq}``.

        ``vectors`` must have full row rank. Returns ``None`` for an empty set.
        """
        tol = get_tolerances()
        base = np.asarray(base, dtype=float)
        V = np.asarray(vectors, dtype=float).reshape(-1, base.shape[0])
        k = V.shape[0]
        c = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
        A = np.zeros((0, k)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(c.size, k)
        ce = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
        Ae = np.zeros((0, k)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(ce.size, k)

        sol = _solve_equalities(Ae, ce)
        if sol is None:
            return None
        t0, N = sol
        base = base + t0 @ V
        V = N.T @ V
        c = c - A @ t0
        A = A @ N
        A, c = _normalize_rows(A, c)
        if A is None:
            return None

        split = _implicit_equalities(A, c)
        if split is None:
            return None
        tight, u_int = split
        if tight.any():
            sol = _solve_equalities(A[tight], c[tight])
            if sol is None:
                return None
            u0, N2 = sol
            base = base + u0 @ V
            V = N2.T @ V
            u_int = (u_int - u0) @ N2
            c = c[~tight] - A[~tight] @ u0
            A = A[~tight] @ N2
            A, c = _normalize_rows(A, c)
            if A is None:
                return None

        # orthonormalise the spanning vectors
        if V.shape[0]:
            Q, R = np.linalg.qr(V.T)
            if np.min(np.abs(np.diag(R))) <= tol.eps_rank:
                raise ValueError("spanning vectors are linearly dependent")
            Rinv = np.linalg.inv(R)
            A = A @ Rinv
            s_int = R @ u_int
            spanning = Q.T
            A, c = _normalize_rows(A, c)
        else:
            spanning = np.zeros((0, base.shape[0]))
            s_int = np.zeros(0)
        return cls(base, spanning, A, c, s_int, tuple(zero_idx), dict(meta))

    @classmethod
    def from_subspace(cls, M: AffineSubspace, orthant: bool = True, **meta) -> "AffinePiece | None":
        """``M`` (optionally intersected with the non-negative orthant) as a piece."""
        D = M.directions
        if orthant:
            return cls.build(M.base, D, -D.T, M.base, **meta)
        return cls.build(M.base, D, **meta)

    # ---- box-limited queries -------------------------------------------

    def _boxed(self, radius):
        """Constraints of the piece intersected with ``[0, radius]^d`` (in coefficients)."""
        S = self.spanning.T
        A = np.vstack([self.A, -S, S])
        c = np.concatenate([self.c, self.base, radius - self.base])
        return A, c

    def chebyshev(self, radius: float):
        """Centre and radius of the largest ball inside the piece and box, or ``None``."""
        k = self.dim
        A, c = self._boxed(radius)
        if k == 0:
            return (np.zeros(0), 0.0) if np.all(c >= -SLACK_TOL) else None
        norms = np.linalg.norm(A, axis=1)
        keep = norms > 1e-12
        if np.any(c[~keep] < -SLACK_TOL):
            return None
        A, c, norms = A[keep], c[keep], norms[keep]
        cost = np.zeros(k + 1)
        cost[-1] = -1.0
        res = linprog(cost, A_ub=np.hstack([A, norms[:, None]]), b_ub=c,
                      bounds=[(None, None)] * k + [(0.0, None)], method="highs")
        if res.status != 0:
            return None
        return res.x[:k], float(res.x[-1])

    def sample(self, n: int, rng: np.random.Generator, radius: float = 4.0,
               burn_in: int = 40) -> np.ndarray:
        """Approximately uniform points of the piece inside ``[0, radius]^d``.

        Runs ``n`` independent hit-and-run chains from the Chebyshev centre.
        Returns an empty array when the piece misses the box.
        """
        start = self.chebyshev(radius)
        if start is None:
            return np.zeros((0, self.d))
        s0, _ = start
        k = self.dim
        if k == 0:
            return np.tile(self.base, (n, 1))
        A, c = self._boxed(radius)
        S = np.tile(s0, (n, 1))
        for _ in range(burn_in):
            u = rng.normal(size=(n, k))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            Au = u @ A.T                       # (n, m)
            slack = np.maximum(c - S @ A.T, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = slack / Au
            hi = np.min(np.where(Au > 1e-14, ratio, np.inf), axis=1)
            lo = np.max(np.where(Au < -1e-14, ratio, -np.inf), axis=1)
            hi = np.where(np.isfinite(hi), hi, 0.0)
            lo = np.where(np.isfinite(lo), lo, 0.0)
            lam = lo + (hi - lo) * rng.uniform(size=n)
            S = S + lam[:, None] * u
        X = self.point(S)
        # rounding can leave orthant-face points a hair below zero
        return np.where((X < 0.0) & (X > -1e-12), 0.0, X)

    def bounds(self) -> np.ndarray:
        """Interval box ``(k, 2)`` on the coefficients; ``inf`` marks unbounded directions."""
        k = self.dim
        out = np.full((k, 2), np.inf)
        out[:, 0] = -np.inf
        for i in range(k):
            for j, sign in enumerate((1.0, -1.0)):
                cost = np.zeros(k)
                cost[i] = sign
                res = linprog(cost, A_ub=self.A, b_ub=self.c, bounds=[(None, None)] * k, method="highs")
                if res.status == 0:
                    out[i, j] = sign * res.fun
        return out

    def polygon(self, radius: float) -> np.ndarray:
        """Vertices (in order) of a 2-D piece clipped to the box; empty if it misses the box."""
        if self.dim != 2:
            raise ValueError("polygon() needs a two-dimensional piece")
        A, c = self._boxed(radius)
        return self.point(_clip_polygon(A, c, bound=np.linalg.norm(self.base) + radius * np.sqrt(self.d) + 1.0))

    def segment(self, radius: float) -> np.ndarray:
        if self.dim != 1:
            raise ValueError("segment() needs a one-dimensional piece")
        A, c = self._boxed(radius)
        a = A[:, 0]
        if np.any((np.abs(a) <= 1e-14) & (c < -SLACK_TOL)):
            return np.zeros((0, self.d))
        with np.errstate(divide="ignore"):
            hi = np.min(np.where(a > 1e-14, c / a, np.inf))
            lo = np.max(np.where(a < -1e-14, c / a, -np.inf))
        if lo > hi + 1e-12:
            return np.zeros((0, self.d))
        return self.point(np.array([[lo], [hi]]))

    def facets(self, radius: float) -> list:
        """Boundary polygons of a 3-D piece clipped to the box."""
        if self.dim != 3:
            raise ValueError("facets() needs a three-dimensional piece")
        A, c = self._boxed(radius)
        bound = np.linalg.norm(self.base) + radius * np.sqrt(self.d) + 1.0
        out = []
        for j in range(A.shape[0]):
            a = A[j]
            na = np.linalg.norm(a)
            if na <= 1e-12:
                continue
            a, cj = a / na, c[j] / na
            basis = _nullspace(a[None, :], 1e-12)          # (3, 2)
            s0 = a * cj
            others = np.delete(np.arange(A.shape[0]), j)
            A2 = A[others] @ basis
            c2 = c[others] - A[others] @ s0
            poly = _clip_polygon(A2, c2, bound)
            if poly.shape[0] >= 3:
                out.append(self.point(s0 + poly @ basis.T))
        return out


def _clip_polygon(A, c, bound):
    """Vertices of ``{s in R^2 : A s <= c}`` inside a square of half-width ``bound``."""
    poly = [np.array(p, float) for p in ((-bound, -bound), (bound, -bound), (bound, bound), (-bound, bound))]
    for a, ci in zip(A, c):
        if not poly:
            break
        new = []
        for i, p in enumerate(poly):
            q = poly[(i + 1) % len(poly)]
            fp, fq = a @ p - ci, a @ q - ci
            if fp <= 0:
                new.append(p)
            if (fp < 0 < fq) or (fq < 0 < fp):
                t = fp / (fp - fq)
                new.append(p + t * (q - p))
        poly = new
    if len(poly) < 3:
        return np.zeros((0, 2))
    pts = np.array(poly)
    # merge near-duplicate vertices
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > 1e-12:
            keep.append(i)
    if len(keep) > 1 and np.linalg.norm(pts[keep[-1]] - pts[keep[0]]) <= 1e-12:
        keep.pop()
    pts = pts[keep]
    return pts if len(pts) >= 3 else np.zeros((0, 2))


# ---- layer pull-back primitives --------------------------------------------

def remapped_face(piece: AffinePiece, weights_inv, bias, zero_idx) -> "AffinePiece | None":
    """Points of ``piece`` (an output-space set) with ``y_Z = 0``, mapped to input space by
    ``x = W^{-1} (y - b)``. The result lies on the planes of the zero set."""
    Z = list(zero_idx)
    S = piece.spanning
    # y >= 0 is restated so that faces of unclipped inputs are still valid outputs
    A = np.vstack([piece.A, -S.T])
    c = np.concatenate([piece.c, piece.base])
    A_eq = S[:, Z].T
    b_eq = -piece.base[Z]
    base = weights_inv @ (piece.base - bias)
    vectors = S @ weights_inv.T
    return AffinePiece.build(base, vectors, A, c, A_eq, b_eq, zero_idx=tuple(zero_idx), **piece.meta)


def attach_span(face: AffinePiece, dual_vectors, zero_idx) -> "AffinePiece | None":
    """``face + cone(e_i : i in Z)`` clipped to the non-negative orthant."""
    Z = list(zero_idx)
    E = dual_vectors[Z]
    k, p = face.dim, len(Z)
    V = np.vstack([face.spanning, E])
    A = np.vstack([
        np.hstack([face.A, np.zeros((face.A.shape[0], p))]),
        np.hstack([np.zeros((p, k)), -np.eye(p)]),
        -V.T,
    ])
    c = np.concatenate([face.c, np.zeros(p), face.base])
    return AffinePiece.build(face.base, V, A, c, zero_idx=tuple(zero_idx), **face.meta)
