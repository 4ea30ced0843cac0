"""Piecewise-affine input manifolds that a network maps onto an affine output manifold.

Working backwards from the last layer, the current output-space set is cut
by every combination of output coordinate planes (equivalently, after
remapping by the affine inverse, by every intersection of the layer's
hyperplanes). Each cut is then widened by the positive span of the dual
vectors of its zero set. The widened pieces are the new output-space sets
for the preceding layer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dual_basis import DualBasis, build_dual_basis
from .errors import DimensionMismatch, EmptyPreimage, PieceBudgetExceeded
from .geometry import AffineSubspace
from .layer import LayerMap
from .polyhedra import AffinePiece, attach_span, remapped_face

DEFAULT_PIECE_BUDGET = 100_000
LINK_STATIONS = 33


def as_piece(M) -> AffinePiece:
    """Output-space set as a piece; affine subspaces are clipped to the orthant."""
    if isinstance(M, AffinePiece):
        return M
    if isinstance(M, AffineSubspace):
        piece = AffinePiece.from_subspace(M, orthant=True)
        if piece is None:
            raise EmptyPreimage("output manifold misses the non-negative orthant")
        return piece
    raise TypeError(f"expected AffineSubspace or AffinePiece, got {type(M).__name__}")


def intersect_manifold(M, layer: LayerMap) -> list:
    """Cut an output-space set by every subset of the layer's zero constraints.

    Returns ``(zero_set, piece)`` pairs in order of increasing subset size
    (lexicographic within a size), the empty subset first. Each piece is
    expressed in the layer's input space and lies on the planes of its zero
    set. Supersets of subsets with an empty cut are skipped, since an empty
    intersection stays empty when more planes are added.
    """
    piece = as_piece(M)
    if piece.d != layer.d:
        raise DimensionMismatch("manifold and layer dimensions differ")
    W_inv = np.linalg.inv(layer.weights)
    out = []
    empty = []
    for size in range(layer.d + 1):
        for Z in itertools.combinations(range(layer.d), size):
            if any(set(E) <= set(Z) for E in empty):
                continue
            face = remapped_face(piece, W_inv, layer.bias, Z)
            if face is None:
                empty.append(Z)
            else:
                out.append((Z, face))
    return out


def _link_residual(face: AffinePiece, piece: AffinePiece, E, radius: float = 4.0) -> float:
    """Sweep a 1-D seed family, grow rays from each station and fit their affine hull.

    Returns the largest distance of the swept points from the hull of the
    constructed piece; also compares hull dimensions.
    """
    seg = face.segment(radius)
    if seg.shape[0] < 2:
        return 0.0
    t = np.linspace(0.0, 1.0, LINK_STATIONS)[:, None]
    stations = seg[0] + t * (seg[1] - seg[0])
    steps = np.array([0.0, 0.5, 1.0])
    pts = (stations[:, None, None, :] + steps[None, :, None, None] * E[None, None, :, :]).reshape(-1, face.d)
    centred = pts - pts.mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    fitted_dim = int(np.sum(s > 1e-9 * max(1.0, s[0])))
    if fitted_dim != piece.dim:
        return np.inf
    return max(piece.hull.distance(p) for p in pts)


def backtrace_layer(pieces, layer: LayerMap, basis: DualBasis | None = None,
                    check_links: bool = True) -> list:
    """Widen each tagged cut by the positive span of its zero-set dual vectors.

    ``pieces`` is the output of :func:`intersect_manifold`. Empty results
    (spans that miss the orthant) are dropped. For one-dimensional seeds the
    linking patch is cross-checked by a station sweep and its residual stored
    in ``meta['link_residual']``.
    """
    basis = build_dual_basis(layer) if basis is None else basis
    out = []
    for Z, face in pieces:
        child = attach_span(face, basis.vectors, Z)
        if child is None:
            continue
        if check_links and face.dim == 1 and Z:
            res = _link_residual(face, child, basis.vectors[list(Z)])
            child = child.with_zero_idx(Z, link_residual=float(res))
        out.append(child)
    return out


@dataclass
class PiecewiseManifold:
    pieces: list
    adjacency: list                 # (i, j) index pairs
    boundaries: list                # shared boundary piece per adjacency pair
    stages: list = field(default_factory=list)    # pieces per layer input, last layer first
    parents: list = field(default_factory=list)   # parent index per piece per stage

    @property
    def max_link_residual(self) -> float:
        vals = [p.meta.get("link_residual", 0.0) for stage in self.stages for p in stage]
        return max(vals, default=0.0)


def _pull_back(current, current_adj, layer, basis, check_links=True):
    """One layer of the backwards recursion with adjacency bookkeeping."""
    new, parents, index, new_adj = [], [], {}, []
    for pi, piece in enumerate(current):
        tagged = intersect_manifold(piece, layer)
        faces = dict(tagged)
        for Z, face in tagged:
            kids = backtrace_layer([(Z, face)], layer, basis, check_links)
            if kids:
                index[(pi, Z)] = len(new)
                new.append(kids[0])
                parents.append(pi)
        # children of one parent that differ by a single zero index share a facet
        for Zp in faces:
            for k in Zp:
                Z = tuple(i for i in Zp if i != k)
                if (pi, Z) in index and (pi, Zp) in index:
                    shared = attach_span(faces[Zp], basis.vectors, Z)
                    if shared is not None:
                        new_adj.append((index[(pi, Z)], index[(pi, Zp)], shared))
    # adjacency between parents carries over to their children with equal zero set
    for p1, p2, B in current_adj:
        for Z, fB in intersect_manifold(B, layer):
            if (p1, Z) in index and (p2, Z) in index:
                shared = attach_span(fB, basis.vectors, Z)
                if shared is not None:
                    new_adj.append((index[(p1, Z)], index[(p2, Z)], shared))
    return new, parents, new_adj


def trace_manifold(net, M, max_pieces: int = DEFAULT_PIECE_BUDGET,
                   check_links: bool = True) -> PiecewiseManifold:
    """Input-space pieces whose image under ``net`` lies in the output manifold ``M``."""
    current = [as_piece(M)]
    adj = []
    stages, parents = [], []
    for layer, basis in zip(reversed(net.layers), reversed(net.bases)):
        current, par, adj = _pull_back(current, adj, layer, basis, check_links)
        if len(current) > max_pieces:
            raise PieceBudgetExceeded(f"{len(current)} pieces exceed the budget of {max_pieces}")
        if not current:
            raise EmptyPreimage("output manifold is not reachable from the input orthant")
        stages.append(current)
        parents.append(par)
    return PiecewiseManifold(current, [(i, j) for i, j, _ in adj], [b for *_, b in adj],
                             stages, parents)


def pushforward_distance(net, manifold: PiecewiseManifold, M: AffineSubspace, n: int = 100,
                         seed: int = 0, radius: float = 4.0) -> np.ndarray:
    """Largest distance from ``M`` of the images of ``n`` sampled points, per piece."""
    from .network import net_forward_batch

    rng = np.random.default_rng(seed)
    out = np.zeros(len(manifold.pieces))
    for i, piece in enumerate(manifold.pieces):
        X = piece.sample(n, rng, radius)
        if X.shape[0] == 0:
            continue
        Y = net_forward_batch(net, X)
        R = Y - M.base
        R = R - (R @ M.directions.T) @ M.directions
        out[i] = np.max(np.linalg.norm(R, axis=1))
    return out


def continuity_error(manifold: PiecewiseManifold, n: int = 20, seed: int = 0,
                     radius: float = 4.0) -> float:
    """Largest containment violation of shared-boundary samples in both adjacent pieces."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for (i, j), B in zip(manifold.adjacency, manifold.boundaries):
        X = B.sample(n, rng, radius)
        for piece in (manifold.pieces[i], manifold.pieces[j]):
            for x in X:
                worst = max(worst, _violation(piece, x))
    return worst


def _violation(piece: AffinePiece, x) -> float:
    s = piece.coefficients(x)
    off = np.linalg.norm(x - piece.point(s))
    over = float(np.max(piece.A @ s - piece.c, initial=0.0))
    return max(off, over)
