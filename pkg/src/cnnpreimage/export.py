"""Scene export: canonical JSON plus derived OBJ and SVG views."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UnsupportedProjection
from .polyhedra import AffinePiece

SCHEMA_VERSION = 1
KINDS = ("point", "segment", "polygon", "ray")
DIGITS = 12

ROLE_STYLE = {
    "plane": dict(stroke="#555555", fill="none", width=1.0, dash="4,3"),
    "preimage": dict(stroke="#b2182b", fill="#ef8a62", width=1.2, opacity=0.35),
    "manifold-piece": dict(stroke="#2166ac", fill="#67a9cf", width=1.0, opacity=0.35),
    "flow-line": dict(stroke="#1b7837", fill="none", width=1.0),
    "dual-basis": dict(stroke="#762a83", fill="none", width=1.5),
    "target": dict(stroke="#000000", fill="#000000", width=1.0),
}


@dataclass
class Element:
    kind: str
    coords: list          # list of points, each a list of d floats
    role: str
    layer: int = 0
    piece: int = -1

    def to_dict(self):
        return {"kind": self.kind, "coords": self.coords, "role": self.role,
                "layer": self.layer, "piece": self.piece}


@dataclass
class GeometryExport:
    name: str
    dimension: int
    scene_box: tuple = (0.0, 2.0)
    elements: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, kind, points, role, layer=0, piece=-1):
        if kind not in KINDS:
            raise ValueError(f"unknown element kind {kind!r}")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo, hi = self.scene_box
        pts = np.clip(pts, lo, hi)  # removes rounding overshoot only; callers clip geometry
        coords = [[_num(v) for v in p] for p in pts]
        self.elements.append(Element(kind, coords, role, int(layer), int(piece)))

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "dimension": self.dimension,
            "scene_box": [float(v) for v in self.scene_box],
            "elements": [e.to_dict() for e in self.elements],
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, data) -> "GeometryExport":
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported export schema {data.get('schema')!r}")
        g = cls(data["name"], int(data["dimension"]), tuple(data["scene_box"]), [], data.get("summary", {}))
        for e in data["elements"]:
            g.elements.append(Element(e["kind"], e["coords"], e["role"], e["layer"], e["piece"]))
        return g

    def count(self, kind=None, role=None) -> int:
        return sum(1 for e in self.elements
                   if (kind is None or e.kind == kind) and (role is None or e.role == role))


def _num(v):
    v = round(float(v), DIGITS)
    return 0.0 if v == 0 else v


def dumps(g: GeometryExport) -> str:
    return json.dumps(g.to_dict(), sort_keys=True, indent=1) + "\n"


def export_json(g: GeometryExport, path) -> Path:
    path = Path(path)
    path.write_text(dumps(g))
    return path


def load_json(path) -> GeometryExport:
    return GeometryExport.from_dict(json.loads(Path(path).read_text()))


# ---- adding geometry -------------------------------------------------------

def add_piece(g: GeometryExport, piece: AffinePiece, role: str, layer: int = 0, piece_id: int = -1) -> int:
    """Add the part of ``piece`` inside the scene box; returns the number of elements added."""
    R = g.scene_box[1]
    before = len(g.elements)
    if piece.dim == 0:
        x = piece.base
        if np.all(x >= -1e-9) and np.all(x <= R + 1e-9):
            g.add("point", [x], role, layer, piece_id)
    elif piece.dim == 1:
        seg = piece.segment(R)
        if seg.shape[0] == 2:
            g.add("segment", seg, role, layer, piece_id)
    elif piece.dim == 2:
        poly = piece.polygon(R)
        if poly.shape[0] >= 3:
            g.add("polygon", poly, role, layer, piece_id)
    elif piece.dim == 3:
        for facet in piece.facets(R):
            g.add("polygon", facet, role, layer, piece_id)
    else:
        # higher-dimensional pieces are represented by an interior point
        x = piece.interior_point()
        if np.all(x >= 0) and np.all(x <= R):
            g.add("point", [x], role, layer, piece_id)
    return len(g.elements) - before


def add_plane(g: GeometryExport, normal, offset, layer: int = 0, index: int = -1) -> None:
    """Hyperplane ``normal . x + offset = 0`` clipped to the scene box (d = 2 or 3)."""
    normal = np.asarray(normal, dtype=float)
    base = -offset * normal / (normal @ normal)
    _, _, vt = np.linalg.svd(normal[None, :])
    dirs = vt[1:]
    piece = AffinePiece.build(base, dirs)
    if piece is not None and piece.dim <= 2:
        add_piece(g, piece, "plane", layer, index)


def add_ray(g: GeometryExport, origin, direction, role="dual-basis", layer=0, piece_id=-1) -> None:
    """Segment from ``origin`` along ``direction`` until it leaves the scene box."""
    lo, hi = g.scene_box
    o = np.asarray(origin, dtype=float)
    v = np.asarray(direction, dtype=float)
    if np.any(o < lo - 1e-9) or np.any(o > hi + 1e-9):
        return
    with np.errstate(divide="ignore"):
        t = np.where(v > 0, (hi - o) / v, np.where(v < 0, (lo - o) / v, np.inf))
    t_exit = float(np.min(t))
    if np.isfinite(t_exit) and t_exit > 0:
        g.add("ray", [o, o + t_exit * v], role, layer, piece_id)


# ---- derived views -----------------------------------------------------------

def export_obj(g: GeometryExport, path) -> Path:
    """Wavefront OBJ: polygons as faces, segments and rays as lines, points as points."""
    if g.dimension not in (2, 3):
        raise UnsupportedProjection("OBJ export needs a 2-D or 3-D scene")
    lines = [f"# {g.name}", f"# scene box {list(g.scene_box)}"]
    n = 0
    for i, e in enumerate(g.elements):
        lines.append(f"g {e.role}_l{e.layer}_p{e.piece}_{i}")
        for p in e.coords:
            xyz = list(p) + [0.0] * (3 - len(p))
            lines.append("v {} {} {}".format(*(repr(float(v)) for v in xyz)))
        ids = " ".join(str(n + j + 1) for j in range(len(e.coords)))
        n += len(e.coords)
        lines.append({"polygon": "f", "segment": "l", "ray": "l", "point": "p"}[e.kind] + " " + ids)
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def projection_matrix(d: int, projection: str) -> np.ndarray:
    """2 x d matrix for ``"identity"`` (plane orthogonal to the identity line) or ``"i,j"`` axes."""
    if projection == "identity":
        if d < 3:
            raise UnsupportedProjection("the identity-orthogonal view needs d >= 3")
        ones = np.ones((d, 1)) / np.sqrt(d)
        Q, _ = np.linalg.qr(np.hstack([ones, np.eye(d)[:, :2]]))
        return Q[:, 1:3].T
    try:
        i, j = (int(t) for t in projection.split(","))
    except ValueError:
        raise UnsupportedProjection(f"unknown projection {projection!r}") from None
    if not (0 <= i < d and 0 <= j < d and i != j):
        raise UnsupportedProjection(f"axes {projection!r} invalid for d={d}")
    P = np.zeros((2, d))
    P[0, i] = P[1, j] = 1.0
    return P


def export_svg(g: GeometryExport, path, projection: str = "0,1", size: int = 480) -> Path:
    P = projection_matrix(g.dimension, projection)
    lo, hi = g.scene_box
    corners = np.array(np.meshgrid(*([[lo, hi]] * g.dimension))).reshape(g.dimension, -1).T @ P.T
    cmin, cmax = corners.min(axis=0), corners.max(axis=0)
    margin = 20
    scale = (size - 2 * margin) / max(np.max(cmax - cmin), 1e-12)

    def xy(p):
        q = P @ np.asarray(p)
        return margin + (q[0] - cmin[0]) * scale, size - margin - (q[1] - cmin[1]) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">', f"<title>{g.name}</title>"]
    order = {"polygon": 0, "segment": 1, "ray": 2, "point": 3}
    for e in sorted(g.elements, key=lambda e: order[e.kind]):
        st = ROLE_STYLE.get(e.role, ROLE_STYLE["plane"])
        pts = [xy(p) for p in e.coords]
        attrs = f'stroke="{st["stroke"]}" stroke-width="{st["width"]}"'
        if "dash" in st:
            attrs += f' stroke-dasharray="{st["dash"]}"'
        if e.kind == "polygon":
            path_pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(f'<polygon points="{path_pts}" fill="{st["fill"]}" '
                       f'fill-opacity="{st.get("opacity", 0.3)}" {attrs}/>')
        elif e.kind in ("segment", "ray"):
            (x1, y1), (x2, y2) = pts[0], pts[-1]
            out.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" {attrs}/>')
        else:
            for x, y in pts:
                out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.5" fill="{st["stroke"]}"/>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
