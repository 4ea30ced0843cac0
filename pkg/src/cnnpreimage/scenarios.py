"""Scenario configs: JSON files that name a task, a layer stack and its parameters.

``run_scenario`` executes the task with the core modules and returns a
:class:`~cnnpreimage.export.GeometryExport` whose ``summary`` holds every
number the report prints, plus a ``checks`` block comparing results against
the config's expectations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from scipy.spatial import cKDTree

from .circulant import Kernel, check_contraction, check_nesting, circulant_layer, cone_of
from .config import Tolerances, use_tolerances
from .errors import ApexAtInfinity, ConfigError, NotCirculant
from .export import DIGITS, GeometryExport, add_piece, add_plane, add_ray
from .geometry import AffineSubspace
from .layer import LayerMap, enumerate_cells
from .manifold import continuity_error, pushforward_distance, trace_manifold
from .network import Network, activations, net_forward_batch, net_preimage

TASKS = ("preimage", "nesting", "contraction-flow", "manifold-trace", "cells")

_number = {"type": "number"}
_vector = {"type": "array", "items": _number, "minItems": 2}

SCHEMA = {
    "type": "object",
    "required": ["schema", "name", "task", "dimension", "layers"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": 1},
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "task": {"enum": list(TASKS)},
        "dimension": {"type": "integer", "minimum": 2, "maximum": 32},
        "seed": {"type": "integer", "minimum": 0},
        "layers": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {"type": "object", "required": ["taps", "bias"], "additionalProperties": False,
                     "properties": {"taps": {"type": "array", "items": _number, "minItems": 1},
                                    "bias": _number}},
                    {"type": "object", "required": ["weights", "bias"], "additionalProperties": False,
                     "properties": {"weights": {"type": "array", "items": _vector},
                                    "bias": {"oneOf": [_number, _vector]}}},
                ]
            },
        },
        "params": {"type": "object"},
        "scene_box": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0}
                           for k in ("eps_rank", "eps_solve", "membership_tol", "sign_tol")},
        },
        "export": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "formats": {"type": "array", "items": {"enum": ["json", "obj", "svg"]}},
                "projection": {"type": "string"},
            },
        },
        "expect": {"type": "object"},
    },
}


@dataclass
class ScenarioConfig:
    name: str
    task: str
    dimension: int
    layers: list
    params: dict = field(default_factory=dict)
    seed: int = 0
    scene_box: tuple = (0.0, 2.0)
    tolerances: dict = field(default_factory=dict)
    formats: tuple = ("json",)
    projection: str = "0,1"
    expect: dict = field(default_factory=dict)
    description: str = ""

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        try:
            jsonschema.validate(data, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{where}: {exc.message}") from None
        d = data["dimension"]
        layers = [_layer_from_spec(spec, d, i) for i, spec in enumerate(data["layers"])]
        lo, hi = data.get("scene_box", (0.0, 2.0))
        if not hi > lo:
            raise ConfigError("scene_box must satisfy lo < hi")
        export = data.get("export", {})
        return cls(
            name=data["name"],
            task=data["task"],
            dimension=d,
            layers=layers,
            params=dict(data.get("params", {})),
            seed=int(data.get("seed", 0)),
            scene_box=(float(lo), float(hi)),
            tolerances=dict(data.get("tolerances", {})),
            formats=tuple(export.get("formats", ("json",))),
            projection=export.get("projection", "0,1" if d == 2 else "identity"),
            expect=dict(data.get("expect", {})),
            description=data.get("description", ""),
        )

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    @property
    def network(self) -> Network:
        return Network(tuple(self.layers))


def _layer_from_spec(spec, d, index) -> LayerMap:
    try:
        if "taps" in spec:
            return circulant_layer(Kernel(tuple(spec["taps"]), spec["bias"]), d)
        W = np.array(spec["weights"], dtype=float)
        b = np.broadcast_to(np.asarray(spec["bias"], dtype=float), (d,))
        return LayerMap(W, b)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"layers/{index}: {exc}") from None


# ---- bundled scenarios -------------------------------------------------------

def bundled_names() -> list:
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled(name: str) -> ScenarioConfig:
    path = resources.files(__package__) / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"no bundled scenario {name!r}; available: {', '.join(bundled_names())}")
    return ScenarioConfig.from_dict(json.loads(path.read_text()))


# ---- running -----------------------------------------------------------------

def _r(v):
    """Round to ``DIGITS`` significant digits so tiny residuals survive in the summary."""
    v = float(f"{float(v):.{DIGITS}g}")
    return 0.0 if v == 0 else v


def _zs(Z) -> str:
    return "{" + ",".join(str(i) for i in Z) + "}"


def run_scenario(config: ScenarioConfig) -> tuple:
    """Run the configured task; returns ``(export, report_text)``.

    Config tolerances override the environment for the duration of the run.
    """
    unknown = set(config.tolerances) - set(Tolerances.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown tolerances: {sorted(unknown)}")
    g = GeometryExport(config.name, config.dimension, config.scene_box)
    with use_tolerances(**config.tolerances):
        runner = _RUNNERS[config.task]
        lines = runner(config, g)
    checks = _evaluate(config.expect, g.summary)
    g.summary["checks"] = checks
    g.summary["passed"] = all(c["ok"] for c in checks.values())
    head = [f"scenario {config.name} ({config.task}, d={config.dimension}, "
            f"{len(config.layers)} layer{'s' if len(config.layers) != 1 else ''}, seed {config.seed})"]
    tail = [f"check {k}: {'ok' if c['ok'] else 'FAILED'} (got {c['value']}, want {c['want']})"
            for k, c in checks.items()]
    tail.append(f"elements exported: {len(g.elements)}")
    return g, "\n".join(head + lines + tail) + "\n"


def _evaluate(expect, summary) -> dict:
    """``expect`` maps summary keys to a value, or to ``{"<": bound}`` / ``{">": bound}``."""
    out = {}
    for key, want in sorted(expect.items()):
        value = summary.get(key)
        if isinstance(want, dict) and set(want) <= {"<", ">"}:
            ok = value is not None and all(value < b if op == "<" else value > b for op, b in want.items())
        else:
            ok = value == want
        out[key] = {"value": value, "want": want, "ok": bool(ok)}
    return out


def _add_arrangement(g, layer, index):
    if g.dimension > 3:
        return
    for i, (w, b) in enumerate(zip(layer.weights, layer.bias)):
        add_plane(g, w, b, layer=index, index=i)


def _residual(net, pieces, target_of, rng, n, radius, start=0):
    """Largest ``|f(x) - target|`` over ``n`` samples of each piece, ``f`` the layers from ``start``."""
    worst = 0.0
    sub = Network(net.layers[start:])
    for i, piece in enumerate(pieces):
        X = piece.sample(n, rng, radius)
        if X.shape[0]:
            worst = max(worst, float(np.max(np.linalg.norm(net_forward_batch(sub, X) - target_of(i), axis=1))))
    return worst


def _run_preimage(config, g):
    net = config.network
    p = config.params
    y = np.asarray(p.get("y", np.zeros(config.dimension)), dtype=float)
    n = int(p.get("samples", 100))
    radius = float(p.get("radius", config.scene_box[1]))
    rng = np.random.default_rng(config.seed)
    pre = net_preimage(net, y)
    for l, layer in enumerate(net.layers):
        _add_arrangement(g, layer, l)
    if net.depth == 1 and config.dimension <= 3:
        basis = net.bases[0]
        for i, e in enumerate(basis.vectors):
            add_ray(g, basis.apex, e, "dual-basis", 0, i)
    if config.dimension <= 3 and np.all(y <= config.scene_box[1]):
        g.add("point", [y], "target", net.depth, 0)
    worst = 0.0
    for l in range(net.depth):
        for i, piece in enumerate(pre.stages[l]):
            add_piece(g, piece, "preimage", l, i)
        worst = max(worst, _residual(net, pre.stages[l], lambda i: y, rng, n, radius, start=l))
    g.summary.update({
        "target": [_r(v) for v in y],
        "pieces_per_stage": [len(s) for s in pre.stages[:-1]],
        "input_piece_dims": [p.dim for p in pre.input_pieces],
        "max_residual": _r(worst),
    })
    return [
        f"target y = {g.summary['target']}",
        f"pieces per layer input: {g.summary['pieces_per_stage']}",
        f"input piece dimensions: {g.summary['input_piece_dims']}",
        f"max forward residual: {worst:.3e}",
    ]


def _layer_diagnostics(config, g, lines):
    nested, contraction_ok = [], []
    for l, layer in enumerate(config.layers):
        rep = check_nesting(layer, int(config.params.get("samples_per_subset", 64)), seed=config.seed)
        con = check_contraction(layer, seed=config.seed)
        nested.append(rep.fully_nested)
        contraction_ok.append(con.ok)
        bad = [_zs(v.subset) for v in rep.violated_subsets]
        lines.append(f"layer {l}: fully_nested = {str(rep.fully_nested).lower()}"
                     + (f" (violated subsets {' '.join(bad)})" if bad else "")
                     + f"; contraction violations = {len(con.violations)}")
        try:
            cone = cone_of(layer)
            lines.append(f"  cone apex {[_r(v) for v in cone.apex]}, "
                         f"half angle {np.degrees(cone.half_angle):.4f} deg")
        except (NotCirculant, ApexAtInfinity):
            pass
        if config.dimension <= 3:
            _add_arrangement(g, layer, l)
            basis = config.network.bases[l]
            for i, e in enumerate(basis.vectors):
                add_ray(g, basis.apex, e, "dual-basis", l, i)
    g.summary["fully_nested"] = nested
    g.summary["contraction_ok"] = contraction_ok
    g.summary["all_nested"] = all(nested)
    return nested


def _run_nesting(config, g):
    lines = []
    _layer_diagnostics(config, g, lines)
    g.summary["max_residual"] = 0.0  # no preimage samples are exported
    return lines


def _run_flow(config, g):
    lines = []
    _layer_diagnostics(config, g, lines)
    net = config.network
    p = config.params
    d = config.dimension
    rng = np.random.default_rng(config.seed)
    n = int(p.get("samples", 100))
    radius = float(p.get("radius", config.scene_box[1]))
    targets = np.asarray(p.get("targets", [np.zeros(d).tolist()]), dtype=float)
    worst = 0.0
    counts = []
    for t, y in enumerate(targets):
        pre = net_preimage(net, y)
        counts.append([len(s) for s in pre.stages[:-1]])
        for l in range(net.depth):
            for i, piece in enumerate(pre.stages[l]):
                # piece ids encode the target so that flows stay distinguishable
                add_piece(g, piece, "preimage", l, 1000 * t + i)
            worst = max(worst, _residual(net, pre.stages[l], lambda i: y, rng, n, radius, start=l))
        if d <= 3 and np.all(y <= config.scene_box[1]):
            g.add("point", [y], "target", net.depth, t)
    # trajectories of a coarse input grid
    lo, hi = config.scene_box
    steps = int(p.get("flow_grid", 5))
    axis = np.linspace(lo, hi, steps)
    X = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), -1).reshape(-1, d)
    monotone = True
    for k, x in enumerate(X):
        traj = activations(net, x)
        zeros = [int(np.sum(a <= 1e-12)) for a in traj]
        monotone &= all(z1 <= z2 for z1, z2 in zip(zeros, zeros[1:]))
        for l in range(net.depth):
            if np.linalg.norm(traj[l + 1] - traj[l]) > 1e-12:
                g.add("segment", [traj[l], traj[l + 1]], "flow-line", l, k)
    g.summary.update({
        "targets": [[_r(v) for v in y] for y in targets],
        "pieces_per_stage": counts,
        "max_residual": _r(worst),
        "sparsity_monotone": bool(monotone),
    })
    lines += [f"target {g.summary['targets'][t]}: pieces per layer input {c}" for t, c in enumerate(counts)]
    lines.append(f"zero count non-decreasing along {X.shape[0]} trajectories: {str(monotone).lower()}")
    lines.append(f"max forward residual: {worst:.3e}")
    return lines


def _manifold_from(params, d) -> AffineSubspace:
    m = params.get("manifold")
    if m is None:
        raise ConfigError("params/manifold is required for manifold-trace")
    if "normal" in m:
        normal = np.asarray(m["normal"], dtype=float)
        offset = float(m["offset"])
        base = offset * normal / (normal @ normal)
        _, _, vt = np.linalg.svd(normal[None, :])
        return AffineSubspace(base, vt[1:])
    return AffineSubspace(np.asarray(m["base"], dtype=float), np.asarray(m["directions"], dtype=float))


def _shifted(M: AffineSubspace, amount: float) -> AffineSubspace:
    normals = M.normals()
    if normals.shape[0] != 1:
        raise ConfigError("parallel_offset needs a hyperplane manifold")
    return AffineSubspace(M.base + amount * normals[0], M.directions)


def _run_trace(config, g):
    net = config.network
    p = config.params
    M = _manifold_from(p, config.dimension)
    radius = float(p.get("radius", 4.0))
    n = int(p.get("samples", 100))
    traced = trace_manifold(net, M)
    push = pushforward_distance(net, traced, M, n=n, seed=config.seed, radius=radius)
    cont = continuity_error(traced, n=20, seed=config.seed, radius=radius)
    for i, piece in enumerate(traced.pieces):
        add_piece(g, piece, "manifold-piece", 0, i)
    g.summary.update({
        "pieces": len(traced.pieces),
        "pieces_per_stage": [len(s) for s in traced.stages],
        "piece_dims": sorted(set(pc.dim for pc in traced.pieces)),
        "adjacent_pairs": len(traced.adjacency),
        "max_residual": _r(float(np.max(push, initial=0.0))),
        "max_continuity": _r(cont),
        "max_link_residual": _r(traced.max_link_residual),
    })
    lines = [
        f"manifold: dim {M.dim}, base {[_r(v) for v in M.base]}",
        f"pieces per stage (last layer first): {g.summary['pieces_per_stage']}",
        f"input pieces: {len(traced.pieces)}, dimensions {g.summary['piece_dims']}, "
        f"adjacent pairs {len(traced.adjacency)}",
        f"max pushforward distance: {g.summary['max_residual']:.3e}",
        f"max continuity error: {cont:.3e}",
        f"max linking-patch residual: {traced.max_link_residual:.3e}",
    ]
    if "parallel_offset" in p:
        M2 = _shifted(M, float(p["parallel_offset"]))
        other = trace_manifold(net, M2)
        push2 = pushforward_distance(net, other, M2, n=n, seed=config.seed, radius=radius)
        for i, piece in enumerate(other.pieces):
            add_piece(g, piece, "manifold-piece", 0, 1000 + i)
        sep = separation(traced, other, n=int(p.get("separation_samples", 200)),
                         seed=config.seed, radius=radius)
        g.summary["max_residual"] = _r(max(g.summary["max_residual"], float(np.max(push2, initial=0.0))))
        g.summary["min_separation"] = _r(sep)
        g.summary["shifted_pieces"] = len(other.pieces)
        lines.append(f"shifted manifold (offset {p['parallel_offset']}): {len(other.pieces)} pieces, "
                     f"min sampled distance {sep:.4f}")
    return lines


def separation(a, b, n: int = 200, seed: int = 0, radius: float = 4.0) -> float:
    """Minimum distance between point samples of two traced piece sets."""
    rng = np.random.default_rng(seed)

    def cloud(m):
        pts = [pc.sample(n, rng, radius) for pc in m.pieces]
        return np.vstack([q for q in pts if q.shape[0]])

    dist, _ = cKDTree(cloud(a)).query(cloud(b), k=1)
    return float(np.min(dist))


def _run_cells(config, g):
    lines = []
    res = float(config.params.get("resolution", 0.05))
    counts, contraction_ok, tables = [], [], []
    for l, layer in enumerate(config.layers):
        cells = sorted(enumerate_cells(layer, config.scene_box[1], res))
        counts.append(len(cells))
        con = check_contraction(layer, seed=config.seed)
        contraction_ok.append(con.ok)
        d = layer.d
        table = []
        lines.append(f"layer {l}: {len(cells)} cells (bound {2 ** d})")
        for pattern in cells:
            zeros = tuple(i for i, s in enumerate(pattern) if s < 0)
            key = "".join("+" if s > 0 else "-" for s in pattern)
            table.append({"pattern": key, "zero_set": list(zeros), "image_dim": d - len(zeros)})
            lines.append(f"  {key} -> output subspace {_zs(zeros)} of dimension {d - len(zeros)}")
        tables.append(table)
        lines.append(f"  contraction violations: {len(con.violations)}")
        _add_arrangement(g, layer, l)
    g.summary.update({
        "cells": counts[0] if len(counts) == 1 else counts,
        "cell_table": tables,
        "contraction_ok": all(contraction_ok),
        "max_residual": 0.0,
    })
    return lines


_RUNNERS = {
    "preimage": _run_preimage,
    "nesting": _run_nesting,
    "contraction-flow": _run_flow,
    "manifold-trace": _run_trace,
    "cells": _run_cells,
}
