"""OBJ export/import of surfaces and canonical JSON reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import spaces as sp

CONFIG_PREFIX = "# config "


def _num(x: float) -> str:
    return "%.17g" % float(x)


def obj_text(surface, config: Optional[dict] = None, subdivide: int = 0) -> str:
    """Chart coordinates, 17 significant digits, 1-based face loops.

    With ``subdivide`` k > 0 each edge is also emitted as an ``l`` polyline
    through k interior geodesic samples, appended after the mesh vertices.
    """
    lines = [f"# space {surface.space.name.lower()}",
             f"# counts V={surface.V} E={surface.E} F={surface.F}"]
    if config:
        for key in sorted(config):
            lines.append(f"{CONFIG_PREFIX}{key} = {config[key]}")
    for x in surface.vertices:
        lines.append("v " + " ".join(_num(c) for c in x))
    for loop in surface.faces:
        lines.append("f " + " ".join(str(i + 1) for i in loop))
    if subdivide > 0:
        X = surface.model_vertices()
        nxt = surface.V + 1
        samples, polylines = [], []
        for (a, b) in sorted(surface.edge_faces()):
            d = float(sp.dist_model(surface.space, X[a], X[b]))
            ids = [a + 1]
            for k in range(1, subdivide + 1):
                Y = sp.geodesic_point(surface.space, X[a], X[b], d * k / (subdivide + 1))
                samples.append(sp.project(surface.space, Y))
                ids.append(nxt)
                nxt += 1
            ids.append(b + 1)
            polylines.append(ids)
        for y in samples:
            lines.append("v " + " ".join(_num(c) for c in y))
        for ids in polylines:
            lines.append("l " + " ".join(map(str, ids)))
    return "\n".join(lines) + "\n"


def write_obj(path, surface, config: Optional[dict] = None, subdivide: int = 0) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(obj_text(surface, config, subdivide))


@dataclass
class ObjMesh:
    vertices: np.ndarray            # (V, 3) all `v` records
    faces: list                     # 0-based loops
    lines: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    space: Optional[str] = None

    @property
    def mesh_vertices(self) -> np.ndarray:
        """Vertices referenced by faces (subdivision samples excluded)."""
        used = max((max(f) for f in self.faces), default=-1) + 1
        return self.vertices[:used]


def parse_obj(text: str) -> ObjMesh:
    verts, faces, polylines, config, space = [], [], [], {}, None
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith(CONFIG_PREFIX):
            key, _, value = line[len(CONFIG_PREFIX):].partition("=")
            config[key.strip()] = value.strip()
        elif line.startswith("# space "):
            space = line.split()[2]
        elif not line or line.startswith("#"):
            continue
        elif line.startswith("v "):
            verts.append([float(t) for t in line.split()[1:4]])
        elif line.startswith("f "):
            faces.append(tuple(int(t.split("/")[0]) - 1 for t in line.split()[1:]))
        elif line.startswith("l "):
            polylines.append([int(t) - 1 for t in line.split()[1:]])
    return ObjMesh(np.array(verts, float).reshape(-1, 3), faces, polylines, config, space)


def read_obj(path) -> ObjMesh:
    with open(path, encoding="ascii") as fh:
        return parse_obj(fh.read())


def mesh_mismatch(surface, mesh: ObjMesh) -> int:
    """Number of vertex coordinates or face loops that differ bit-wise."""
    X = mesh.mesh_vertices
    bad = abs(len(X) - surface.V) + abs(len(mesh.faces) - surface.F)
    if len(X) == surface.V:
        bad += int(np.count_nonzero(X != surface.vertices))
    bad += sum(tuple(a) != tuple(b) for a, b in zip(mesh.faces, surface.faces))
    return bad


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if x is None or isinstance(x, str):
        return x
    return repr(x)


def canonical_json(obj) -> str:
    """Sorted keys, shortest round-trip floats, non-finite floats as strings."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(canonical_json(obj))


def space_name(space) -> str:
    return space.name.lower()

