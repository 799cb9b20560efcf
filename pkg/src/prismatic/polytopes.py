"""Combinatorics and unit direction tables of the five Platonic solids.

Face directions of P_{p,q} are the unit vertex directions of its dual, and
its vertex directions are the dual's face directions.  Face loops are listed
counterclockwise when seen from outside.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

NAMES = {
    (3, 3): "tetrahedron",
    (4, 3): "cube",
    (3, 4): "octahedron",
    (5, 3): "dodecahedron",
    (3, 5): "icosahedron",
}
TYPES = tuple(NAMES)
GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def _unit(rows) -> np.ndarray:
    a = np.asarray(rows, dtype=float)
    return a / np.linalg.norm(a, axis=1, keepdims=True)


def _tetra_dirs():
    return _unit([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)])


def _cube_vertex_dirs():
    return _unit(list(itertools.product((1, -1), repeat=3)))


def _axis_dirs():
    return np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)


def _icosa_vertex_dirs():
    rows = []
    for s1 in (1, -1):
        for s2 in (1, -1):
            a, b = s1 * GOLDEN, s2 * 1.0
            rows += [(0, a, b), (a, b, 0), (b, 0, a)]
    return _unit(rows)


def _dodeca_vertex_dirs():
    rows = [tuple(v) for v in itertools.product((1, -1), repeat=3)]
    g, h = GOLDEN, 1.0 / GOLDEN
    for s1 in (1, -1):
        for s2 in (1, -1):
            a, b = s1 * h, s2 * g
            rows += [(0, a, b), (a, b, 0), (b, 0, a)]
    return _unit(rows)


def _tangent_basis(d):
    helper = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - (helper @ d) * d
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(d, e1)


@dataclass(frozen=True)
class PlatonicType:
    p: int
    q: int
    name: str
    face_dirs: np.ndarray
    vertex_dirs: np.ndarray
    faces: tuple          # vertex loops, ccw from outside
    edges: tuple          # sorted vertex pairs
    edge_faces: tuple     # face pair for each edge (same order as edges)
    vertex_faces: tuple   # faces around each vertex, ccw from outside

    @property
    def adjacent_face_dot(self) -> float:
        i, j = self.edge_faces[0]
        return float(self.face_dirs[i] @ self.face_dirs[j])

    @property
    def dual(self) -> "PlatonicType":
        return platonic_type(self.q, self.p)


def _ccw_loop(center, members, dirs):
    e1, e2 = _tangent_basis(center)
    ang = [math.atan2(dirs[k] @ e2, dirs[k] @ e1) for k in members]
    return tuple(int(members[k]) for k in np.argsort(ang))


@lru_cache(maxsize=None)
def platonic_type(p: int, q: int) -> PlatonicType:
    if (p, q) not in NAMES:
        raise ValueError(f"({p},{q}) is not a Platonic type")
    if (p, q) == (3, 3):
        fd, vd = _tetra_dirs(), -_tetra_dirs()
    elif (p, q) == (4, 3):
        fd, vd = _axis_dirs(), _cube_vertex_dirs()
    elif (p, q) == (3, 4):
        fd, vd = _cube_vertex_dirs(), _axis_dirs()
    elif (p, q) == (5, 3):
        fd, vd = _icosa_vertex_dirs(), _dodeca_vertex_dirs()
    else:
        fd, vd = _dodeca_vertex_dirs(), _icosa_vertex_dirs()

    dots = fd @ vd.T
    faces = []
    for i, d in enumerate(fd):
        members = np.flatnonzero(dots[i] > dots[i].max() - 1e-9)
        if len(members) != p:
            raise AssertionError("incidence table broken")
        faces.append(_ccw_loop(d, members, vd))
    vertex_faces = []
    for k, v in enumerate(vd):
        members = np.flatnonzero(dots[:, k] > dots[:, k].max() - 1e-9)
        if len(members) != q:
            raise AssertionError("incidence table broken")
        vertex_faces.append(_ccw_loop(v, members, fd))
    edge_set = {}
    for i, loop in enumerate(faces):
        for a, b in zip(loop, loop[1:] + loop[:1]):
            edge_set.setdefault((min(a, b), max(a, b)), []).append(i)
    edges = tuple(sorted(edge_set))
    edge_faces = tuple(tuple(sorted(edge_set[e])) for e in edges)
    return PlatonicType(p, q, NAMES[(p, q)], fd, vd, tuple(faces), edges,
                        edge_faces, tuple(vertex_faces))


def face_pairs(t: PlatonicType) -> tuple:
    return t.edge_faces


def euclidean_dihedral(p: int, q: int) -> float:
    """Dihedral angle of the Euclidean Platonic solid {p, q}."""
    return 2.0 * math.asin(math.cos(math.pi / q) / math.sin(math.pi / p))


def counts(p: int, q: int) -> tuple:
    t = platonic_type(p, q)
    return len(t.vertex_dirs), len(t.edges), len(t.faces)
