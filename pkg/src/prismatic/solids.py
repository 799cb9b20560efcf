"""Generalized Platonic solids, truncations, rectifications, pyramids and kis solids.

Solids are centered at the chart origin, which is also their interior
witness: dihedral angles are measured on the side containing it.  Face
normals are stored as outward 4-vectors of the model (see ``spaces``).

Size parameters:

* ``platonic``: hyperbolic ``a`` puts the faces on ``S(a d)``; Euclidean ``a``
  is the inradius; spherical ``a`` is the chart circumradius of the vertices.
* ``truncated`` / ``rectified``: ``rho`` is the chart circumradius of the
  vertices in every space (``rho = 1`` gives the ideal hyperbolic solid).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import spaces as sp
from .polytopes import NAMES, platonic_type, _ccw_loop
from .spaces import EUCLIDEAN, HYPERBOLIC, SPHERICAL, GeodesicPlane, GeometryError, SpaceForm


class NonexistenceError(GeometryError):
    """The requested object does not exist in the given space form."""


@dataclass(frozen=True)
class SolidSpec:
    p: int
    q: int
    family: str
    a: float
    space: SpaceForm
    n: Optional[int] = None


@dataclass(eq=False)
class Face:
    plane: GeodesicPlane
    normal: np.ndarray
    gonality: int
    tag: str
    loop: Optional[tuple] = None


@dataclass(eq=False)
class Solid:
    spec: SolidSpec
    faces: list
    adjacency: list                      # (face i, face j)
    dihedrals: list                      # angle or None per adjacency entry
    edge_tags: list
    classification: str
    vertices: Optional[np.ndarray] = None      # model vectors, (V, 4)
    edge_vertices: Optional[list] = None       # vertex pair per adjacency entry
    extras: dict = field(default_factory=dict)

    @property
    def space(self) -> SpaceForm:
        return self.spec.space

    @property
    def normals(self) -> np.ndarray:
        return np.array([f.normal for f in self.faces])

    @property
    def witness(self) -> np.ndarray:
        return sp.origin(self.space)

    def chart_vertices(self) -> np.ndarray:
        if self.vertices is None:
            raise GeometryError("solid has no finite vertices")
        return sp.project(self.space, self.vertices)

    def vertex_points(self) -> list:
        return [sp.ModelPoint.from_model(self.space, X) for X in self.vertices]

    def dihedral_by_tag(self) -> dict:
        out = {}
        for tag, ang in zip(self.edge_tags, self.dihedrals):
            out.setdefault(tag, []).append(ang)
        return out

    def dihedral(self, tag: Optional[str] = None) -> Optional[float]:
        groups = self.dihedral_by_tag()
        vals = groups[tag] if tag else next(iter(groups.values()))
        return vals[0]

    def edge_lengths(self) -> dict:
        if self.vertices is None or self.edge_vertices is None:
            raise GeometryError("solid has no finite edges")
        out = {}
        for tag, (i, j) in zip(self.edge_tags, self.edge_vertices):
            d = float(sp.dist_model(self.space, self.vertices[i], self.vertices[j]))
            out.setdefault(tag, []).append(d)
        return out

    def faces_tagged(self, tag: str) -> list:
        return [k for k, f in enumerate(self.faces) if f.tag == tag]


def _make_face(space, N, gonality, tag, loop=None) -> Face:
    N = sp.normalize_normal(space, N)
    return Face(GeodesicPlane.from_model_normal(space, N), N, gonality, tag, loop)


def _measure_dihedral(space, f1: Face, f2: Face) -> Optional[float]:
    return sp.intersection_angle(f1.plane, f2.plane, witness=np.zeros(3))


def _edge_tag(t1: str, t2: str) -> str:
    return "-".join(sorted((t1, t2)))


def solid_from_vertices(spec: SolidSpec, X, loops, tags, classification="finite",
                        extras=None) -> Solid:
    """Assemble a solid from model vertices and ccw face loops."""
    space = spec.space
    X = np.asarray(X, dtype=float)
    witness = sp.origin(space)
    faces = []
    for loop, tag in zip(loops, tags):
        N = sp.plane_normal_through(space, X[list(loop)])
        N = sp.orient_outward(space, N, witness)
        faces.append(_make_face(space, N, len(loop), tag, tuple(loop)))
    edge_map = {}
    for fi, loop in enumerate(loops):
        for a, b in zip(loop, loop[1:] + loop[:1]):
            edge_map.setdefault((min(a, b), max(a, b)), []).append(fi)
    adjacency, dihedrals, etags, evs = [], [], [], []
    for e in sorted(edge_map):
        fs = edge_map[e]
        if len(fs) != 2:
            raise GeometryError("face loops do not close up")
        i, j = fs
        adjacency.append((i, j))
        dihedrals.append(_measure_dihedral(space, faces[i], faces[j]))
        etags.append(_edge_tag(faces[i].tag, faces[j].tag))
        evs.append(e)
    return Solid(spec, faces, adjacency, dihedrals, etags, classification, X, evs,
                 dict(extras or {}))


# ---------------------------------------------------------------------------
# Platonic solids
# ---------------------------------------------------------------------------

def _check_type(p, q):
    if (p, q) not in NAMES:
        raise GeometryError(f"({p},{q}) is not one of the five Platonic types")


def platonic(p: int, q: int, a: float, space) -> Solid:
    """P_{p,q}(a); faces sit over the dual's unit vertex directions."""
    space = SpaceForm.parse(space)
    _check_type(p, q)
    t = platonic_type(p, q)
    spec = SolidSpec(p, q, "platonic", float(a), space)
    if space is SPHERICAL:
        if not 0 < a:
            raise GeometryError("spherical platonic needs a > 0")
        X = sp.lift(space, a * t.vertex_dirs)
        return solid_from_vertices(spec, X, t.faces, ["face"] * len(t.faces))
    if space is HYPERBOLIC and not a > 1:
        raise GeometryError("hyperbolic platonic needs a > 1")
    if space is EUCLIDEAN and not a > 0:
        raise GeometryError("euclidean platonic needs a > 0")
    faces = []
    for i, d in enumerate(t.face_dirs):
        pl = sp.plane_from_center(space, a * d)
        faces.append(Face(pl, pl.model_normal(), p, "face", t.faces[i]))
    adjacency = list(t.edge_faces)
    dihedrals = [_measure_dihedral(space, faces[i], faces[j]) for i, j in adjacency]
    tags = ["face-face"] * len(adjacency)
    solid = Solid(spec, faces, adjacency, dihedrals, tags, "finite", None, list(t.edges))
    if space is EUCLIDEAN:
        solid.vertices = np.array([sp.planes_meet(space, solid.normals[list(vf)])
                                   for vf in t.vertex_faces])
        return solid
    solid.classification = _classify_hyperbolic(solid)
    if solid.classification in ("finite", "ideal"):
        verts = []
        for vf in t.vertex_faces:
            Xv = sp.planes_meet(space, solid.normals[list(vf)])
            if solid.classification == "finite":
                Xv = sp.normalize_point(space, Xv)
            else:
                Xv = Xv / Xv[3]
            verts.append(Xv)
        solid.vertices = np.array(verts)
    else:
        solid.edge_vertices = None
    return solid


def _classify_hyperbolic(solid: Solid) -> str:
    if any(d is None for d in solid.dihedrals):
        return "edgeless"
    t = platonic_type(solid.spec.p, solid.spec.q)
    Xv = sp.planes_meet(HYPERBOLIC, solid.normals[list(t.vertex_faces[0])])
    return {"ordinary": "finite", "ideal": "ideal", "hyperideal": "hyperideal"}[
        sp.point_kind(HYPERBOLIC, Xv, 1e-12)]


def classify(s: Solid) -> str:
    if s.space is not HYPERBOLIC:
        return "not_applicable"
    if s.spec.family == "platonic":
        return _classify_hyperbolic(s)
    return s.classification


def platonic_dihedral_closed_form(p: int, q: int, a: float) -> Optional[float]:
    """cos(alpha) = (1 - a^2 c) / (a^2 - 1) for adjacent face directions with dot c."""
    c = platonic_type(p, q).adjacent_face_dot
    x = (1.0 - a * a * c) / (a * a - 1.0)
    if abs(x) > 1.0 + sp.CLAMP_TOL:
        return None
    return math.acos(max(-1.0, min(1.0, x)))


def hyperbolic_cube_vertex(a: float) -> float:
    """Chart coordinate scale of the finite hyperbolic cube's vertices."""
    return (a - math.sqrt(a * a - 3.0)) / 3.0


def octahedron_an(n: int) -> float:
    return math.sqrt(6.0) * math.cos(math.pi / n) / math.sqrt(3.0 * math.cos(2.0 * math.pi / n) + 1.0)


# ---------------------------------------------------------------------------
# truncations and rectifications by circumradius
# ---------------------------------------------------------------------------

def bisect_root(f, lo, hi, tol=1e-15, maxiter=200):
    """Plain bisection for a sign change of f on [lo, hi]."""
    flo = f(lo)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


@lru_cache(maxsize=None)
def truncation_pattern(p: int, q: int):
    """Unit chart directions and loops of the regular truncation.

    Every vertex lies on one centered sphere, where geodesic length is a
    monotone function of chord length, so the directions are the same in all
    three spaces.  The cut angle is found by bisection on the chord mismatch.
    """
    t = platonic_type(p, q)
    V = t.vertex_dirs
    index = {}
    for ei, (k, l) in enumerate(t.edges):
        index[(ei, k)] = len(index)
        index[(ei, l)] = len(index)
    edge_of = {e: i for i, e in enumerate(t.edges)}

    def eid(a, b):
        return edge_of[(min(a, b), max(a, b))]

    def direction(psi, k, l):
        u = V[l] - (V[l] @ V[k]) * V[k]
        u /= np.linalg.norm(u)
        return math.cos(psi) * V[k] + math.sin(psi) * u

    k0 = t.faces[0][0]
    l0, m0 = t.faces[0][1], t.faces[0][-1]
    half = 0.5 * math.acos(float(np.clip(V[k0] @ V[l0], -1, 1)))

    def mismatch(psi):
        w1, w2, w3 = direction(psi, k0, l0), direction(psi, l0, k0), direction(psi, k0, m0)
        return np.linalg.norm(w1 - w2) - np.linalg.norm(w1 - w3)

    psi = bisect_root(mismatch, 1e-9, half - 1e-12)
    dirs = np.zeros((len(index), 3))
    for (ei, k), idx in index.items():
        a, b = t.edges[ei]
        dirs[idx] = direction(psi, k, b if k == a else a)
    loops, tags = [], []
    for loop in t.faces:
        out = []
        for j, k in enumerate(loop):
            prev, nxt = loop[j - 1], loop[(j + 1) % len(loop)]
            out += [index[(eid(prev, k), k)], index[(eid(k, nxt), k)]]
        loops.append(tuple(out))
        tags.append("big")
    for k in range(len(V)):
        members = [index[(eid(k, l), k)] for (a, b) in t.edges for l in (a, b)
                   if k in (a, b) and l != k]
        loops.append(_ccw_loop(V[k], np.array(members), dirs))
        tags.append("small")
    return dirs, tuple(loops), tuple(tags), psi


@lru_cache(maxsize=None)
def rectification_pattern(p: int, q: int):
    t = platonic_type(p, q)
    V = t.vertex_dirs
    dirs = np.array([(V[a] + V[b]) / np.linalg.norm(V[a] + V[b]) for a, b in t.edges])
    edge_of = {e: i for i, e in enumerate(t.edges)}
    loops, tags = [], []
    for loop in t.faces:
        loops.append(tuple(edge_of[(min(a, b), max(a, b))]
                           for a, b in zip(loop, loop[1:] + loop[:1])))
        tags.append("big")
    for k in range(len(V)):
        members = [i for i, e in enumerate(t.edges) if k in e]
        loops.append(_ccw_loop(V[k], np.array(members), dirs))
        tags.append("small")
    return dirs, tuple(loops), tuple(tags)


def _lift_radius(space, dirs, rho):
    if space is HYPERBOLIC and rho >= 1.0:
        if abs(rho - 1.0) > 1e-15:
            raise GeometryError("hyperbolic circumradius must be <= 1")
        return sp.lift_ideal(dirs), "ideal"
    if not rho > 0:
        raise GeometryError("circumradius must be positive")
    return sp.lift(space, rho * dirs), "finite"


def truncated(p: int, q: int, rho: float, space) -> Solid:
    """TP_{p,q} with vertex chart circumradius rho."""
    space = SpaceForm.parse(space)
    _check_type(p, q)
    dirs, loops, tags, _ = truncation_pattern(p, q)
    X, cls = _lift_radius(space, dirs, rho)
    spec = SolidSpec(p, q, "truncated", float(rho), space)
    return solid_from_vertices(spec, X, loops, tags, cls)


def rectified(p: int, q: int, rho: float, space) -> Solid:
    """RP_{p,q} with vertex chart circumradius rho."""
    space = SpaceForm.parse(space)
    _check_type(p, q)
    dirs, loops, tags = rectification_pattern(p, q)
    X, cls = _lift_radius(space, dirs, rho)
    spec = SolidSpec(p, q, "rectified", float(rho), space)
    return solid_from_vertices(spec, X, loops, tags, cls)


def inner_solid(base: str, p: int, q: int, param: float, space) -> Solid:
    return {"platonic": platonic, "truncated": truncated, "rectified": rectified}[base](
        p, q, param, space)


def truncate(s: Solid) -> Solid:
    """Cut the vertices of a finite Platonic solid at the depth making the
    big faces regular, found by bisection on the geodesic cut depth."""
    if s.spec.family != "platonic" or s.vertices is None or s.classification != "finite":
        raise GeometryError("truncate needs a finite Platonic solid with vertices")
    t = platonic_type(s.spec.p, s.spec.q)
    space, X = s.space, s.vertices
    loop = t.faces[0]
    k, l, m = loop[0], loop[1], loop[-1]
    L = float(sp.dist_model(space, X[k], X[l]))

    def mismatch(depth):
        a = sp.geodesic_point(space, X[k], X[l], depth)
        b = sp.geodesic_point(space, X[k], X[m], depth)
        return (L - 2.0 * depth) - float(sp.dist_model(space, a, b))

    depth = bisect_root(mismatch, 0.0, 0.5 * L, tol=1e-15)
    return _cut_solid(s, depth, "truncated", truncation_pattern(s.spec.p, s.spec.q)[1:3])


def rectify(s: Solid) -> Solid:
    """Cut the vertices of a finite Platonic solid at the edge midpoints."""
    if s.spec.family != "platonic" or s.vertices is None or s.classification != "finite":
        raise GeometryError("rectify needs a finite Platonic solid with vertices")
    t = platonic_type(s.spec.p, s.spec.q)
    X, space = s.vertices, s.space
    mids = []
    for a, b in t.edges:
        L = float(sp.dist_model(space, X[a], X[b]))
        mids.append(sp.geodesic_point(space, X[a], X[b], 0.5 * L))
    _, loops, tags = rectification_pattern(s.spec.p, s.spec.q)
    spec = SolidSpec(s.spec.p, s.spec.q, "rectified", float("nan"), space)
    return solid_from_vertices(spec, np.array(mids), loops, tags, "finite")


def _cut_solid(s: Solid, depth, family, loops_tags):
    t = platonic_type(s.spec.p, s.spec.q)
    X, space = s.vertices, s.space
    pts = []
    for a, b in t.edges:
        pts.append(sp.geodesic_point(space, X[a], X[b], depth))
        pts.append(sp.geodesic_point(space, X[b], X[a], depth))
    loops, tags = loops_tags
    spec = SolidSpec(s.spec.p, s.spec.q, family, float("nan"), space)
    out = solid_from_vertices(spec, np.array(pts), loops, tags, "finite")
    out.extras["cut_depth"] = depth
    return out


def circumradius(s: Solid) -> float:
    return float(np.linalg.norm(s.chart_vertices()[0]))


def truncated_radius_for_platonic(p: int, q: int, a: float, space) -> float:
    """Circumradius rho whose TP has its big faces on the faces of P(a)."""
    space = SpaceForm.parse(space)
    P = platonic(p, q, a, space)
    dirs, loops, _, _ = truncation_pattern(p, q)
    N = P.faces[0].normal
    w = dirs[loops[0][0]]

    def f(rho):
        return float(sp.pair(space, N, sp.lift(space, rho * w)))

    hi = 1.0 - 1e-15 if space is HYPERBOLIC else 1e6
    if space is SPHERICAL:
        hi = 1.0
    return bisect_root(f, 1e-12, hi)


# ---------------------------------------------------------------------------
# regular polygons and pyramids
# ---------------------------------------------------------------------------

def polygon_angle(k: int, edge: float, space) -> float:
    """Interior angle of the regular k-gon with the given edge length."""
    space = SpaceForm.parse(space)
    if space is EUCLIDEAN:
        return math.pi - 2.0 * math.pi / k
    if space is HYPERBOLIC:
        if math.isinf(edge):
            return 0.0
        x = math.cos(math.pi / k) / math.cosh(edge / 2.0)
    else:
        x = math.cos(math.pi / k) / math.cos(edge / 2.0)
        if x > 1.0:
            raise NonexistenceError("regular spherical polygon too large")
    return 2.0 * math.asin(min(1.0, x))


def vertex_figure_gamma(theta: float, n: int) -> Optional[float]:
    """Base-to-side angle of a pyramid with base corner angle theta.

    The three planes at a base vertex cut a small sphere in a triangle with
    angles (gamma, gamma, 2 pi / n) opposite the sides (., ., theta).
    """
    if n == 2:
        return 0.0
    c2 = (math.cos(theta) - math.cos(2.0 * math.pi / n)) / (1.0 + math.cos(theta))
    if c2 < -1e-14:
        return None
    return math.acos(math.sqrt(max(0.0, min(1.0, c2))))


def pyramid_gamma(q: int, n: int, edge: float, space) -> Optional[float]:
    """gamma of PY_q^n over a regular q-gon with the given edge; None if no
    such pyramid exists (base corner angle above 2 pi / n)."""
    return vertex_figure_gamma(polygon_angle(q, edge, space), n)


def truncated_angles_trig(p: int, q: int, edge: float, space):
    """(alpha, beta) of TP_{p,q} with the given edge length, from the vertex figure."""
    A = polygon_angle(2 * p, edge, space)
    C = polygon_angle(q, edge, space)
    if A == 0.0 and C == 0.0:
        raise GeometryError("ideal limit; use the limit values")
    ca = (math.cos(C) - math.cos(A) ** 2) / math.sin(A) ** 2
    cb = (math.cos(A) - math.cos(A) * math.cos(C)) / (math.sin(A) * math.sin(C))
    return math.acos(max(-1, min(1, ca))), math.acos(max(-1, min(1, cb)))


def pyramid_kind(q: int, n: int) -> str:
    if n == 2:
        return "flat"
    k = 1.0 / q + 1.0 / n
    if k > 0.5 + 1e-12:
        return "subdivision"
    if abs(k - 0.5) <= 1e-12:
        return "horospherical"
    return "column"


@dataclass(eq=False)
class Pyramid:
    q: int
    n: int
    space: SpaceForm
    route: str
    r: float
    s: float
    base_edge_length: Optional[float]
    gamma: float
    base_plane: Optional[GeodesicPlane]
    side_planes: list
    base_vertices: Optional[np.ndarray] = None   # model vectors
    witness: Optional[np.ndarray] = None         # chart point inside

    def side_dihedral(self) -> Optional[float]:
        if len(self.side_planes) < 2:
            return None
        return sp.intersection_angle(self.side_planes[0], self.side_planes[1], witness=self.witness)

    def measured_gamma(self) -> Optional[float]:
        if self.base_plane is None or not self.side_planes:
            return 0.0
        return sp.intersection_angle(self.base_plane, self.side_planes[0], witness=self.witness)


def _align_to_south(d) -> np.ndarray:
    """Rotation matrix taking unit vector d to (0, 0, -1)."""
    target = np.array([0.0, 0.0, -1.0])
    v = np.cross(d, target)
    s, c = np.linalg.norm(v), float(d @ target)
    if s < 1e-14:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    return sp.rotation_matrix3(v, math.atan2(s, c))


def pyramid(q: int, n: int, s_param: float, space) -> Pyramid:
    """PY_q^n with side-to-side angle 2 pi / n.

    ``s_param`` is the base plane parameter: the column base sphere S((0,0,-s))
    in H^3, the Platonic size parameter for subdivision pyramids, and the
    ratio of hemisphere radius to tile circumradius for the horospherical
    (apex at infinity) pyramids of H^3.  In E^3 half-columns s is the base edge.
    """
    space = SpaceForm.parse(space)
    kind = pyramid_kind(q, n)
    if kind == "flat":
        return Pyramid(q, n, space, "flat", math.inf, s_param, None, 0.0, None, [])
    if kind == "subdivision":
        return _subdivision_pyramid(q, n, s_param, space)
    if space is SPHERICAL:
        raise NonexistenceError(f"PY_{q}^{n} does not exist in S^3")
    if kind == "horospherical":
        if space is EUCLIDEAN:
            return _euclidean_half_column(q, n, s_param)
        return _horospherical_pyramid(q, n, s_param)
    if space is EUCLIDEAN:
        raise NonexistenceError(f"PY_{q}^{n} exists only in H^3")
    return _column_pyramid(q, n, s_param)


def column_radius(q: int, n: int) -> float:
    den = math.cos(2 * math.pi / q) + math.cos(2 * math.pi / n)
    if den <= 0:
        raise NonexistenceError(f"no column for PY_{q}^{n}")
    return math.sqrt((1.0 + math.cos(2 * math.pi / n)) / den)


def column_ideal_threshold(q: int, n: int) -> float:
    """Smallest base parameter s for which the column base stays finite."""
    if q == 4:
        return 1.0 / math.tan(math.pi / n)
    r = column_radius(q, n)
    c = np.array([r, 0.0, 0.0])
    c2 = np.array([r * math.cos(2 * math.pi / q), r * math.sin(2 * math.pi / q), 0.0])

    def kind(s):
        planes = [sp.GeodesicPlane(HYPERBOLIC, "sphere", center=x, radius=math.sqrt(x @ x - 1))
                  for x in (c, c2, np.array([0.0, 0.0, -s]))]
        X = sp.planes_meet(HYPERBOLIC, [pl.model_normal() for pl in planes])
        return float(sp.pair(HYPERBOLIC, X, X) / (X @ X))

    return bisect_root(kind, 1.0 + 1e-12, 1e6)


def _base_vertices(X):
    """Normalize base corners; ideal corners (within 1e-12) give an infinite edge."""
    kind = sp.point_kind(HYPERBOLIC, X[0], 1e-12)
    if kind == "hyperideal":
        raise GeometryError("base parameter below the ideal-base threshold")
    if kind == "ideal":
        return X / X[:, 3:4], math.inf
    X = sp.normalize_point(HYPERBOLIC, X)
    return X, float(sp.dist_model(HYPERBOLIC, X[0], X[1]))


def _column_pyramid(q, n, s) -> Pyramid:
    space = HYPERBOLIC
    r = column_radius(q, n)
    if not s > 1:
        raise GeometryError("column base parameter needs s > 1")
    sides = []
    for k in range(q):
        ang = 2 * math.pi * k / q
        sides.append(sp.plane_from_center(space, r * np.array([math.cos(ang), math.sin(ang), 0.0])))
    base = sp.plane_from_center(space, np.array([0.0, 0.0, -s]))
    verts = np.array([sp.planes_meet(space, [base.model_normal(), sides[k].model_normal(),
                                             sides[(k + 1) % q].model_normal()])
                      for k in range(q)])
    verts, edge = _base_vertices(verts)
    pyr = Pyramid(q, n, space, "column", r, s, edge, 0.0, base, sides, verts, np.zeros(3))
    pyr.gamma = pyr.measured_gamma()
    return pyr


def _subdivision_pyramid(q, n, s, space) -> Pyramid:
    P = platonic(q, n, s, space)
    if P.vertices is None:
        raise GeometryError("base parameter below the ideal-base threshold")
    t = platonic_type(q, n)
    R = sp.embed3(_align_to_south(t.face_dirs[0]))
    loop = list(t.faces[0])
    verts = P.vertices[loop] @ R.T
    N_base = R @ P.faces[0].normal
    center = np.zeros(4)
    center[:] = sp.origin(space)
    sides = []
    for j in range(q):
        A, B = verts[j], verts[(j + 1) % q]
        N = sp.plane_normal_through(space, [center, A, B])
        sides.append(N)
    base_chart = sp.project(space, sp.normalize_point(space, verts.sum(axis=0)))
    witness = 0.5 * base_chart
    wX = sp.lift(space, witness)
    sides = [sp.orient_outward(space, N, wX) for N in sides]
    base = GeodesicPlane.from_model_normal(space, N_base)
    side_planes = [GeodesicPlane.from_model_normal(space, N) for N in sides]
    if space is HYPERBOLIC:
        verts, edge = _base_vertices(verts)
    else:
        edge = float(sp.dist_model(space, verts[0], verts[1]))
    pyr = Pyramid(q, n, space, "subdivision", math.nan, s, edge, 0.0, base, side_planes,
                  verts, witness)
    pyr.gamma = pyr.measured_gamma()
    return pyr


def _horospherical_pyramid(q, n, s) -> Pyramid:
    """Apex at infinity of the upper half-space: hemisphere base of radius
    s * rho_e over a regular q-gon tile of circumradius rho_e, vertical sides."""
    if not s >= 1:
        raise GeometryError("base parameter below the ideal-base threshold")
    rho_e = 1.0 / (2.0 * math.sin(math.pi / q))
    r = s * rho_e
    h = math.sqrt(r * r - rho_e * rho_e)
    corners = [np.array([rho_e * math.cos(2 * math.pi * (k + 0.5) / q),
                         rho_e * math.sin(2 * math.pi * (k + 0.5) / q), 0.0]) for k in range(q)]
    base_pts = [np.array([r, 0.0, 0.0]), np.array([0.0, r, 0.0]), np.array([-r, 0.0, 0.0])]
    base = sp.halfspace_plane_to_ball(base_pts)
    sides = []
    for k in range(q):
        c0, c1 = corners[k], corners[(k + 1) % q]
        pts = [c0 + [0, 0, 1.0], c1 + [0, 0, 1.0], c0 + [0, 0, 5.0]]
        sides.append(sp.halfspace_plane_to_ball(pts))
    verts_hs = [c + np.array([0.0, 0.0, h]) for c in corners]
    verts = np.array([sp.halfspace_ball_conversion(v, "to_ball").model() for v in verts_hs])
    edge = sp.halfspace_distance(verts_hs[0], verts_hs[1]) if h > 0 else math.inf
    witness = sp.halfspace_ball_conversion(np.array([0.0, 0.0, 2.0 * r + 1.0]), "to_ball").coords
    pyr = Pyramid(q, n, HYPERBOLIC, "horospherical", r, s, edge, 0.0, base, sides, verts, witness)
    pyr.gamma = pyr.measured_gamma()
    return pyr


def _euclidean_half_column(q, n, s) -> Pyramid:
    rho_e = s / (2.0 * math.sin(math.pi / q))
    corners = [np.array([rho_e * math.cos(2 * math.pi * (k + 0.5) / q),
                         rho_e * math.sin(2 * math.pi * (k + 0.5) / q), -1.0]) for k in range(q)]
    base = GeodesicPlane(EUCLIDEAN, "flat", normal=np.array([0.0, 0.0, -1.0]), offset=1.0)
    sides = []
    for k in range(q):
        mid = 0.5 * (corners[k] + corners[(k + 1) % q])
        nrm = np.array([mid[0], mid[1], 0.0])
        nrm /= np.linalg.norm(nrm)
        sides.append(GeodesicPlane(EUCLIDEAN, "flat", normal=nrm, offset=float(nrm @ mid)))
    verts = sp.lift(EUCLIDEAN, np.array(corners))
    pyr = Pyramid(q, n, EUCLIDEAN, "half-column", math.inf, s, float(s), 0.0, base, sides,
                  verts, np.zeros(3))
    pyr.gamma = pyr.measured_gamma()
    return pyr


def pyramid_base_threshold(q: int, n: int, space) -> float:
    """Infimum of admissible base parameters (ideal base)."""
    space = SpaceForm.parse(space)
    kind = pyramid_kind(q, n)
    if kind == "column":
        return column_ideal_threshold(q, n)
    if kind == "horospherical":
        return 1.0
    if kind == "subdivision":
        if space is HYPERBOLIC:
            c = platonic_type(q, n).adjacent_face_dot
            # ideal Platonic: dihedral equals the ideal vertex-figure angle
            theta_ideal = math.pi - 2 * math.pi / n
            target = math.cos(theta_ideal)
            return math.sqrt((1.0 + target) / (target + c))
        return 0.0
    return 0.0


def pyramid_for_edge(q: int, n: int, edge: float, space) -> Pyramid:
    """The pyramid PY_q^n whose base edge has the given length."""
    space = SpaceForm.parse(space)
    kind = pyramid_kind(q, n)
    if kind == "flat":
        return pyramid(q, n, math.nan, space)
    if space is EUCLIDEAN:
        if kind == "subdivision":
            unit = pyramid(q, n, 1.0, space)
            return pyramid(q, n, edge / unit.base_edge_length, space)
        return pyramid(q, n, edge, space)
    if pyramid_gamma(q, n, edge, space) is None:
        raise NonexistenceError(
            f"base edge {edge:.6g} is below the minimal edge of PY_{q}^{n}")

    def g(s):
        return pyramid(q, n, s, space).base_edge_length - edge

    if space is SPHERICAL:
        lo, hi = 1e-9, 1.0
        while True:
            try:
                if g(hi) > 0:
                    break
            except GeometryError:
                pass
            hi *= 1.5
            if hi > 1e6:
                raise NonexistenceError("no spherical pyramid with this base edge")
        s = bisect_root(g, lo, hi)
        return pyramid(q, n, s, space)
    lo = pyramid_base_threshold(q, n, space)
    lo = lo * (1.0 + 1e-10) + 1e-12
    while True:
        try:
            if g(lo) > 0:
                break
        except GeometryError:
            pass
        lo = 1.0 + (lo - 1.0) * 1.0001 + 1e-12
    hi = max(2.0 * lo, 2.0)
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise NonexistenceError("base edge is below the pyramid's minimal edge")
    s = bisect_root(g, lo, hi)
    return pyramid(q, n, s, space)


# ---------------------------------------------------------------------------
# kis solids
# ---------------------------------------------------------------------------

def _edge_perpendicular(space, A, B, N_base, inside):
    G = sp.gram(space)
    nb_row = N_base @ G if space is not EUCLIDEAN else np.append(N_base[:3], 0.0)
    rows = np.array([A @ G, B @ G, nb_row])
    _, _, vt = np.linalg.svd(rows)
    M = sp.normalize_normal(space, vt[-1])
    return sp.orient_outward(space, M, inside)


def kis_from_truncated(tp: Solid, n: int) -> Solid:
    """Attach PY_q^n to every small face of a truncated solid."""
    space = tp.space
    p, q = tp.spec.p, tp.spec.q
    edges = tp.edge_lengths()
    edge = edges["big-small"][0]
    if n == 2:
        gamma = 0.0
    else:
        gamma = pyramid_gamma(q, n, edge, space)
        if gamma is None:
            raise NonexistenceError(f"no PY_{q}^{n} over an edge of length {edge:.6g}")
    faces = [f for f in tp.faces]
    big = tp.faces_tagged("big")
    small = tp.faces_tagged("small")
    out_faces = [faces[i] for i in big]
    base_map = {i: k for k, i in enumerate(big)}
    side_index = {}
    for fi in small:
        f = faces[fi]
        loop = f.loop
        centroid = sp.normalize_point(space, tp.vertices[list(loop)].sum(axis=0)) \
            if space is not EUCLIDEAN else tp.vertices[list(loop)].mean(axis=0)
        for j in range(len(loop)):
            a, b = loop[j], loop[(j + 1) % len(loop)]
            if n == 2:
                N = f.normal
            else:
                M = _edge_perpendicular(space, tp.vertices[a], tp.vertices[b], f.normal, centroid)
                N = math.cos(gamma) * f.normal + math.sin(gamma) * M
            side_index[(fi, j)] = len(out_faces)
            out_faces.append(_make_face(space, N, 3, "side", (a, b)))
    adjacency, dihedrals, tags = [], [], []
    for (i, j), tag, ev in zip(tp.adjacency, tp.edge_tags, tp.edge_vertices):
        if tag == "big-big":
            adjacency.append((base_map[i], base_map[j]))
            tags.append("big-big")
        else:
            bi, si = (i, j) if faces[i].tag == "big" else (j, i)
            loop = faces[si].loop
            jj = next(k for k in range(len(loop))
                      if {loop[k], loop[(k + 1) % len(loop)]} == set(ev))
            adjacency.append((base_map[bi], side_index[(si, jj)]))
            tags.append("big-side")
        a, b = adjacency[-1]
        dihedrals.append(_measure_dihedral(space, out_faces[a], out_faces[b]))
    if n > 2:
        for fi in small:
            ql = len(faces[fi].loop)
            for j in range(ql):
                a, b = side_index[(fi, j)], side_index[(fi, (j + 1) % ql)]
                adjacency.append((a, b))
                tags.append("side-side")
                dihedrals.append(_measure_dihedral(space, out_faces[a], out_faces[b]))
    alpha = tp.dihedral("big-big")
    beta = tp.dihedral("big-small")
    spec = SolidSpec(p, q, "kis", tp.spec.a, space, n)
    cls = "finite" if n == 2 else ("infinite" if pyramid_kind(q, n) != "subdivision"
                                   or space is HYPERBOLIC and tp.classification != "finite"
                                   else "finite")
    out = Solid(spec, out_faces, adjacency, dihedrals, tags, cls, None, None)
    out.extras.update(alpha=alpha, beta=beta, gamma=gamma, edge=edge, truncated=tp,
                      angle_sum=alpha + 2 * beta + 2 * gamma)
    return out


def kis(p: int, q: int, n: int, a: float, space) -> Solid:
    """KP_{p,q}^n over truncate(platonic(p, q, a))."""
    space = SpaceForm.parse(space)
    rho = truncated_radius_for_platonic(p, q, a, space)
    tp = truncated(p, q, rho, space)
    return kis_from_truncated(tp, n)
