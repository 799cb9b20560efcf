"""Discrete groups generated by face reflections or reflection-rotations,
orbit enumeration, and assembly of periodic surfaces from one cell's worth of
prism or antiprism sides."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import spaces as sp
from .solids import Solid
from .spaces import HYPERBOLIC, SPHERICAL, GeometryError, Isometry, SpaceForm

DEDUP_TOL = 2e-7          # fingerprints closer than this are the same element
CONSISTENCY_TOL = 1e-6    # ... and anything between DEDUP_TOL and this is an error
WELD_TOL = 1e-7
DEFAULT_DEPTH = 5
THREADS_ENV = "PRISMATIC_THREADS"


class TilerConsistencyError(RuntimeError):
    """Numerical ambiguity in element dedup, welding or patch geometry."""


# ---------------------------------------------------------------------------
# groups
# ---------------------------------------------------------------------------

@dataclass
class GroupSpec:
    space: SpaceForm
    generators: list
    kind: str                      # "reflection" | "reflection_rotation" | "pairing"
    labels: list
    inverse: list                  # index of each generator's inverse
    source: object = None
    n: Optional[int] = None
    faces: list = field(default_factory=list)   # face index of the source solid per generator

    @property
    def matrices(self) -> np.ndarray:
        return np.array([g.matrix for g in self.generators])


def _integral_n(angle: float, tol: float = 1e-9) -> int:
    k = int(round(2.0 * math.pi / angle))
    if k < 2 or abs(angle - 2.0 * math.pi / k) > tol:
        raise GeometryError(f"dihedral {angle!r} is not 2 pi / n for an integer n")
    return k


def prismatic_generators(fundamental: Solid) -> GroupSpec:
    """One reflection per face plane of a Platonic fundamental solid."""
    space = fundamental.space
    ns = {_integral_n(a) for a in fundamental.dihedrals}
    if len(ns) != 1:
        raise GeometryError(f"dihedral angles disagree: {sorted(ns)}")
    gens, labels = [], []
    for k, face in enumerate(fundamental.faces):
        gens.append(Isometry(space, sp.reflection_matrix(space, face.normal), (f"r{k}",)))
        labels.append(f"r{k}")
    return GroupSpec(space, gens, "reflection", labels, list(range(len(gens))), fundamental,
                     ns.pop(), list(range(len(gens))))


def face_axis(solid: Solid, k: int) -> np.ndarray:
    d = solid.faces[k].normal[:3]
    return d / np.linalg.norm(d)


def reflection_rotation_matrix(space, N, axis, p) -> np.ndarray:
    """Reflect in the plane with normal N, then turn by +pi/p about axis
    (counterclockwise seen from outside)."""
    return sp.embed3(sp.rotation_matrix3(axis, math.pi / p)) @ sp.reflection_matrix(space, N)


def antiprismatic_generators(kis: Solid, tol: float = 1e-9) -> GroupSpec:
    """Reflection-rotations at the 2p-gonal faces of the truncation, plus inverses."""
    res = kis.extras.get("angle_sum", 2 * math.pi) - 2 * math.pi
    if abs(res) > tol:
        raise GeometryError(f"angle condition violated by {res:.3g}")
    tp = kis.extras["truncated"]
    space, p = tp.space, kis.spec.p
    gens, labels, inverse, faces = [], [], [], []
    for k in tp.faces_tagged("big"):
        M = reflection_rotation_matrix(space, tp.faces[k].normal, face_axis(tp, k), p)
        g = Isometry(space, M, (f"g{k}",))
        i = len(gens)
        gens += [g, Isometry(space, g.inverse().matrix, (f"G{k}",))]
        labels += [f"g{k}", f"G{k}"]
        inverse += [i + 1, i]
        faces += [k, k]
    return GroupSpec(space, gens, "reflection_rotation", labels, inverse, kis, kis.spec.n, faces)


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

@dataclass
class OrbitSet:
    space: SpaceForm
    matrices: np.ndarray           # (m, 4, 4)
    words: list                    # tuples of generator indices
    labels: list
    depth: int
    truncated: bool

    def __len__(self):
        return len(self.words)

    @property
    def elements(self) -> list:
        return [Isometry(self.space, M, tuple(self.labels[i] for i in w))
                for M, w in zip(self.matrices, self.words)]

    def point_images(self, X) -> np.ndarray:
        return np.einsum("eij,j->ei", self.matrices, np.asarray(X, float))

    def distinct_images(self, X, tol: float = 1e-7) -> int:
        """Number of distinct images of the model point X."""
        Y = self.point_images(X)
        if self.space is not SPHERICAL:
            Y = sp.project(self.space, Y)
        tree = cKDTree(Y)
        return _count_clusters(tree, len(Y), tol)

    def cell_count(self) -> int:
        return self.distinct_images(sp.origin(self.space))


def _count_clusters(tree, m, tol):
    parent = np.arange(m)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in tree.query_pairs(tol, output_type="ndarray"):
        a, b = find(i), find(j)
        if a != b:
            parent[max(a, b)] = min(a, b)
    return len({find(i) for i in range(m)})


def thread_count(threads: Optional[int] = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def _projection_weights():
    k = np.arange(16)
    W = np.array([np.cos(0.7 + 1.3 * j + (2.1 + j) * k) for j in range(3)])
    return W / np.abs(W).sum(axis=1, keepdims=True)


class _FingerprintIndex:
    """Insert-if-absent map over fingerprints.

    Buckets are keyed by three generic projections (unit L1 weights) on a
    coarse grid, so two fingerprints within CONSISTENCY_TOL in max-norm are
    within CONSISTENCY_TOL in each projection; keys of values near a cell
    boundary are probed on both sides.
    """

    CELL = 1e-4
    WEIGHTS = _projection_weights()

    def __init__(self):
        self.buckets = {}
        self.values = []

    def keys_for(self, V) -> list:
        """Candidate bucket keys for each row of V (m, 16)."""
        scaled = (np.asarray(V) @ self.WEIGHTS.T) / self.CELL
        base = np.rint(scaled)
        frac = scaled - base
        margin = CONSISTENCY_TOL / self.CELL
        step = np.where(frac > 0, 1, -1) * (np.abs(np.abs(frac) - 0.5) < margin)
        base = base.astype(np.int64)
        out = []
        for row, st in zip(base.tolist(), step.tolist()):
            keys = [tuple(row)]
            for k, s in enumerate(st):
                if s:
                    extra = []
                    for key in keys:
                        alt = list(key)
                        alt[k] += s
                        extra.append(tuple(alt))
                    keys += extra
            out.append(keys)
        return out

    def lookup_or_insert(self, v, keys=None) -> Optional[int]:
        """Index of an existing entry matching v, or None after inserting v."""
        if keys is None:
            keys = self.keys_for(v[None])[0]
        for key in keys:
            for idx in self.buckets.get(key, ()):
                gap = float(np.max(np.abs(self.values[idx] - v)))
                if gap <= DEDUP_TOL:
                    return idx
                if gap <= CONSISTENCY_TOL:
                    raise TilerConsistencyError(
                        f"fingerprint gap {gap:.3g} between duplicate and distinct thresholds")
        self.values.append(v)
        self.buckets.setdefault(keys[0], []).append(len(self.values) - 1)
        return None


def enumerate_orbit(g: GroupSpec, depth: Optional[int] = None, max_elements: Optional[int] = None,
                    threads: Optional[int] = None) -> OrbitSet:
    """Breadth-first closure of the generators with fingerprint dedup.

    Output is sorted by (word length, fingerprint) and does not depend on the
    number of threads used for the matrix products.
    """
    if depth is None:
        depth = DEFAULT_DEPTH if g.space is not SPHERICAL else 10 ** 9
    space = g.space
    G = g.matrices
    index = _FingerprintIndex()
    mats = [np.eye(4)]
    words = [()]
    index.lookup_or_insert(sp.fingerprint_values(space, np.eye(4)))
    frontier = [0]
    level = 0
    truncated = False
    nthreads = thread_count(threads)
    pool = ThreadPoolExecutor(nthreads) if nthreads > 1 else None
    try:
        while frontier:
            if level >= depth:
                truncated = True
                break
            F = np.array([mats[i] for i in frontier])
            prods = _products(F, G, pool, nthreads)                  # (f, k, 4, 4)
            fps = sp.fingerprint_values(space, prods)                 # (f, k, 16)
            keys = index.keys_for(fps.reshape(-1, 16))
            new = []
            for a, i in enumerate(frontier):
                for b in range(len(G)):
                    if index.lookup_or_insert(fps[a, b], keys[a * len(G) + b]) is None:
                        mats.append(_clean(space, prods[a, b]))
                        words.append(words[i] + (b,))
                        new.append(len(mats) - 1)
                        if max_elements is not None and len(mats) >= max_elements:
                            truncated = True
                            frontier = []
                            break
                if max_elements is not None and len(mats) >= max_elements:
                    break
            else:
                frontier = new
                level += 1
                continue
            level += 1
            break
    finally:
        if pool is not None:
            pool.shutdown()
    order = _canonical_order(space, mats, words)
    return OrbitSet(space, np.array([mats[i] for i in order]), [words[i] for i in order],
                    list(g.labels), level, truncated)


def _products(F, G, pool, nthreads):
    if pool is None or len(F) < 64:
        return np.einsum("fij,kjl->fkil", F, G)
    chunks = np.array_split(np.arange(len(F)), nthreads)
    parts = pool.map(lambda idx: np.einsum("fij,kjl->fkil", F[idx], G), chunks)
    return np.concatenate(list(parts), axis=0)


def _clean(space, M):
    if sp.residual(space, M) > sp.RENORM_TOL:
        return sp.renormalize(space, M)
    return M


def _canonical_order(space, mats, words):
    fps = np.rint(sp.fingerprint_values(space, np.array(mats)) / sp.FP_PITCH).astype(np.int64)
    return sorted(range(len(mats)), key=lambda i: (len(words[i]), tuple(fps[i])))


# ---------------------------------------------------------------------------
# fundamental patch
# ---------------------------------------------------------------------------

@dataclass
class FundamentalPatch:
    space: SpaceForm
    vertices: np.ndarray           # (P, 4) model coordinates
    faces: list                    # vertex index loops
    tags: list                     # "prism" | "antiprism" | "retained"
    kind: str
    owners: list                   # fundamental face index for side faces, -1 otherwise
    maps: dict = field(default_factory=dict)   # fundamental face index -> pairing matrix

    @property
    def gonalities(self) -> list:
        return [len(f) for f in self.faces]


def aligned_face(inner: Solid, direction) -> int:
    """Inner face whose centroid direction best matches direction."""
    X = inner.chart_vertices()
    best, score = -1, -2.0
    for k, face in enumerate(inner.faces):
        c = X[list(face.loop)].mean(axis=0)
        s = float(c @ direction) / (np.linalg.norm(c) + 1e-300)
        if s > score:
            best, score = k, s
    return best


def _pairing_faces(kind, fundamental: Solid):
    if kind == "prismatic":
        return list(range(len(fundamental.faces))), fundamental
    tp = fundamental.extras["truncated"]
    return tp.faces_tagged("big"), tp


def _pairing_map(kind, space, owner: Solid, k, p):
    N = owner.faces[k].normal
    if kind == "prismatic":
        return sp.reflection_matrix(space, N)
    return reflection_rotation_matrix(space, N, face_axis(owner, k), p)


def fundamental_patch(kind: str, inner: Solid, fundamental: Solid, tol: float = 1e-9
                      ) -> FundamentalPatch:
    """Side faces of the prisms (or antiprisms) over the inner solid's paired
    faces, plus the inner faces that are kept because no prism is attached."""
    if kind not in ("prismatic", "antiprismatic"):
        raise ValueError(f"unknown kind {kind!r}")
    space = inner.space
    fund_faces, owner = _pairing_faces(kind, fundamental)
    p = fundamental.spec.p
    verts = [np.asarray(v, float) for v in inner.vertices]
    keys = {}

    def vid(X):
        key = tuple(np.rint(sp.project(space, X) / 1e-9).astype(np.int64)) \
            if space is not SPHERICAL else tuple(np.rint(X / 1e-9).astype(np.int64))
        if key not in keys:
            keys[key] = len(verts)
            verts.append(np.asarray(X, float))
        return keys[key]

    for i, v in enumerate(verts):
        vid(v)
    faces, tags, owners = [], [], []
    maps = {}
    used = set()
    for k in fund_faces:
        axis = face_axis(owner, k)
        j = aligned_face(inner, axis)
        used.add(j)
        M = _pairing_map(kind, space, owner, k, p)
        maps[k] = M
        N = owner.faces[k].normal
        loop = list(inner.faces[j].loop)
        X = inner.vertices[loop]
        Y = X @ M.T
        _check_bisected(space, N, X, Y, tol)
        m = len(loop)
        top = [vid(y) for y in Y]
        for a in range(m):
            b = (a + 1) % m
            if kind == "prismatic":
                faces.append((loop[a], loop[b], top[b], top[a]))
                tags.append("prism")
                owners.append(k)
            else:
                faces.append((loop[a], loop[b], top[a]))
                faces.append((top[a], loop[b], top[b]))
                tags += ["antiprism", "antiprism"]
                owners += [k, k]
    for j, face in enumerate(inner.faces):
        if j not in used:
            faces.append(tuple(face.loop))
            tags.append("retained")
            owners.append(-1)
    return FundamentalPatch(space, np.array(verts), faces, tags, kind, owners, maps)


def _check_bisected(space, N, X, Y, tol):
    c_in = sp.normalize_point(space, X.sum(axis=0))
    c_out = sp.normalize_point(space, Y.sum(axis=0))
    mid = sp.geodesic_point(space, c_in, c_out, 0.5 * float(sp.dist_model(space, c_in, c_out)))
    off = abs(float(sp.pair(space, N, mid)))
    if off > tol or float(sp.pair(space, N, c_in)) > tol:
        raise TilerConsistencyError(f"prism not bisected by its fundamental face (off by {off:.3g})")


# ---------------------------------------------------------------------------
# surfaces
# ---------------------------------------------------------------------------

@dataclass
class Surface:
    space: SpaceForm
    vertices: np.ndarray           # (V, 3) chart coordinates
    faces: list                    # oriented vertex loops
    face_tags: list = field(default_factory=list)
    face_elements: list = field(default_factory=list)   # orbit index producing each face
    face_patch: list = field(default_factory=list)      # patch face index of each face
    orientable: bool = True
    group: object = None
    orbit: object = None
    patch: object = None

    @property
    def V(self) -> int:
        return len(self.vertices)

    @property
    def F(self) -> int:
        return len(self.faces)

    @property
    def E(self) -> int:
        return len(self.edge_faces())

    def model_vertices(self) -> np.ndarray:
        return sp.lift(self.space, self.vertices)

    def edge_faces(self) -> dict:
        out = {}
        for fi, loop in enumerate(self.faces):
            m = len(loop)
            for a in range(m):
                u, v = loop[a], loop[(a + 1) % m]
                out.setdefault((min(u, v), max(u, v)), []).append(fi)
        return out

    def vertex_faces(self) -> list:
        out = [[] for _ in range(self.V)]
        for fi, loop in enumerate(self.faces):
            for v in loop:
                out[v].append(fi)
        return out

    def valencies(self) -> np.ndarray:
        return np.array([len(f) for f in self.vertex_faces()])

    def complete_vertices(self) -> np.ndarray:
        """Vertices whose faces close up into a single disk around them."""
        ef = self.edge_faces()
        ok = np.zeros(self.V, bool)
        nbrs = [[] for _ in range(self.V)]
        for (u, v), fs in ef.items():
            nbrs[u].append(len(fs))
            nbrs[v].append(len(fs))
        vf = self.vertex_faces()
        for v in range(self.V):
            ok[v] = bool(nbrs[v]) and all(c == 2 for c in nbrs[v]) and len(nbrs[v]) == len(vf[v])
        return ok

    def euler(self) -> int:
        return self.V - self.E + self.F

    def is_closed(self) -> bool:
        return all(len(fs) == 2 for fs in self.edge_faces().values())


def _weld(space, pts, tol):
    """Cluster points closer than tol; raise on pairs in [tol, 3 tol)."""
    pitch = tol / 4.0
    keys = np.rint(pts / pitch).astype(np.int64)
    _, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    reps = pts[first]
    tree = cKDTree(reps)
    pairs = tree.query_pairs(3.0 * tol, output_type="ndarray")
    parent = np.arange(len(reps))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if len(pairs):
        d = np.linalg.norm(reps[pairs[:, 0]] - reps[pairs[:, 1]], axis=1)
        bad = (d >= tol) & (d < 3.0 * tol)
        if np.any(bad):
            raise TilerConsistencyError(
                f"weld ambiguity: {int(bad.sum())} vertex pairs in [{tol:g}, {3 * tol:g})")
        for i, j in pairs:
            a, b = find(i), find(j)
            if a != b:
                parent[max(a, b)] = min(a, b)
    roots = np.array([find(i) for i in range(len(reps))])
    return roots[inv]


def _weld_coordinates(space, X):
    if space is SPHERICAL:
        return X / np.linalg.norm(X, axis=-1, keepdims=True)
    return sp.project(space, X)


def build_surface(patch: FundamentalPatch, orbit: OrbitSet, weld_tol: float = WELD_TOL,
                  group: GroupSpec = None) -> Surface:
    """Apply every orbit element to the patch, weld, merge duplicate faces and
    orient consistently where possible."""
    space = patch.space
    M = orbit.matrices
    P = len(patch.vertices)
    imgs = np.einsum("eij,pj->epi", M, patch.vertices).reshape(-1, 4)
    W = _weld_coordinates(space, imgs)
    cluster = _weld(space, W, weld_tol)
    # renumber clusters by first appearance
    uniq, first = np.unique(cluster, return_index=True)
    order = np.argsort(first)
    renum = np.empty(cluster.max() + 1, np.int64)
    renum[uniq[order]] = np.arange(len(uniq))
    vid = renum[cluster].reshape(len(M), P)
    rep_model = imgs[first[order]]
    if space is SPHERICAL and np.any(rep_model[:, 3] > 1.0 - 1e-9):
        raise GeometryError("a surface vertex sits at the projection pole")
    chart = sp.project(space, rep_model)

    faces, tags, elems, pidx = [], [], [], []
    seen = set()
    for e in range(len(M)):
        row = vid[e]
        for k, loop in enumerate(patch.faces):
            f = tuple(int(row[i]) for i in loop)
            key = tuple(sorted(f))
            if key in seen or len(set(f)) < len(f):
                continue
            seen.add(key)
            faces.append(f)
            tags.append(patch.tags[k])
            elems.append(e)
            pidx.append(k)
    faces, orientable = orient_faces(faces)
    return Surface(space, chart, faces, tags, elems, pidx, orientable, group, orbit, patch)


def orient_faces(faces: Sequence[tuple]):
    """Flip loops so that every shared edge is traversed in opposite directions.

    Returns (faces, orientable).
    """
    faces = [tuple(f) for f in faces]
    edge_sides = {}
    for fi, loop in enumerate(faces):
        m = len(loop)
        for a in range(m):
            u, v = loop[a], loop[(a + 1) % m]
            edge_sides.setdefault((min(u, v), max(u, v)), []).append(fi)
    flip = [None] * len(faces)
    orientable = True

    def directed(fi):
        loop = faces[fi][::-1] if flip[fi] else faces[fi]
        m = len(loop)
        return {(loop[a], loop[(a + 1) % m]) for a in range(m)}

    for start in range(len(faces)):
        if flip[start] is not None:
            continue
        flip[start] = False
        stack = [start]
        while stack:
            fi = stack.pop()
            dirs = directed(fi)
            for (u, v) in dirs:
                for fj in edge_sides[(min(u, v), max(u, v))]:
                    if fj == fi:
                        continue
                    if flip[fj] is None:
                        flip[fj] = False
                        if (u, v) in directed(fj):
                            flip[fj] = True
                        stack.append(fj)
                    elif (u, v) in directed(fj):
                        orientable = False
    out = [f[::-1] if fl else f for f, fl in zip(faces, flip)]
    return out, orientable


# ---------------------------------------------------------------------------
# relation checks
# ---------------------------------------------------------------------------

def relation_residuals(g: GroupSpec) -> dict:
    """Frame residuals of r_i^2 and (r_i r_j)^n over adjacent faces."""
    space = g.space
    R = sp.reference_frame(space)
    out = {}

    def frame_err(M):
        return float(np.max(np.abs(R @ M.T - R)))

    if g.kind == "reflection":
        src = g.source
        for i, M in enumerate(g.matrices):
            out[f"r{i}^2"] = frame_err(M @ M)
        for (i, j) in src.adjacency:
            P = np.linalg.matrix_power(g.matrices[i] @ g.matrices[j], g.n)
            out[f"(r{i} r{j})^{g.n}"] = frame_err(P)
    else:
        p = g.source.spec.p
        tp = g.source.extras["truncated"]
        for idx in range(0, len(g.generators), 2):
            M = g.matrices[idx]
            axis = face_axis(tp, g.faces[idx])
            rot = sp.embed3(sp.rotation_matrix3(axis, 2 * math.pi / p))
            out[f"{g.labels[idx]}^2"] = frame_err(np.linalg.solve(rot, M @ M))
            out[f"{g.labels[idx]} {g.labels[idx + 1]}"] = frame_err(M @ g.matrices[idx + 1])
    return out


def edge_cycle_cells(orbit: OrbitSet, vertices, a, b, tol: float = 1e-7) -> int:
    """Number of distinct cells g(K) having both a and b among their vertices,
    where ``vertices`` are the model vertices of the source cell K."""
    space = orbit.space
    W = _weld_coordinates(space, np.asarray(vertices, float))
    tree = cKDTree(W)
    centers = _weld_coordinates(space, orbit.point_images(sp.origin(space)))
    cells = set()
    for k, M in enumerate(orbit.matrices):
        Minv = _inverse_matrix(space, M)
        pts = _weld_coordinates(space, np.array([Minv @ a, Minv @ b]))
        d, _ = tree.query(pts)
        if np.all(d < tol):
            cells.add(tuple(np.rint(centers[k] / tol).astype(np.int64)))
    return len(cells)


def _close(space, X, Y, tol):
    return float(np.max(np.abs(_weld_coordinates(space, X[None])[0]
                               - _weld_coordinates(space, Y[None])[0]))) < tol


def _inverse_matrix(space, M):
    if space is HYPERBOLIC:
        return sp.LORENTZ @ M.T @ sp.LORENTZ
    if space is SPHERICAL:
        return M.T
    out = np.eye(4)
    out[:3, :3] = M[:3, :3].T
    out[:3, 3] = -M[:3, :3].T @ M[:3, 3]
    return out
