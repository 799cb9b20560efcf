"""Weak-regularity checks, quotient complexes and combinatorial cycle tracing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import spaces as sp
from .spaces import EUCLIDEAN
from .tiler import Surface, _inverse_matrix, _weld_coordinates


class QuotientDepthError(RuntimeError):
    """A patch vertex lacks a complete star in the built surface."""


class MapError(ValueError):
    """Operation not defined on this map (e.g. odd faces for straight-ahead)."""


# ---------------------------------------------------------------------------
# face and vertex-figure regularity
# ---------------------------------------------------------------------------

def _inner(space, u, v) -> float:
    if space is EUCLIDEAN:
        return float(np.dot(u[:3], v[:3]))
    return float(sp.pair(space, u, v))


@dataclass
class RegularityReport:
    edge_spread: float = 0.0
    angle_spread: float = 0.0
    edge_length: float = float("nan")
    faces_pass: bool = True
    valencies: dict = field(default_factory=dict)
    valency_constant: bool = True
    invariant_spread: float = 0.0
    invariant_pass: bool = True
    witness_pairs: int = 0
    witness_error: float = 0.0
    witness_pass: bool = True
    skipped_vertices: int = 0

    @property
    def vertex_figures_pass(self) -> bool:
        return self.invariant_pass and self.witness_pass


def verify_regular_faces(s: Surface, tol: float = 1e-8,
                         report: Optional[RegularityReport] = None) -> RegularityReport:
    """Equal edges and equal corner angles within each face; one edge length overall."""
    rep = report or RegularityReport()
    X = s.model_vertices()
    lengths, angle_spread = [], 0.0
    for loop in s.faces:
        P = X[list(loop)]
        m = len(loop)
        lengths.append(sp.dist_model(s.space, P, np.roll(P, -1, axis=0)))
        angs = [sp.corner_angle(s.space, P[k], P[k - 1], P[(k + 1) % m]) for k in range(m)]
        angle_spread = max(angle_spread, max(angs) - min(angs))
    L = np.concatenate(lengths)
    rep.edge_spread = float(L.max() - L.min())
    rep.edge_length = float(L.mean())
    rep.angle_spread = float(angle_spread)
    rep.faces_pass = rep.edge_spread <= tol and rep.angle_spread <= tol
    return rep


def _star(s: Surface, v: int, vertex_faces) -> tuple:
    """(neighbors, opposite pairs): vertices adjacent to v, and for each face at
    v the two loop neighbors of v."""
    nbrs, pairs = set(), []
    for fi in vertex_faces[v]:
        loop = s.faces[fi]
        k = loop.index(v)
        a, b = loop[k - 1], loop[(k + 1) % len(loop)]
        nbrs.update((a, b))
        pairs.append((a, b))
    return sorted(nbrs), pairs


def _frame(space, X, A, B) -> np.ndarray:
    """Columns: point X, unit tangent towards A, unit tangent in the plane of
    A and B orthogonal to the first, and a unit normal completing the frame."""
    e1 = sp.tangent(space, X, A)
    t = sp.tangent(space, X, B)
    e2 = t - _inner(space, t, e1) * e1
    e2 = e2 / math.sqrt(_inner(space, e2, e2))
    if space is EUCLIDEAN:
        e3 = np.zeros(4)
        e3[:3] = np.cross(e1[:3], e2[:3])
        return np.column_stack([e1, e2, e3, X])
    G = sp.gram(space)
    _, _, vt = np.linalg.svd(np.array([X, e1, e2]) @ G)
    e3 = vt[-1]
    e3 = e3 / math.sqrt(_inner(space, e3, e3))
    return np.column_stack([X, e1, e2, e3])


def _frame_with_flip(F, space, flip):
    F = F.copy()
    col = 2 if space is EUCLIDEAN else 3
    if flip:
        F[:, col] = -F[:, col]
    return F


def verify_vertex_figures(s: Surface, tol: float = 1e-8, samples: int = 10, seed: int = 0,
                          report: Optional[RegularityReport] = None) -> RegularityReport:
    """Two-stage congruence check over vertices with complete stars.

    Stage one compares sorted neighbor distances and sorted distances between
    the two loop neighbors of each corner.  Stage two builds, for sampled
    vertex pairs, an explicit isometry from a frame on one star to a frame on
    the other and checks that it carries all neighbors onto neighbors.
    """
    rep = report or RegularityReport()
    space = s.space
    X = s.model_vertices()
    vf = s.vertex_faces()
    complete = np.flatnonzero(s.complete_vertices())
    rep.skipped_vertices = int(s.V - len(complete))
    vals = {}
    for v in complete:
        vals[len(vf[v])] = vals.get(len(vf[v]), 0) + 1
    rep.valencies = vals
    rep.valency_constant = len(vals) <= 1
    if len(complete) == 0:
        rep.invariant_pass = rep.witness_pass = False
        return rep

    stars, invariants = {}, []
    for v in complete:
        nb, pairs = _star(s, int(v), vf)
        stars[int(v)] = (nb, pairs)
        d1 = np.sort(sp.dist_model(space, X[v], X[nb]))
        d2 = np.sort([float(sp.dist_model(space, X[a], X[b])) for a, b in pairs])
        invariants.append((d1, d2))
    spread = 0.0
    ref1, ref2 = invariants[0]
    for d1, d2 in invariants[1:]:
        if len(d1) != len(ref1) or len(d2) != len(ref2):
            spread = math.inf
            break
        spread = max(spread, float(np.max(np.abs(d1 - ref1))), float(np.max(np.abs(d2 - ref2))))
    rep.invariant_spread = spread
    rep.invariant_pass = spread <= tol

    rng = np.random.default_rng(seed)
    worst, tried = 0.0, 0
    for _ in range(samples):
        v, w = (int(x) for x in rng.choice(complete, 2))
        err = _star_alignment_error(space, X, v, w, stars)
        worst = max(worst, err)
        tried += 1
    rep.witness_pairs = tried
    rep.witness_error = worst
    rep.witness_pass = worst <= tol
    return rep


def _star_alignment_error(space, X, v, w, stars) -> float:
    nb_v, pairs_v = stars[v]
    nb_w, pairs_w = stars[w]
    if len(nb_v) != len(nb_w):
        return math.inf
    a, b = pairs_v[0]
    Fv = _frame(space, X[v], X[a], X[b])
    targets = X[nb_w]
    best = math.inf
    for (c, d) in pairs_w:
        for (c1, d1) in ((c, d), (d, c)):
            Fw = _frame(space, X[w], X[c1], X[d1])
            for flip in (False, True):
                T = _frame_with_flip(Fw, space, flip) @ np.linalg.inv(Fv)
                img = X[nb_v] @ T.T
                err = 0.0
                for y in img:
                    err = max(err, float(np.min(sp.dist_model(space, y, targets))))
                best = min(best, err)
    return best


# ---------------------------------------------------------------------------
# polygon maps and cycle tracing
# ---------------------------------------------------------------------------

@dataclass
class PolygonMap:
    """Closed polygonal map: faces as loops of vertex ids with an edge id and a
    direction sign (+1 along the edge's canonical orientation) per side."""

    face_vertices: list
    face_edges: list
    face_dirs: list

    def __post_init__(self):
        sides = {}
        for f, edges in enumerate(self.face_edges):
            for i, e in enumerate(edges):
                sides.setdefault(e, []).append((f, i))
        bad = [e for e, ss in sides.items() if len(ss) != 2]
        if bad:
            raise MapError(f"{len(bad)} edges do not have exactly two sides")
        self.sides = sides

    @classmethod
    def from_faces(cls, faces: Sequence[Sequence[int]]) -> "PolygonMap":
        ids, fe, fd = {}, [], []
        for loop in faces:
            m = len(loop)
            es, ds = [], []
            for i in range(m):
                u, v = loop[i], loop[(i + 1) % m]
                key = (min(u, v), max(u, v))
                es.append(ids.setdefault(key, len(ids)))
                ds.append(1 if u < v else -1)
            fe.append(es)
            fd.append(ds)
        return cls([list(f) for f in faces], fe, fd)

    @property
    def E(self) -> int:
        return len(self.sides)

    def _other_side(self, f, i):
        a, b = self.sides[self.face_edges[f][i]]
        return b if a == (f, i) else a

    def straight_ahead_cycles(self) -> list:
        """Cycle lengths of paths leaving each square through its opposite edge."""
        if any(len(f) != 4 for f in self.face_vertices):
            raise MapError("straight-ahead tracing needs quadrilateral faces")
        seen, out = set(), []
        for f in range(len(self.face_vertices)):
            for i in range(4):
                if (f, i) in seen:
                    continue
                state, length = (f, i), 0
                while state not in seen:
                    seen.add(state)
                    g, j = state
                    state = self._other_side(g, (j + 2) % 4)
                    length += 1
                out.append(length)
        return sorted(out)

    # flags are (face, side, end) with end 0 at the side's first corner
    def _r0(self, fl):
        f, i, end = fl
        return (f, i, 1 - end)

    def _r1(self, fl):
        f, i, end = fl
        m = len(self.face_vertices[f])
        return (f, (i - 1) % m, 1) if end == 0 else (f, (i + 1) % m, 0)

    def _r2(self, fl):
        f, i, end = fl
        g, j = self._other_side(f, i)
        # canonical end reached: end xor (side runs against the edge)
        canon = end ^ (self.face_dirs[f][i] < 0)
        return (g, j, canon ^ (self.face_dirs[g][j] < 0))

    def petrie_cycles(self) -> list:
        """Orbit lengths of r2 r1 r0 on flags; each Petrie polygon appears once
        per direction."""
        flags = [(f, i, e) for f in range(len(self.face_vertices))
                 for i in range(len(self.face_vertices[f])) for e in (0, 1)]
        seen, out = set(), []
        for fl in flags:
            if fl in seen:
                continue
            length, cur = 0, fl
            while cur not in seen:
                seen.add(cur)
                cur = self._r2(self._r1(self._r0(cur)))
                length += 1
            out.append(length)
        return sorted(out)

    def orientable(self) -> bool:
        sign = [0] * len(self.face_vertices)
        for start in range(len(sign)):
            if sign[start]:
                continue
            sign[start] = 1
            stack = [start]
            while stack:
                f = stack.pop()
                for i in range(len(self.face_edges[f])):
                    g, j = self._other_side(f, i)
                    want = -sign[f] * self.face_dirs[f][i] * self.face_dirs[g][j]
                    if sign[g] == 0:
                        sign[g] = want
                        stack.append(g)
                    elif sign[g] != want:
                        return False
        return True


def straight_ahead_cycles(m) -> list:
    return _as_map(m).straight_ahead_cycles()


def petrie_cycles(m) -> list:
    return _as_map(m).petrie_cycles()


def _as_map(m) -> PolygonMap:
    if isinstance(m, PolygonMap):
        return m
    if isinstance(m, QuotientComplex):
        return m.map
    if isinstance(m, Surface):
        return PolygonMap.from_faces(m.faces)
    return PolygonMap.from_faces(m)


# ---------------------------------------------------------------------------
# quotient complexes
# ---------------------------------------------------------------------------

@dataclass
class QuotientComplex:
    V: int
    E: int
    F: int
    orientable: bool
    valencies: list                # per vertex class
    gonalities: list               # per face class
    map: PolygonMap = None

    @property
    def euler(self) -> int:
        return self.V - self.E + self.F

    @property
    def genus(self):
        """Orientable genus, or the non-orientable (crosscap) genus when the
        quotient is not orientable."""
        chi = self.euler
        return (2 - chi) // 2 if self.orientable else 2 - chi

    @property
    def valency(self) -> Optional[int]:
        vals = set(self.valencies)
        return vals.pop() if len(vals) == 1 else None

    def as_dict(self) -> dict:
        return {"V": self.V, "E": self.E, "F": self.F, "chi": self.euler, "genus": self.genus,
                "orientable": self.orientable, "valencies": sorted(self.valencies)}


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.parity = [0] * n

    def find(self, i):
        path = []
        while self.parent[i] != i:
            path.append(i)
            i = self.parent[i]
        root, acc = i, 0
        for j in reversed(path):
            acc ^= self.parity[j]
            self.parity[j] = acc
            self.parent[j] = root
        return root

    def parity_of(self, i) -> int:
        self.find(i)
        return self.parity[i] if self.parent[i] != i else 0

    def union(self, a, b, rel=0):
        """Merge a and b, recording parity(a) xor parity(b) = rel."""
        ra, rb = self.find(a), self.find(b)
        pa, pb = self.parity_of(a), self.parity_of(b)
        if ra == rb:
            return (pa ^ pb) == rel
        lo, hi = min(ra, rb), max(ra, rb)
        self.parent[hi] = lo
        self.parity[hi] = pa ^ pb ^ rel
        return True


class _Locator:
    def __init__(self, s: Surface, tol):
        self.space = s.space
        self.tree = cKDTree(_weld_coordinates(s.space, s.model_vertices()))
        self.tol = tol

    def __call__(self, X) -> np.ndarray:
        d, idx = self.tree.query(_weld_coordinates(self.space, np.atleast_2d(X)))
        return np.where(d < self.tol, idx, -1)


def centrosymmetric_pairings(group) -> list:
    """h = pairing map composed with the point reflection in the cell center,
    for each pairing face; these pair opposite faces of one cell."""
    inv = np.diag([-1.0, -1.0, -1.0, 1.0])
    out = []
    for idx, g in enumerate(group.generators):
        if group.kind == "reflection_rotation" and idx % 2 == 1:
            continue
        h = g.matrix @ inv
        out += [h, _inverse_matrix(group.space, h)]
    return out


def is_centrosymmetric(solid, tol: float = 1e-9) -> bool:
    """Point reflection in the center permutes the face planes (works for
    hyperideal solids, which have no finite vertices)."""
    N = np.array([f.normal for f in solid.faces], float)
    N = N / np.linalg.norm(N, axis=1, keepdims=True)
    flipped = N * np.array([-1.0, -1.0, -1.0, 1.0])
    d, _ = cKDTree(N).query(flipped)
    return bool(np.all(d < tol))


def translation_subgroup(orbit, tol: float = 1e-9):
    """(translation matrices, patch cells) of a Euclidean orbit.

    Patch cells are orbit indices whose cells represent each class of cells
    modulo the translations exactly once.
    """
    trans = [M for M in orbit.matrices
             if np.max(np.abs(M[:3, :3] - np.eye(3))) < tol and np.linalg.norm(M[:3, 3]) > tol]
    # sums of two found translations reach lattice vectors longer than the depth
    seen = {}
    for A in trans:
        for B in [np.eye(4)] + trans:
            C = A @ B
            if np.linalg.norm(C[:3, 3]) > tol:
                seen.setdefault(tuple(np.rint(C[:3, 3] / 1e-7).astype(np.int64)), C)
    trans = [seen[k] for k in sorted(seen)]
    shifts = np.array([M[:3, 3] for M in trans]).reshape(-1, 3)
    centers = sp.project(orbit.space, orbit.point_images(sp.origin(orbit.space)))
    chosen, cells = [], []
    for k, c in enumerate(centers):
        dup = False
        for c0 in chosen:
            d = c - c0
            if np.linalg.norm(d) < 1e-7 or (len(shifts) and
                                            np.min(np.linalg.norm(shifts - d, axis=1)) < 1e-7):
                dup = True
                break
        if not dup:
            chosen.append(c)
            cells.append(k)
    return trans, cells


def quotient_complex(s: Surface, pairings: Sequence[np.ndarray], cells: Sequence[int] = (0,),
                     tol: float = 1e-7) -> QuotientComplex:
    """Glue the patch (the fundamental patch placed in the orbit cells listed
    in ``cells``) into a closed surface.

    Each prism leaves its cell through one face; the cell on the other side is
    carried back onto a patch cell by one of ``pairings`` (or lies in the patch
    already), and exactly that map identifies the prism's vertices, edges and
    faces with patch elements.  Every patch vertex must have a complete star
    in ``s``; the valency of each vertex class is checked against that star.
    """
    if s.patch is None or s.orbit is None:
        raise ValueError("surface carries no patch/orbit information")
    space = s.space
    locate = _Locator(s, tol)
    face_index = {tuple(sorted(f)): k for k, f in enumerate(s.faces)}
    patch = s.patch
    orbit_M = s.orbit.matrices
    o = sp.origin(space)
    centers = _weld_coordinates(space, np.array([orbit_M[c] @ o for c in cells]))
    center_tree = cKDTree(centers)

    pf, prisms = [], []                       # prisms: (psi, [surface face ids])
    for c in cells:
        ids = locate(patch.vertices @ orbit_M[c].T)
        by_owner = {}
        for k, loop in enumerate(patch.faces):
            key = tuple(sorted(int(ids[i]) for i in loop))
            f = face_index.get(key)
            if f is None or min(key) < 0:
                raise QuotientDepthError("a patch face is missing from the surface")
            if f not in pf:
                pf.append(f)
            by_owner.setdefault(patch.owners[k], []).append(f)
        for owner, faces in by_owner.items():
            if owner < 0:
                continue
            nbr = orbit_M[c] @ patch.maps[owner]
            nc = _weld_coordinates(space, (nbr @ o)[None])
            if center_tree.query(nc)[0][0] < tol:
                continue                      # neighbor cell is part of the patch
            psi = None
            for H in pairings:
                hc = _weld_coordinates(space, (H @ nbr @ o)[None])
                if center_tree.query(hc)[0][0] < tol:
                    psi = H
                    break
            if psi is None:
                raise QuotientDepthError("no pairing carries a neighbor cell back to the patch")
            prisms.append((psi, faces))
    pf_set = set(pf)
    pf_pos = {k: i for i, k in enumerate(pf)}
    pv = sorted({v for k in pf for v in s.faces[k]})
    pv_pos = {v: i for i, v in enumerate(pv)}
    complete = s.complete_vertices()
    if not all(complete[v] for v in pv):
        raise QuotientDepthError("patch vertex without a complete star; build deeper")
    X = s.model_vertices()

    def loop_edges(loop):
        return [(loop[i], loop[(i + 1) % len(loop)]) for i in range(len(loop))]

    pe = sorted({(min(a, b), max(a, b)) for k in pf for a, b in loop_edges(s.faces[k])})
    pe_pos = {e: i for i, e in enumerate(pe)}
    uv, ue, uf = _UnionFind(len(pv)), _UnionFind(len(pe)), _UnionFind(len(pf))
    for psi, faces in prisms:
        verts = sorted({v for f in faces for v in s.faces[f]})
        img = locate(X[verts] @ psi.T)
        image_of = dict(zip(verts, (int(w) for w in img)))
        if any(w not in pv_pos for w in image_of.values()):
            raise QuotientDepthError("a paired prism does not land on the patch")
        for v, w in image_of.items():
            uv.union(pv_pos[v], pv_pos[w])
        for f in faces:
            j = face_index.get(tuple(sorted(image_of[v] for v in s.faces[f])))
            if j not in pf_set:
                raise QuotientDepthError("a paired prism face does not land on the patch")
            uf.union(pf_pos[f], pf_pos[j])
            for a, b in loop_edges(s.faces[f]):
                ha, hb = image_of[a], image_of[b]
                lo, hi = (a, b) if a < b else (b, a)
                hlo = image_of[lo]
                key = (min(ha, hb), max(ha, hb))
                ue.union(pe_pos[(lo, hi)], pe_pos[key], 0 if hlo == key[0] else 1)

    vclass = {v: uv.find(pv_pos[v]) for v in pv}
    vids = {r: i for i, r in enumerate(sorted(set(vclass.values())))}
    eroot = [ue.find(i) for i in range(len(pe))]
    eids = {r: i for i, r in enumerate(sorted(set(eroot)))}
    reps = sorted({uf.find(i) for i in range(len(pf))})

    face_vertices, face_edges, face_dirs = [], [], []
    corners = [0] * len(vids)
    for r in reps:
        fv, fe, fd = [], [], []
        for u, v in loop_edges(s.faces[pf[r]]):
            e = pe_pos[(min(u, v), max(u, v))]
            forward = (u < v) ^ bool(ue.parity_of(e))
            fv.append(vids[vclass[u]])
            fe.append(eids[eroot[e]])
            fd.append(1 if forward else -1)
            corners[vids[vclass[u]]] += 1
        face_vertices.append(fv)
        face_edges.append(fe)
        face_dirs.append(fd)
    pmap = PolygonMap(face_vertices, face_edges, face_dirs)

    valency_star = s.valencies()
    for v in pv:
        if valency_star[v] != corners[vids[vclass[v]]]:
            raise QuotientDepthError(
                f"vertex class valency {corners[vids[vclass[v]]]} disagrees with the "
                f"surface star ({valency_star[v]}); identifications are incomplete")
    return QuotientComplex(len(vids), len(eids), len(reps), pmap.orientable(), corners,
                           [len(f) for f in face_vertices], pmap)


def genus_consistency(q: Optional[QuotientComplex], expected: dict) -> tuple:
    """Check p F = 2E, valency V = 2E and V - E + F = 2 - 2 genus.

    ``expected`` holds F, genus, gonality and optionally valency; a missing
    valency is derived from the Euler identity.  Returns (passed, messages).
    """
    msgs = []
    F, g, p = expected["F"], expected["genus"], expected["gonality"]
    if (p * F) % 2:
        return False, [f"p F = {p * F} is odd"]
    E = p * F // 2
    chi = 2 - 2 * g
    V = chi + E - F
    val = expected.get("valency")
    if V <= 0:
        return False, [f"Euler identity gives V = {V}"]
    if val is None:
        if (2 * E) % V:
            return False, [f"valency 2E/V = {2 * E}/{V} is not an integer"]
        val = 2 * E // V
    if val * V != 2 * E:
        msgs.append(f"valency identity: {val} * {V} != 2 * {E}")
    derived = {"V": V, "E": E, "F": F, "genus": g, "valency": val}
    if q is not None:
        if any(x != p for x in q.gonalities):
            msgs.append("face gonality differs from expectation")
        if sum(q.gonalities) != 2 * q.E:
            msgs.append("double counting of face sides fails")
        if sum(q.valencies) != 2 * q.E:
            msgs.append("double counting of corners fails")
        got = {"V": q.V, "E": q.E, "F": q.F, "genus": q.genus, "valency": q.valency}
        for key, want in derived.items():
            if got[key] != want:
                msgs.append(f"{key}: got {got[key]}, expected {want}")
    return not msgs, msgs if msgs else [f"V={V} E={E} F={F} valency={val} genus={g}"]
