import math

import numpy as np
import pytest

from helpers import antiprismatic, prismatic
from prismatic import spaces as sp
from prismatic.pipeline import BuildConfig, solve
from prismatic.tiler import (TilerConsistencyError, _weld, antiprismatic_generators,
                             build_surface, edge_cycle_cells, enumerate_orbit, fundamental_patch,
                             orient_faces, prismatic_generators, relation_residuals)
from prismatic.spaces import EUCLIDEAN, HYPERBOLIC


def group_for(family, p, q, n, base="platonic"):
    res = solve(BuildConfig(family, base, p, q, n))
    fundamental = res.witness["fundamental"]
    if family == "prismatic":
        return res, prismatic_generators(fundamental)
    return res, antiprismatic_generators(fundamental)


def test_cube_has_six_involutive_generators():
    _, g = group_for("prismatic", 4, 3, 5)
    assert len(g.generators) == 6 and g.n == 5
    for M in g.matrices:
        assert np.max(np.abs(sp.reference_frame(HYPERBOLIC) @ (M @ M).T
                             - sp.reference_frame(HYPERBOLIC))) <= 1e-10


@pytest.mark.parametrize("p,q,n,count", [(3, 3, 3, 8), (3, 4, 2, 16), (4, 3, 3, 12)])
def test_reflection_rotations_come_with_inverses(p, q, n, count):
    _, g = group_for("antiprismatic", p, q, n)
    assert len(g.generators) == count
    for i, j in enumerate(g.inverse):
        assert np.allclose(g.matrices[i] @ g.matrices[j], np.eye(4), atol=1e-10)
        assert i != j


@pytest.mark.parametrize("family,p,q,n", [("prismatic", 4, 3, 5), ("prismatic", 5, 3, 4),
                                          ("prismatic", 3, 3, 5), ("antiprismatic", 3, 3, 3),
                                          ("antiprismatic", 5, 3, 3), ("antiprismatic", 4, 3, 2)])
def test_group_relations(family, p, q, n):
    _, g = group_for(family, p, q, n)
    assert max(relation_residuals(g).values()) <= 1e-8


def test_depth_zero_is_identity():
    _, g = group_for("prismatic", 4, 3, 5)
    orbit = enumerate_orbit(g, depth=0)
    assert len(orbit) == 1 and orbit.truncated
    assert np.array_equal(orbit.matrices[0], np.eye(4))


def test_depth_one_adds_generators():
    _, g = group_for("prismatic", 4, 3, 5)
    orbit = enumerate_orbit(g, depth=1)
    assert len(orbit) == 7 and orbit.cell_count() == 7


@pytest.mark.parametrize("family,p,q,n,elements,cells", [
    ("prismatic", 4, 3, 3, 192, 8),
    ("prismatic", 3, 3, 3, 120, 5),
    ("prismatic", 3, 3, 4, 16, 16),
    ("prismatic", 3, 4, 3, 192, 24),
    ("antiprismatic", 3, 3, 2, 120, 10),
    ("antiprismatic", 4, 3, 2, 1152, 48),
])
def test_spherical_orbits_close(family, p, q, n, elements, cells):
    _, g = group_for(family, p, q, n)
    orbit = enumerate_orbit(g)
    assert not orbit.truncated
    assert len(orbit) == elements and orbit.cell_count() == cells


def test_orbit_bit_identical_across_threads():
    _, g = group_for("prismatic", 5, 3, 4)
    a = enumerate_orbit(g, depth=3, threads=1)
    b = enumerate_orbit(g, depth=3, threads=4)
    assert a.words == b.words
    assert a.matrices.tobytes() == b.matrices.tobytes()


def test_orbit_elements_are_isometries():
    _, g = group_for("prismatic", 4, 3, 5)
    orbit = enumerate_orbit(g, depth=3)
    R = sp.reference_frame(HYPERBOLIC)
    G = np.diag([1.0, 1.0, 1.0, -1.0])
    for M in orbit.matrices:
        assert np.max(np.abs(M.T @ G @ M - G)) <= 1e-9
        assert np.all(np.isfinite(R @ M.T))


# ---------------------------------------------------------------------------
# patches and surfaces
# ---------------------------------------------------------------------------

def test_cube_patch_is_six_prisms():
    res, _ = group_for("prismatic", 4, 3, 5)
    patch = fundamental_patch("prismatic", res.witness["inner"], res.witness["fundamental"])
    assert patch.gonalities.count(4) == 24
    assert set(patch.tags) == {"prism"}
    assert len(patch.maps) == 6


def test_truncated_tetrahedron_patch_is_four_antiprisms():
    res, _ = group_for("antiprismatic", 3, 3, 3)
    patch = fundamental_patch("antiprismatic", res.witness["inner"], res.witness["fundamental"])
    assert patch.tags.count("antiprism") == 4 * 6
    assert "retained" not in patch.tags


def test_unknown_patch_kind():
    res, _ = group_for("prismatic", 4, 3, 5)
    with pytest.raises(ValueError):
        fundamental_patch("diagonal", res.witness["inner"], res.witness["fundamental"])


def test_spherical_cube_surface():
    b = prismatic(4, 3, 3)
    s = b.surface
    assert (s.V, s.F) == (64, 96)
    assert s.is_closed() and s.orientable
    assert set(s.valencies().tolist()) == {6}
    assert s.euler() == 64 - 192 + 96


@pytest.mark.parametrize("n,faces", [(3, 30), (4, 96)])
def test_spherical_tetrahedral_surfaces(n, faces):
    s = prismatic(3, 3, n).surface
    assert s.F == faces and s.is_closed()


def test_hyperbolic_patch_is_open():
    s = prismatic(4, 3, 5).surface
    assert not s.is_closed()
    assert s.complete_vertices().any()


def test_every_edge_has_at_most_two_faces():
    for b in (prismatic(4, 3, 5), antiprismatic(3, 3, 3), prismatic(4, 3, 4)):
        assert max(len(v) for v in b.surface.edge_faces().values()) <= 2


def test_orientation_is_consistent():
    s = prismatic(4, 3, 3).surface
    directed = {}
    for loop in s.faces:
        for a in range(len(loop)):
            e = (loop[a], loop[(a + 1) % len(loop)])
            assert e not in directed
            directed[e] = True


def test_orient_detects_mobius_band():
    # three squares in a strip whose ends are glued with a half twist
    faces = [(0, 1, 4, 3), (1, 2, 5, 4), (2, 3, 0, 5)]
    _, orientable = orient_faces(faces)
    assert not orientable


def test_orient_flips_reversed_neighbour():
    out, orientable = orient_faces([(0, 1, 2), (0, 1, 3)])
    assert orientable
    sides = [(f[k], f[(k + 1) % 3]) for f in out for k in range(3)]
    assert sides.count((0, 1)) + sides.count((1, 0)) == 2
    assert sides.count((0, 1)) == 1


def test_weld_ambiguity_raises():
    pts = np.array([[0.0, 0.0, 0.0], [2e-7, 0.0, 0.0], [5.0, 0.0, 0.0]])
    with pytest.raises(TilerConsistencyError, match="weld ambiguity"):
        _weld(EUCLIDEAN, pts, 1e-7)


def test_weld_merges_close_points():
    pts = np.array([[0.0, 0.0, 0.0], [1e-9, 0.0, 0.0], [5.0, 0.0, 0.0]])
    ids = _weld(EUCLIDEAN, pts, 1e-7)
    assert ids[0] == ids[1] != ids[2]


def test_build_surface_rejects_ambiguous_weld():
    res, g = group_for("prismatic", 4, 3, 5)
    patch = fundamental_patch("prismatic", res.witness["inner"], res.witness["fundamental"])
    orbit = enumerate_orbit(g, depth=1)
    near = sp.project(HYPERBOLIC, patch.vertices[0]) + [2e-7, 0.0, 0.0]
    patch.vertices = np.vstack([patch.vertices, sp.lift(HYPERBOLIC, near)])
    patch.faces = patch.faces + [(0, len(patch.vertices) - 1, 1)]
    patch.tags = patch.tags + ["prism"]
    with pytest.raises(TilerConsistencyError):
        build_surface(patch, orbit)


# ---------------------------------------------------------------------------
# antiprismatic matching: n kis solids around each pyramid side edge
# ---------------------------------------------------------------------------

def _apex(space, normals):
    G = np.diag([1.0, 1.0, 1.0, -1.0]) if space is HYPERBOLIC else np.eye(4)
    X = np.linalg.svd(np.array(normals) @ G)[2][-1]
    if space is EUCLIDEAN:
        return X / X[3]
    return sp.normalize_point(space, X if X[3] > 0 else -X)


@pytest.mark.parametrize("p,q,n,depth", [(3, 3, 3, 4), (4, 3, 3, 2), (3, 4, 3, 2), (3, 3, 4, 4)])
def test_kis_solids_close_around_side_edges(p, q, n, depth):
    res, g = group_for("antiprismatic", p, q, n)
    kis = res.witness["fundamental"]
    tp = kis.extras["truncated"]
    sides = [f for f in kis.faces if f.tag == "side"]
    small = tp.faces_tagged("small")
    apexes = [_apex(kis.space, [f.normal for f in sides[i * q:(i + 1) * q]])
              for i in range(len(small))]
    for i, f in enumerate(sides):
        assert abs(sp.pair(kis.space, f.normal, apexes[i // q])) <= 1e-12
    verts = np.vstack([tp.vertices, apexes])
    orbit = enumerate_orbit(g, depth=depth)
    for i, fi in enumerate(small):
        corner = tp.vertices[tp.faces[fi].loop[1]]
        assert edge_cycle_cells(orbit, verts, apexes[i], corner) == n


def test_side_side_dihedral_is_two_pi_over_n():
    for p, q, n in [(3, 3, 4), (4, 3, 3), (3, 3, 3)]:
        kis = solve(BuildConfig("antiprismatic", "platonic", p, q, n)).witness["fundamental"]
        ss = [d for d, t in zip(kis.dihedrals, kis.edge_tags) if t == "side-side"]
        assert ss and max(abs(d - 2 * math.pi / n) for d in ss) <= 1e-9
