"""The twelve acceptance criteria, one test each.

A summary line per criterion is printed at the end of the run.
"""

import math
import time

import numpy as np
import pytest

from helpers import antiprismatic, built, prismatic
from prismatic import io
from prismatic import spaces as sp
from prismatic.analysis import genus_consistency, petrie_cycles, straight_ahead_cycles
from prismatic.cli import geography_rows
from prismatic.pipeline import BuildConfig, solve
from prismatic.solids import pyramid
from prismatic.solvers import (euclidean_angle_table, solve_kis_angle_condition,
                               solve_platonic_angle, solve_prismatic_inner)
from prismatic.spaces import HYPERBOLIC, SPHERICAL
from prismatic.tiler import (antiprismatic_generators, enumerate_orbit, prismatic_generators,
                             relation_residuals)


def test_closed_form_cube_family(criterion):
    criterion(1, "cube n=5: a = sqrt(2+sqrt5), b = a + sqrt(a^2-1), square prism sides")
    a = solve_platonic_angle(4, 3, 5)["a"]
    assert abs(a - math.sqrt(2 + math.sqrt(5))) <= 1e-9
    res = solve_prismatic_inner(4, 3, 5)
    assert abs(res["b"] - (a + math.sqrt(a * a - 1))) <= 1e-9
    # re-measure on the built surface: every prism side has four equal edges
    s = prismatic(4, 3, 5).surface
    X = s.model_vertices()
    worst = 0.0
    for loop, tag in zip(s.faces, s.face_tags):
        assert tag == "prism"
        P = X[list(loop)]
        sides = sp.dist_model(HYPERBOLIC, P, np.roll(P, -1, axis=0))
        worst = max(worst, float(sides.max() - sides.min()))
    assert worst <= 1e-9


def test_octahedron_formula(criterion):
    criterion(2, "octahedron a_n matches sqrt6 cos(pi/n)/sqrt(3cos(2pi/n)+1), n=5..12")
    for n in range(5, 13):
        closed = math.sqrt(6) * math.cos(math.pi / n) / math.sqrt(3 * math.cos(2 * math.pi / n) + 1)
        res = solve_platonic_angle(3, 4, n)
        assert res.space is HYPERBOLIC
        assert abs(res["a"] - closed) <= 1e-9


def test_euclidean_angle_sums(criterion):
    criterion(3, "Euclidean angle-sum table, ten entries within 0.01 deg")
    published = {(3, 3, 2): 289.47, (3, 3, 3): 360.0, (4, 3, 2): 340.53, (4, 3, 3): 411.06,
                 (3, 4, 2): 360.0, (3, 4, 3): 450.0, (5, 3, 2): 401.81, (5, 3, 3): 472.34,
                 (3, 5, 2): 423.44, (3, 5, 3): 540.0}
    table = euclidean_angle_table()
    assert set(table) == set(published)
    for key, want in published.items():
        assert abs(table[key] - want) <= 0.01, key


def test_ideal_brackets(criterion):
    criterion(4, "kis (3,4,3): ideal end 4pi/3, near-Euclidean end > 2pi, residual <= 1e-10")
    res = solve_kis_angle_condition(3, 4, 3)
    assert res.space is HYPERBOLIC
    assert abs(res.diagnostics["sum_hi"] - 4 * math.pi / 3) <= 1e-6
    assert res.diagnostics["sum_lo"] > 2 * math.pi
    assert abs(res.residual) <= 1e-10


PLATONIC_GEOGRAPHY = {
    (3, 3): ("3,4,5", "--", "--", "6", ">=7"),
    (4, 3): ("3", "4", "5", "6", ">=7"),
    (3, 4): ("3", "--", "--", "4", ">=5"),
    (5, 3): ("3", "--", "4,5", "6", ">=7"),
    (3, 5): ("--", "--", "3", "--", ">=4"),
}
ANTIPRISMATIC_GEOGRAPHY = {
    (3, 3): ("2", "3", ">=4"),
    (4, 3): ("2", "--", ">=3"),
    (3, 4): ("--", "2", ">=3"),
    (5, 3): ("--", "--", ">=2"),
    (3, 5): ("--", "--", ">=2"),
}


def test_geography(criterion):
    criterion(5, "space-form geography: 25 Platonic and 15 antiprismatic entries")
    plato, anti = geography_rows(n_max=16)
    entries = 0
    for p, q, _, cells in plato:
        got = tuple(cells[c] for c in ("spherical", "euclidean", "finite", "ideal", "hyperideal"))
        assert got == PLATONIC_GEOGRAPHY[(p, q)], (p, q)
        entries += len(got)
    for p, q, _, cells in anti:
        got = tuple(cells[c] for c in ("spherical", "euclidean", "hyperbolic"))
        assert got == ANTIPRISMATIC_GEOGRAPHY[(p, q)], (p, q)
        entries += len(got)
    assert entries == 40


def _orbit(family, p, q, n):
    fundamental = solve(BuildConfig(family, "platonic", p, q, n)).witness["fundamental"]
    gens = prismatic_generators if family == "prismatic" else antiprismatic_generators
    orbit = enumerate_orbit(gens(fundamental))
    assert not orbit.truncated
    return orbit


def test_spherical_orbit_counts(criterion):
    criterion(6, "spherical cell counts 8, 5, 16, 600, 24, 120, 10, 48")
    cases = [("prismatic", 4, 3, 3, 8), ("prismatic", 3, 3, 3, 5), ("prismatic", 3, 3, 4, 16),
             ("prismatic", 3, 3, 5, 600), ("prismatic", 3, 4, 3, 24), ("prismatic", 5, 3, 3, 120),
             ("antiprismatic", 3, 3, 2, 10), ("antiprismatic", 4, 3, 2, 48)]
    for family, p, q, n, cells in cases:
        assert _orbit(family, p, q, n).cell_count() == cells, (family, p, q, n)


def test_spherical_surface_counts(criterion):
    criterion(7, "spherical surfaces: cube 96/64/6; tetrahedra 30, 96, 3600 squares")
    cube = prismatic(4, 3, 3).surface
    assert (cube.F, cube.V) == (96, 64)
    assert set(cube.valencies().tolist()) == {6}
    assert cube.is_closed()
    start = time.perf_counter()
    for n, faces in ((3, 30), (4, 96), (5, 3600)):
        s = prismatic(3, 3, n).surface
        assert s.F == faces and s.is_closed()
        assert all(len(f) == 4 for f in s.faces)
    assert time.perf_counter() - start < 120.0


QUOTIENTS = [
    # builder, F, valency (None: derive), genus
    (lambda: prismatic(4, 3, 4), 12, 6, 3),
    (lambda: prismatic(3, 4, 5), 12, 8, 4),
    (lambda: prismatic(3, 4, 5, "rectified"), 18, 6, 4),
    (lambda: prismatic(3, 4, 5, "truncated"), 30, 5, 4),
    (lambda: prismatic(5, 3, 4), 30, None, 6),
    (lambda: prismatic(3, 5, 3), 30, 10, 10),
    (lambda: antiprismatic(4, 3, 3), 24, 9, 3),
    (lambda: antiprismatic(5, 3, 3), 60, 9, 6),
    (lambda: antiprismatic(5, 3, 3, "rectified"), 80, 8, 6),
]


def test_quotient_table(criterion):
    criterion(8, "quotient (F, valency, genus) table with exact Euler consistency")
    for make, F, valency, genus in QUOTIENTS:
        q = make().quotient
        assert q is not None and q.orientable
        assert (q.F, q.genus) == (F, genus)
        if valency is not None:
            assert q.valency == valency
        want = {"F": F, "genus": genus, "gonality": q.gonalities[0]}
        if valency is not None:
            want["valency"] = valency
        ok, msgs = genus_consistency(q, want)
        assert ok, msgs
        assert q.V - q.E + q.F == 2 - 2 * genus


def test_parity_witnesses(criterion):
    criterion(9, "octahedral straight-ahead lengths 3 and even; tetrahedral Petrie 6 and 8")
    lengths = set(straight_ahead_cycles(prismatic(3, 4, 5).quotient))
    assert 3 in lengths and any(k % 2 == 0 for k in lengths)
    assert {6, 8} <= set(petrie_cycles(antiprismatic(3, 3, 3).quotient))


def test_pyramid_lemmas(criterion):
    criterion(10, "PY_4^n: side angle 2pi/n, gamma and cosh l lemmas, gamma limit")
    rng = np.random.default_rng(20240501)
    q = 4
    for n in range(5, 11):
        s0 = 1.0 / math.tan(math.pi / n)
        for s in s0 + rng.uniform(1e-3, 4.0, size=20):
            pyr = pyramid(q, n, s, HYPERBOLIC)
            r = pyr.r
            assert abs(pyr.side_dihedral() - 2 * math.pi / n) <= 1e-9
            gamma = math.acos(1.0 / (math.sqrt(r * r - 1) * math.sqrt(s * s - 1)))
            assert abs(pyr.measured_gamma() - gamma) <= 1e-9
            cosh_l = 1 + 2 * s * s / ((r * r - 2) * s * s - r * r)
            B = pyr.base_vertices
            measured = float(sp.dist_model(HYPERBOLIC, B[0], B[1]))
            assert abs(measured - math.acosh(cosh_l)) <= 1e-9
        limit = pyramid(q, n, s0, HYPERBOLIC).measured_gamma()
        assert abs(limit - (math.pi / 2 - math.pi / n)) <= 1e-7


def test_spherical_inner_cube(criterion):
    criterion(11, "spherical inner cube b = (-1-sqrt2+sqrt(2(3+sqrt2)))/sqrt3")
    res = solve_prismatic_inner(4, 3, 3)
    assert res.space is SPHERICAL
    want = (-1 - math.sqrt(2) + math.sqrt(2 * (3 + math.sqrt(2)))) / math.sqrt(3)
    assert abs(res["b"] - want) <= 1e-6


EXAMPLES = [
    ("prismatic", "platonic", 4, 3, 3), ("prismatic", "platonic", 3, 3, 3),
    ("prismatic", "platonic", 3, 3, 4), ("prismatic", "platonic", 3, 3, 5),
    ("prismatic", "platonic", 4, 3, 4), ("prismatic", "platonic", 4, 3, 5),
    ("prismatic", "platonic", 3, 4, 5), ("prismatic", "rectified", 3, 4, 5),
    ("prismatic", "truncated", 3, 4, 5), ("prismatic", "platonic", 5, 3, 4),
    ("prismatic", "platonic", 3, 5, 3), ("antiprismatic", "platonic", 3, 3, 3),
    ("antiprismatic", "platonic", 3, 4, 2), ("antiprismatic", "platonic", 4, 3, 3),
    ("antiprismatic", "platonic", 5, 3, 3), ("antiprismatic", "rectified", 5, 3, 3),
]


def _distance_drift(b, rng) -> float:
    space = b.orbit.space
    chart = rng.uniform(-0.4, 0.4, size=(40, 3))
    X = sp.lift(space, chart)
    before = sp.dist_model(space, X[:20], X[20:])
    worst = 0.0
    step = max(1, len(b.orbit) // 50)
    for M in b.orbit.matrices[::step]:
        Y = X @ M.T
        if space is SPHERICAL:
            Y = Y / np.linalg.norm(Y, axis=1, keepdims=True)
        worst = max(worst, float(np.max(np.abs(sp.dist_model(space, Y[:20], Y[20:]) - before))))
    return worst


@pytest.mark.slow
def test_property_suite(criterion):
    criterion(12, "distances, involutions, relations, thread determinism, Euler identities")
    rng = np.random.default_rng(12)
    for key in EXAMPLES:
        b = built(*key)
        assert b.passed, [c for c in b.checks if not c["pass"]]
        assert _distance_drift(b, rng) <= 1e-9, key
        frame = sp.reference_frame(b.group.space)
        if b.group.kind == "reflection":
            for M in b.group.matrices:
                assert np.max(np.abs(frame @ (M @ M).T - frame)) <= 1e-10
        assert max(relation_residuals(b.group).values()) <= 1e-8
        s = b.surface
        sides = sum(len(f) for f in s.faces)
        assert sides == sum(len(v) for v in s.edge_faces().values())
        assert sides == sum(len(v) for v in s.vertex_faces())
        if s.is_closed():
            assert sides == 2 * s.E and s.euler() % 2 == 0
        if b.quotient is not None:
            q = b.quotient
            assert sum(q.gonalities) == 2 * q.E == sum(q.valencies)
            assert q.euler == 2 - 2 * q.genus
        other = built(*key, threads=4)
        assert io.canonical_json(other.report) == io.canonical_json(b.report), key
