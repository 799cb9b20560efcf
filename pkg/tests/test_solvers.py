import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prismatic.solids import NonexistenceError, octahedron_an, platonic, truncated
from prismatic.solvers import (BracketError, antiprismatic_geography, bisect,
                               euclidean_angle_table, evaluate_kis, hyperbolic_cube_inner,
                               platonic_geography, solve_antiprismatic_inner,
                               solve_kis_angle_condition, solve_platonic_angle,
                               solve_prismatic_inner, spherical_cube_inner)
from prismatic.spaces import EUCLIDEAN, HYPERBOLIC, SPHERICAL

SPHERICAL_CUBE_B = (-1 - math.sqrt(2) + math.sqrt(2 * (3 + math.sqrt(2)))) / math.sqrt(3)


# ---------------------------------------------------------------------------
# bisection
# ---------------------------------------------------------------------------

def test_bisect_finds_root_of_cubic():
    x, fx, br, it = bisect(lambda t: t ** 3 - 2.0, 0.0, 3.0)
    assert x == pytest.approx(2 ** (1 / 3), abs=1e-12)
    assert it <= 200 and abs(fx) <= 1e-10


def test_bisect_rejects_missing_sign_change():
    with pytest.raises(BracketError):
        bisect(lambda t: t * t + 1.0, -1.0, 1.0)


def test_bisect_rejects_non_monotone_scan():
    with pytest.raises(BracketError, match="monoton"):
        bisect(lambda t: math.sin(7 * t) + 0.1 * t, -2.0, 2.5)


@settings(max_examples=60, deadline=None)
@given(st.floats(-50, 50), st.floats(0.1, 10))
def test_bisect_linear_roots(root, slope):
    x, _, _, it = bisect(lambda t: slope * (t - root), root - 7.3, root + 11.1)
    assert abs(x - root) <= 1e-12 * max(1.0, abs(root)) + 1e-12
    assert it <= 200


# ---------------------------------------------------------------------------
# dihedral targeting
# ---------------------------------------------------------------------------

def test_cube_n5_closed_form():
    res = solve_platonic_angle(4, 3, 5)
    assert res.space is HYPERBOLIC
    assert res["a"] == pytest.approx(math.sqrt(2 + math.sqrt(5)), abs=1e-9)


def test_octahedron_n5():
    res = solve_platonic_angle(3, 4, 5)
    assert res.space is HYPERBOLIC
    closed = math.sqrt(6) * math.cos(math.pi / 5) / math.sqrt(3 * math.cos(2 * math.pi / 5) + 1)
    assert res["a"] == pytest.approx(closed, abs=1e-9)
    assert res["a"] == pytest.approx(octahedron_an(5), abs=1e-9)


def test_spherical_cube_n3():
    res = solve_platonic_angle(4, 3, 3)
    assert res.space is SPHERICAL
    assert math.degrees(res.witness.dihedral()) == pytest.approx(120.0, abs=1e-9)


@pytest.mark.parametrize("p,q,n", [(4, 3, 5), (3, 4, 7), (5, 3, 4), (3, 5, 3), (3, 3, 8), (4, 3, 3)])
def test_platonic_witness_reevaluated(p, q, n):
    res = solve_platonic_angle(p, q, n)
    fresh = platonic(p, q, res["a"], res.space)
    assert abs(fresh.dihedral() - 2 * math.pi / n) <= 1e-9


# ---------------------------------------------------------------------------
# prism squareness
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", range(5, 11))
def test_cube_inner_closed_form(n):
    res = solve_prismatic_inner(4, 3, n)
    a = res["a"]
    assert res["b"] == pytest.approx(a + math.sqrt(a * a - 1), abs=1e-9)
    assert hyperbolic_cube_inner(a) == pytest.approx(a + math.sqrt(a * a - 1), abs=1e-15)


def test_cube_n5_prism_is_square():
    res = solve_prismatic_inner(4, 3, 5)
    assert res["b"] == pytest.approx(3.8570784672, abs=1e-9)
    assert abs(res["edge"] - res["height"]) <= 1e-10


def test_spherical_inner_cube():
    res = solve_prismatic_inner(4, 3, 3)
    assert res.space is SPHERICAL
    assert res["b"] == pytest.approx(SPHERICAL_CUBE_B, abs=1e-6)
    assert spherical_cube_inner() == pytest.approx(SPHERICAL_CUBE_B, abs=1e-12)


def test_euclidean_mucube_normalized():
    res = solve_prismatic_inner(4, 3, 4)
    assert res.space is EUCLIDEAN
    assert res["edge"] == 1.0
    assert res["height"] == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("base", ["truncated", "rectified"])
@pytest.mark.parametrize("n", [3, 5])
def test_octahedral_variants_square(base, n):
    res = solve_prismatic_inner(3, 4, n, base)
    assert abs(res["edge"] - res["height"]) <= 1e-10
    inner = res.witness["inner"]
    L = np.concatenate(list(inner.edge_lengths().values()))
    assert np.max(np.abs(L - res["edge"])) <= 1e-9


def test_prismatic_needs_n3():
    with pytest.raises(NonexistenceError):
        platonic_geography(4, 3, 2)


# ---------------------------------------------------------------------------
# geography
# ---------------------------------------------------------------------------

PLATONIC_TABLE = {
    (3, 3): {3: "S", 4: "S", 5: "S", 6: "ideal", 7: "hyperideal"},
    (4, 3): {3: "S", 4: "E", 5: "finite", 6: "ideal", 7: "hyperideal"},
    (3, 4): {3: "S", 4: "ideal", 5: "hyperideal"},
    (5, 3): {3: "S", 4: "finite", 5: "finite", 6: "ideal", 7: "hyperideal"},
    (3, 5): {3: "finite", 4: "hyperideal"},
}


def _label(space, kind):
    if space is SPHERICAL:
        return "S"
    if space is EUCLIDEAN:
        return "E"
    return kind


@pytest.mark.parametrize("pq", list(PLATONIC_TABLE))
def test_platonic_geography_table(pq):
    for n, want in PLATONIC_TABLE[pq].items():
        assert _label(*platonic_geography(*pq, n)) == want
    last = max(PLATONIC_TABLE[pq])
    for n in range(last, last + 6):
        assert _label(*platonic_geography(*pq, n)) == "hyperideal"


ANTI_TABLE = {(3, 3): (2, 3, 4), (4, 3): (2, None, 3), (3, 4): (None, 2, 3),
              (5, 3): (None, None, 2), (3, 5): (None, None, 2)}


@pytest.mark.parametrize("pq", list(ANTI_TABLE))
def test_antiprismatic_geography_table(pq):
    s_n, e_n, h_from = ANTI_TABLE[pq]
    for n in range(2, 10):
        space = antiprismatic_geography(*pq, n)
        if n == s_n:
            assert space is SPHERICAL
        elif n == e_n:
            assert space is EUCLIDEAN
        elif n >= h_from:
            assert space is HYPERBOLIC
        else:
            raise AssertionError(f"{pq} n={n} unexpectedly in {space}")


def test_euclidean_angle_table():
    t = euclidean_angle_table()
    assert t[(3, 3, 2)] == pytest.approx(289.47, abs=0.01)
    assert t[(4, 3, 3)] == pytest.approx(411.06, abs=0.01)
    assert t[(3, 5, 3)] == pytest.approx(540.0, abs=0.01)


# ---------------------------------------------------------------------------
# kis angle condition
# ---------------------------------------------------------------------------

def test_euclidean_triakis_exact():
    res = solve_kis_angle_condition(3, 3, 3)
    assert res.space is EUCLIDEAN
    assert res["alpha"] == pytest.approx(math.acos(1 / 3), abs=1e-12)
    assert res["beta"] == pytest.approx(math.pi - math.acos(1 / 3), abs=1e-12)
    assert 2 * res["gamma"] == pytest.approx(math.acos(1 / 3), abs=1e-12)
    assert abs(res.residual) <= 1e-12


def test_kis_ideal_bracket_octahedral():
    res = solve_kis_angle_condition(3, 4, 3)
    d = res.diagnostics
    assert d["sum_hi"] == pytest.approx(4 * math.pi / 3, abs=1e-6)
    assert d["sum_lo"] > 2 * math.pi
    assert abs(res.residual) <= 1e-10


def test_kis_spherical_brackets():
    res = solve_kis_angle_condition(3, 3, 2)
    d = res.diagnostics
    assert math.degrees(d["sum_lo"]) == pytest.approx(289.47, abs=0.01)
    assert d["sum_hi"] == pytest.approx(3 * math.pi, abs=1e-6)
    assert res.space is SPHERICAL


@pytest.mark.parametrize("p,q,n", [(3, 3, 4), (4, 3, 3), (3, 4, 3), (5, 3, 2), (3, 5, 2), (4, 3, 2)])
def test_kis_witness_reevaluated(p, q, n):
    res = solve_kis_angle_condition(p, q, n)
    ev = evaluate_kis(p, q, n, res["rho"] if res.space is not EUCLIDEAN else 1.0, res.space)
    assert abs(ev.total - 2 * math.pi) <= 1e-9
    tp = truncated(p, q, res["rho"], res.space) if res.space is not EUCLIDEAN else None
    if tp is not None:
        assert tp.dihedral("big-big") == pytest.approx(res["alpha"], abs=1e-12)


# ---------------------------------------------------------------------------
# antiprism regularity
# ---------------------------------------------------------------------------

def _antiprism_edges(res):
    return res["inner_edge"], res["lateral"]


@pytest.mark.parametrize("p,q,n,base", [(3, 3, 3, "platonic"), (3, 4, 2, "platonic"),
                                        (4, 3, 2, "platonic"), (4, 3, 3, "platonic"),
                                        (5, 3, 3, "platonic"), (5, 3, 3, "rectified")])
def test_antiprisms_regular(p, q, n, base):
    res = solve_antiprismatic_inner(p, q, n, base)
    e, lat = _antiprism_edges(res)
    assert abs(e - lat) <= 1e-10


def test_antiprism_bisected_by_hexagons():
    """The hexagon plane of the truncated octahedron sits halfway between an
    inner triangle and its reflection-rotated image."""
    res = solve_antiprismatic_inner(3, 4, 2)
    assert res.space is EUCLIDEAN
    tp = res.witness["fundamental"].extras["truncated"]
    inner = res.witness["inner"]
    big = tp.faces_tagged("big")[0]
    N = tp.faces[big].normal
    d = N[:3] / np.linalg.norm(N[:3])
    X = inner.chart_vertices()
    face = max(range(len(inner.faces)),
               key=lambda k: X[list(inner.faces[k].loop)].mean(axis=0) @ d)
    h_inner = X[list(inner.faces[face].loop)].mean(axis=0) @ d
    h_plane = -N[3] / np.linalg.norm(N[:3])
    edge = res["lateral"] / res["scale"]          # back to the witness' units
    height = edge * math.sqrt(2 / 3)              # triangle antiprism = octahedron
    assert h_plane - h_inner == pytest.approx(height / 2, rel=1e-9)
