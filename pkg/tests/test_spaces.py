import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from prismatic import spaces as sp
from prismatic.spaces import (EUCLIDEAN, HYPERBOLIC, SPHERICAL, GeometryError, Isometry,
                              ModelPoint, compose, distance, fingerprint, halfspace_ball_conversion,
                              intersection_angle, plane_from_center, point, reflect, rotation)


def test_distance_coincident():
    o = point("hyperbolic", [0, 0, 0])
    assert distance(HYPERBOLIC, o, o) == 0.0


def test_distance_ball_matches_metric_integral():
    d = distance(HYPERBOLIC, point("h", [0, 0, 0]), point("h", [0.5, 0, 0]))
    integral, _ = quad(lambda t: 2.0 / (1.0 - t * t), 0.0, 0.5, epsabs=1e-14)
    assert d == pytest.approx(math.log(3.0), abs=1e-12)
    assert d == pytest.approx(integral, abs=1e-12)
    assert d == pytest.approx(math.acosh(5.0 / 3.0), abs=1e-12)


def test_spherical_distance_quarter_turn():
    d = distance(SPHERICAL, point("s", [0, 0, 0]), point("s", [1, 0, 0]))
    a, b = np.array([0, 0, 0, -1.0]), np.array([1.0, 0, 0, 0])
    assert d == pytest.approx(math.acos(a @ b), abs=1e-12)
    assert d == pytest.approx(math.pi / 2, abs=1e-12)


def test_plane_from_center_formula():
    pl = plane_from_center("h", [2, 0, 0])
    assert np.allclose(pl.center, [2, 0, 0]) and pl.radius == pytest.approx(math.sqrt(3))
    pl = plane_from_center("h", [math.sqrt(2), 0, 0])
    assert pl.radius == pytest.approx(1.0)
    with pytest.raises(GeometryError):
        plane_from_center("h", [1, 0, 0])


def test_cube_planes_touch_at_sqrt2():
    a = math.sqrt(2)
    ang = intersection_angle(plane_from_center("h", [a, 0, 0]), plane_from_center("h", [0, a, 0]),
                             witness=point("h", [0, 0, 0]))
    assert ang == pytest.approx(0.0, abs=1e-7)


def test_cube_planes_sixty_degrees_at_sqrt3():
    a = math.sqrt(3)
    ang = intersection_angle(plane_from_center("h", [a, 0, 0]), plane_from_center("h", [0, a, 0]),
                             witness=point("h", [0, 0, 0]))
    assert math.degrees(ang) == pytest.approx(60.0, abs=1e-9)


def test_flat_orthogonal_planes():
    p1 = sp.GeodesicPlane(EUCLIDEAN, "flat", normal=[1, 0, 0], offset=0.0)
    p2 = sp.GeodesicPlane(EUCLIDEAN, "flat", normal=[0, 1, 0], offset=0.0)
    assert intersection_angle(p1, p2) == pytest.approx(math.pi / 2)


def test_disjoint_planes_report_none():
    a = 1.2
    assert intersection_angle(plane_from_center("h", [a, 0, 0]),
                              plane_from_center("h", [0, a, 0])) is None


def test_inversion_of_origin():
    g = reflect(plane_from_center("h", [2, 0, 0]))
    img = g(point("h", [0, 0, 0]))
    assert np.allclose(img.coords, [0.5, 0, 0], atol=1e-12)


def test_reflection_fixes_plane_and_is_involution():
    pl = plane_from_center("h", [1.3, 0.4, -0.2])
    g = reflect(pl)
    for y in pl.sample(100, rng=1):
        moved = g(point("h", y)).coords
        assert np.linalg.norm(moved - y) < 1e-10
    frame = sp.reference_frame(HYPERBOLIC)
    twice = frame @ (g.matrix @ g.matrix).T
    assert np.max(np.abs(twice - frame)) < 1e-10
    assert fingerprint(compose(g, g)) == fingerprint(Isometry.identity(HYPERBOLIC))


def test_rotation_examples():
    r = rotation([0, 0, 1], math.pi / 2, "e")
    assert np.allclose(r(point("e", [1, 0, 0])).coords, [0, 1, 0], atol=1e-15)
    r = rotation([0, 0, 1], math.pi / 4, "h")
    assert np.allclose(r(point("h", [0.5, 0, 0])).coords, [0.5 * math.sqrt(0.5)] * 2 + [0], atol=1e-15)
    for phi in np.linspace(0, 2 * math.pi, 7):
        axis = point("s", [0, 0, 0.3])
        assert np.allclose(rotation([0, 0, 1], phi, "s")(axis).coords, axis.coords, atol=1e-15)


def test_identity_apply_and_commutator_fingerprint():
    p = point("h", [0.1, -0.2, 0.3])
    assert np.allclose(Isometry.identity("h")(p).coords, p.coords, atol=1e-15)
    # two perpendicular planes through the same line commute; tilt one to break that
    r1 = reflect(plane_from_center("h", [1.5, 0, 0]))
    r2 = reflect(plane_from_center("h", [0.2, 1.5, 0]))
    assert fingerprint(compose(r1, r2)) != fingerprint(compose(r2, r1))


def test_halfspace_conversion():
    assert np.allclose(halfspace_ball_conversion([0, 0, 1], "to_ball").coords, 0, atol=1e-15)
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = np.append(rng.normal(size=2) * 3, 0.0)
        img = halfspace_ball_conversion(x, "to_ball")
        assert img.kind == "ideal" and abs(np.linalg.norm(img.coords) - 1) < 1e-12
    a, b = np.array([0.3, -1.0, 0.7]), np.array([2.0, 0.5, 1.9])
    pa, pb = (halfspace_ball_conversion(x, "to_ball") for x in (a, b))
    assert distance("h", pa, pb) == pytest.approx(sp.halfspace_distance(a, b), abs=1e-12)
    back = halfspace_ball_conversion(pa, "to_halfspace")
    assert np.allclose(back, a, atol=1e-12)


def test_spherical_pole_is_flagged():
    p = ModelPoint.from_model(SPHERICAL, [0, 0, 0, 1.0])
    assert p.at_infinity
    assert np.allclose(p.model(), [0, 0, 0, 1])


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

coord = st.floats(-0.55, 0.55)
ball_point = st.tuples(coord, coord, coord)
center_dir = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: np.linalg.norm(v) > 0.1)


def _random_isometry(space, rng):
    g = Isometry.identity(space)
    for _ in range(4):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        g = compose(rotation(d, rng.uniform(0, 2 * math.pi), space), g)
        if space is HYPERBOLIC:
            g = compose(reflect(plane_from_center(space, d * rng.uniform(1.1, 3.0))), g)
        elif space is SPHERICAL:
            g = compose(reflect(plane_from_center(space, d * rng.uniform(0.2, 2.0))), g)
        else:
            g = compose(reflect(plane_from_center(space, d * rng.uniform(0.1, 2.0))), g)
    return g


@pytest.mark.parametrize("space", [HYPERBOLIC, SPHERICAL, EUCLIDEAN])
def test_isometries_preserve_distance(space):
    rng = np.random.default_rng(7)
    g = _random_isometry(space, rng)
    worst = 0.0
    for _ in range(1000):
        y1, y2 = rng.uniform(-0.55, 0.55, size=(2, 3))
        p, q = point(space, y1), point(space, y2)
        gp, gq = g(p), g(q)
        if gp.at_infinity or gq.at_infinity:
            continue
        worst = max(worst, abs(distance(space, gp, gq) - distance(space, p, q)))
    assert worst <= 1e-9


@settings(max_examples=60, deadline=None)
@given(center_dir, st.floats(1.01, 20.0))
def test_hyperbolic_planes_meet_boundary_orthogonally(d, scale):
    x = np.asarray(d) / np.linalg.norm(d) * scale
    pl = plane_from_center("h", x)
    assert abs(pl.radius ** 2 - (x @ x - 1.0)) <= 1e-10 * max(1.0, x @ x)


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.floats(-10, 10)] * 3).filter(lambda v: np.linalg.norm(v) <= 10))
def test_stereographic_round_trip(y):
    y = np.asarray(y)
    assert np.max(np.abs(sp.project(SPHERICAL, sp.lift(SPHERICAL, y)) - y)) <= 1e-12 * max(1, y @ y)


@settings(max_examples=100, deadline=None)
@given(center_dir, center_dir, st.floats(1.05, 4), st.floats(1.05, 4), ball_point)
def test_intersection_angle_symmetric(d1, d2, s1, s2, w):
    p1 = plane_from_center("h", np.asarray(d1) / np.linalg.norm(d1) * s1)
    p2 = plane_from_center("h", np.asarray(d2) / np.linalg.norm(d2) * s2)
    a, b = intersection_angle(p1, p2), intersection_angle(p2, p1)
    assert (a is None) == (b is None)
    if a is not None:
        assert a == pytest.approx(b, abs=1e-14)
