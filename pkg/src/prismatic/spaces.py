"""Charts, metrics, geodesic planes and isometries of S^3, E^3 and H^3.

Every space form is handled through a linear model in R^4 so that all
isometries are 4x4 matrices:

* hyperbolic: the hyperboloid ``<X, X> = -1`` for the form ``diag(1, 1, 1, -1)``,
  charted by the Poincare ball ``y = X[:3] / (1 + X[3])``;
* spherical: the unit sphere in R^4, charted by stereographic projection
  ``y = X[:3] / (1 - X[3])`` (the chart origin lifts to ``(0, 0, 0, -1)``);
* euclidean: homogeneous coordinates ``(y, 1)``.

A geodesic plane is the zero set of the pairing ``<N, X>`` with a normal
4-vector ``N``.  Reflections, rotations about lines through the chart origin
and their products are stored as matrices; chart points only appear at the
boundary of this module.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class SpaceForm(enum.Enum):
    SPHERICAL = "spherical"
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"

    @classmethod
    def parse(cls, value) -> "SpaceForm":
        if isinstance(value, SpaceForm):
            return value
        key = str(value).strip().lower()
        aliases = {"s": "spherical", "s3": "spherical", "e": "euclidean",
                   "r3": "euclidean", "e3": "euclidean", "h": "hyperbolic",
                   "h3": "hyperbolic"}
        return cls(aliases.get(key, key))


SPHERICAL = SpaceForm.SPHERICAL
EUCLIDEAN = SpaceForm.EUCLIDEAN
HYPERBOLIC = SpaceForm.HYPERBOLIC

LORENTZ = np.diag([1.0, 1.0, 1.0, -1.0])

IDEAL_TOL = 1e-12
CLAMP_TOL = 1e-12
RENORM_TOL = 1e-12
FP_PITCH = 1e-7
REFERENCE_POINTS = np.array([
    [0.0, 0.0, 0.0],
    [0.1, 0.0, 0.0],
    [0.0, 0.1, 0.0],
    [0.0, 0.0, 0.1],
])


class GeometryError(ValueError):
    """Raised for inputs outside the domain of a geometric operation."""


class SpaceMismatch(GeometryError):
    pass


# ---------------------------------------------------------------------------
# model-level helpers (arrays of 4-vectors, last axis of length 4)
# ---------------------------------------------------------------------------

def gram(space: SpaceForm) -> np.ndarray:
    return LORENTZ if space is HYPERBOLIC else np.eye(4)


def origin(space: SpaceForm) -> np.ndarray:
    if space is SPHERICAL:
        return np.array([0.0, 0.0, 0.0, -1.0])
    return np.array([0.0, 0.0, 0.0, 1.0])


def lift(space: SpaceForm, y) -> np.ndarray:
    """Chart coordinates (..., 3) to model 4-vectors (..., 4)."""
    y = np.asarray(y, dtype=float)
    s = np.sum(y * y, axis=-1, keepdims=True)
    if space is HYPERBOLIC:
        if np.any(s >= 1.0):
            raise GeometryError("hyperbolic chart point outside the open unit ball")
        return np.concatenate([2.0 * y, 1.0 + s], axis=-1) / (1.0 - s)
    if space is SPHERICAL:
        return np.concatenate([2.0 * y, s - 1.0], axis=-1) / (s + 1.0)
    return np.concatenate([y, np.ones_like(s)], axis=-1)


def lift_ideal(y) -> np.ndarray:
    """Boundary point of the ball to a null vector with last coordinate 1."""
    y = np.asarray(y, dtype=float)
    return np.concatenate([y, np.ones(y.shape[:-1] + (1,))], axis=-1)


def project(space: SpaceForm, X) -> np.ndarray:
    """Model 4-vectors to chart coordinates; the spherical pole gives inf."""
    X = np.asarray(X, dtype=float)
    if space is HYPERBOLIC:
        return X[..., :3] / (1.0 + X[..., 3:4])
    if space is SPHERICAL:
        with np.errstate(divide="ignore", invalid="ignore"):
            return X[..., :3] / (1.0 - X[..., 3:4])
    return X[..., :3] / X[..., 3:4]


def pair(space: SpaceForm, N, X) -> np.ndarray:
    """Plane pairing <N, X>; negative on the interior side of N."""
    N = np.asarray(N, dtype=float)
    X = np.asarray(X, dtype=float)
    if space is HYPERBOLIC:
        return np.sum(N[..., :3] * X[..., :3], axis=-1) - N[..., 3] * X[..., 3]
    return np.sum(N * X, axis=-1)


def normal_dot(space: SpaceForm, N1, N2) -> np.ndarray:
    N1 = np.asarray(N1, dtype=float)
    N2 = np.asarray(N2, dtype=float)
    if space is EUCLIDEAN:
        return np.sum(N1[..., :3] * N2[..., :3], axis=-1)
    return pair(space, N1, N2)


def normalize_normal(space: SpaceForm, N) -> np.ndarray:
    N = np.asarray(N, dtype=float)
    sq = normal_dot(space, N, N)
    if np.any(np.asarray(sq) <= 0):
        raise GeometryError("normal vector is not spacelike")
    return N / np.sqrt(sq)[..., None]


def point_kind(space: SpaceForm, X, tol: float = 1e-9) -> str:
    """'ordinary', 'ideal' or 'hyperideal' for a (projective) model vector."""
    if space is not HYPERBOLIC:
        return "ordinary"
    X = np.asarray(X, dtype=float)
    q = pair(space, X, X) / float(np.dot(X, X))
    if q < -tol:
        return "ordinary"
    if q <= tol:
        return "ideal"
    return "hyperideal"


def normalize_point(space: SpaceForm, X) -> np.ndarray:
    """Scale a projective model vector onto the model (timelike / unit)."""
    X = np.asarray(X, dtype=float)
    if space is HYPERBOLIC:
        q = pair(space, X, X)
        if np.any(q >= 0):
            raise GeometryError("vector is not timelike; no point of H^3")
        X = X / np.sqrt(-q)[..., None]
        return X * np.sign(X[..., 3:4])
    if space is SPHERICAL:
        return X / np.linalg.norm(X, axis=-1, keepdims=True)
    return X / X[..., 3:4]


def dist_model(space: SpaceForm, X, Y) -> np.ndarray:
    """Geodesic distance between model points (broadcasting)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    D = X - Y
    if space is HYPERBOLIC:
        q = np.maximum(pair(space, D, D), 0.0)
        return 2.0 * np.arcsinh(np.sqrt(q) / 2.0)
    if space is SPHERICAL:
        c = np.linalg.norm(D, axis=-1)
        return 2.0 * np.arcsin(np.clip(c / 2.0, 0.0, 1.0))
    return np.linalg.norm(D[..., :3], axis=-1)


def tangent(space: SpaceForm, X, Y) -> np.ndarray:
    """Unit tangent vector at X pointing along the geodesic towards Y."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if space is EUCLIDEAN:
        v = np.zeros(4)
        v[:3] = Y[:3] - X[:3]
        return v / np.linalg.norm(v[:3])
    if space is HYPERBOLIC:
        v = Y + pair(space, X, Y) * X
    else:
        v = Y - np.dot(X, Y) * X
    return v / math.sqrt(float(pair(space, v, v)))


def geodesic_point(space: SpaceForm, X, Y, t: float) -> np.ndarray:
    """Point at distance t from X along the geodesic towards Y."""
    u = tangent(space, X, Y)
    if space is HYPERBOLIC:
        return math.cosh(t) * X + math.sinh(t) * u
    if space is SPHERICAL:
        return math.cos(t) * X + math.sin(t) * u
    return X + t * u


def corner_angle(space: SpaceForm, X, Y, Z) -> float:
    """Angle at X between the geodesics towards Y and towards Z."""
    u = tangent(space, X, Y)
    v = tangent(space, X, Z)
    if space is EUCLIDEAN:
        c = float(np.dot(u[:3], v[:3]))
    else:
        c = float(pair(space, u, v))
    return math.acos(max(-1.0, min(1.0, c)))


def plane_normal_through(space: SpaceForm, Xs) -> np.ndarray:
    """Unit normal of the geodesic plane through >= 3 model points (SVD fit)."""
    Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
    rows = Xs @ gram(space)
    _, _, vt = np.linalg.svd(rows)
    return normalize_normal(space, vt[-1])


def planes_meet(space: SpaceForm, normals) -> np.ndarray:
    """Common point (projective model vector) of three or more planes."""
    rows = np.asarray(normals, dtype=float) @ gram(space)
    _, _, vt = np.linalg.svd(rows)
    X = vt[-1]
    if space is HYPERBOLIC and X[3] < 0:
        X = -X
    if space is EUCLIDEAN and abs(X[3]) > 0:
        X = X / X[3]
    return X


def orient_outward(space: SpaceForm, N, interior) -> np.ndarray:
    """Flip N so the interior witness lies on its negative side."""
    N = np.asarray(N, dtype=float)
    return -N if pair(space, N, interior) > 0 else N


def dihedral_from_normals(space: SpaceForm, N1, N2) -> Optional[float]:
    """Interior dihedral angle of outward normals; None when disjoint."""
    c = -float(normal_dot(space, N1, N2)) / math.sqrt(
        float(normal_dot(space, N1, N1)) * float(normal_dot(space, N2, N2)))
    return _clamped_acos(c)


def _clamped_acos(c: float) -> Optional[float]:
    if abs(c) > 1.0 + CLAMP_TOL:
        return None
    return math.acos(max(-1.0, min(1.0, c)))


def reflection_matrix(space: SpaceForm, N) -> np.ndarray:
    N = normalize_normal(space, N)
    if space is HYPERBOLIC:
        return np.eye(4) - 2.0 * np.outer(N, LORENTZ @ N)
    if space is SPHERICAL:
        return np.eye(4) - 2.0 * np.outer(N, N)
    v = np.zeros(4)
    v[:3] = N[:3]
    return np.eye(4) - 2.0 * np.outer(v, N)


def rotation_matrix3(axis, phi: float) -> np.ndarray:
    """R^phi_v = sin(phi) R^90_v + cos(phi) (Id - P_v) + P_v."""
    v = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise GeometryError("rotation axis must be nonzero")
    a, b, c = v / norm
    r90 = np.array([[0.0, -c, b], [c, 0.0, -a], [-b, a, 0.0]])
    proj = np.outer([a, b, c], [a, b, c])
    return math.sin(phi) * r90 + math.cos(phi) * (np.eye(3) - proj) + proj


def embed3(R) -> np.ndarray:
    M = np.eye(4)
    M[:3, :3] = R
    return M


def residual(space: SpaceForm, M) -> float:
    M = np.asarray(M, dtype=float)
    if space is HYPERBOLIC:
        return float(np.max(np.abs(M.T @ LORENTZ @ M - LORENTZ)))
    if space is SPHERICAL:
        return float(np.max(np.abs(M.T @ M - np.eye(4))))
    L = M[:3, :3]
    return float(max(np.max(np.abs(L.T @ L - np.eye(3))),
                     np.max(np.abs(M[3] - [0.0, 0.0, 0.0, 1.0]))))


def renormalize(space: SpaceForm, M) -> np.ndarray:
    """Project a nearly-isometric matrix back onto the isometry group."""
    M = np.array(M, dtype=float)
    if space is SPHERICAL:
        u, _, vt = np.linalg.svd(M)
        return u @ vt
    if space is EUCLIDEAN:
        u, _, vt = np.linalg.svd(M[:3, :3])
        M[:3, :3] = u @ vt
        M[3] = [0.0, 0.0, 0.0, 1.0]
        return M
    cols = [None] * 4
    e = M[:, 3]
    e = e / math.sqrt(-float(pair(space, e, e)))
    cols[3] = e
    done = [e]
    for k in range(3):
        v = M[:, k].copy()
        for w in done:
            v = v - pair(space, v, w) / pair(space, w, w) * w
        cols[k] = v / math.sqrt(float(pair(space, v, v)))
        done.append(cols[k])
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# chart-level values
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelPoint:
    """A point of the working chart.

    ``kind`` is 'ordinary' or 'ideal' (hyperbolic boundary points only).  The
    spherical projection pole has no chart coordinates and is carried by the
    ``at_infinity`` flag instead.
    """

    space: SpaceForm
    coords: np.ndarray = field(default_factory=lambda: np.zeros(3))
    kind: str = "ordinary"
    at_infinity: bool = False

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(3)
        object.__setattr__(self, "coords", c)
        r = float(np.linalg.norm(c))
        if self.space is HYPERBOLIC:
            if self.kind == "ordinary" and r >= 1.0:
                raise GeometryError("hyperbolic ordinary point needs |coords| < 1")
            if self.kind == "ideal" and abs(r - 1.0) > IDEAL_TOL:
                raise GeometryError("hyperbolic ideal point needs |coords| = 1")
        elif self.kind != "ordinary":
            raise GeometryError("only hyperbolic space has ideal points")
        if self.at_infinity and self.space is not SPHERICAL:
            raise GeometryError("only the spherical chart has a point at infinity")

    @classmethod
    def infinity(cls) -> "ModelPoint":
        return cls(SPHERICAL, np.zeros(3), at_infinity=True)

    def model(self) -> np.ndarray:
        if self.at_infinity:
            return np.array([0.0, 0.0, 0.0, 1.0])
        if self.kind == "ideal":
            return lift_ideal(self.coords)
        return lift(self.space, self.coords)

    @classmethod
    def from_model(cls, space: SpaceForm, X) -> "ModelPoint":
        X = np.asarray(X, dtype=float)
        if space is SPHERICAL and abs(1.0 - X[3]) < 1e-15:
            return cls.infinity()
        if space is HYPERBOLIC and point_kind(space, X, 1e-12) == "ideal":
            y = X[:3] / X[3]
            return cls(space, y / np.linalg.norm(y), kind="ideal")
        return cls(space, project(space, X))

    def __repr__(self):
        if self.at_infinity:
            return "ModelPoint(spherical, at_infinity)"
        return f"ModelPoint({self.space.value}, {self.coords.tolist()}, {self.kind})"


def point(space, coords, kind: str = "ordinary") -> ModelPoint:
    return ModelPoint(SpaceForm.parse(space), np.asarray(coords, dtype=float), kind)


@dataclass(frozen=True, eq=False)
class GeodesicPlane:
    """A totally geodesic plane drawn in the chart.

    ``shape`` is 'sphere' (``center``, ``radius``) or 'flat' (unit ``normal``,
    ``offset``), i.e. the set ``normal . y = offset``.
    """

    space: SpaceForm
    shape: str
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    normal: Optional[np.ndarray] = None
    offset: float = 0.0

    def __post_init__(self):
        if self.shape == "sphere":
            c = np.asarray(self.center, dtype=float).reshape(3)
            object.__setattr__(self, "center", c)
            if not self.radius > 0:
                raise GeometryError("sphere radius must be positive")
            if self.space is EUCLIDEAN:
                raise GeometryError("euclidean geodesic planes are flat")
            c2 = float(c @ c)
            expect = c2 - 1.0 if self.space is HYPERBOLIC else c2 + 1.0
            if abs(self.radius ** 2 - expect) > 1e-12 * max(1.0, c2):
                raise GeometryError("sphere is not a geodesic plane of this space")
        elif self.shape == "flat":
            n = np.asarray(self.normal, dtype=float).reshape(3)
            n = n / np.linalg.norm(n)
            object.__setattr__(self, "normal", n)
            if self.space is not EUCLIDEAN and abs(self.offset) > 1e-12:
                raise GeometryError("flat geodesic planes must pass through the origin")
        else:
            raise GeometryError(f"unknown plane shape {self.shape!r}")

    def model_normal(self) -> np.ndarray:
        """Unit normal 4-vector; its negative side contains the chart origin
        for spheres, and the side ``normal . y < offset`` for flats."""
        if self.shape == "flat":
            return np.append(self.normal, -self.offset)
        if self.space is HYPERBOLIC:
            return np.append(self.center, 1.0) / self.radius
        return np.append(-self.center, 1.0) / self.radius

    @classmethod
    def from_model_normal(cls, space: SpaceForm, N) -> "GeodesicPlane":
        N = np.asarray(N, dtype=float)
        if space is EUCLIDEAN:
            n = N[:3]
            s = np.linalg.norm(n)
            return cls(space, "flat", normal=n / s, offset=-N[3] / s)
        scale = np.linalg.norm(N)
        if abs(N[3]) <= 1e-13 * scale:
            return cls(space, "flat", normal=N[:3], offset=0.0)
        if space is HYPERBOLIC:
            c = N[:3] / N[3]
            return cls(space, "sphere", center=c, radius=math.sqrt(c @ c - 1.0))
        c = -N[:3] / N[3]
        return cls(space, "sphere", center=c, radius=math.sqrt(c @ c + 1.0))

    def side(self, p) -> float:
        """Signed chart test: negative outside a sphere / below a flat."""
        y = p.coords if isinstance(p, ModelPoint) else np.asarray(p, dtype=float)
        if self.shape == "sphere":
            return float(self.radius ** 2 - np.sum((y - self.center) ** 2))
        return float(self.normal @ y - self.offset)

    def sample(self, k: int, rng=None) -> np.ndarray:
        """k chart points on the plane (inside the ball for hyperbolic)."""
        rng = np.random.default_rng(rng)
        out = []
        while len(out) < k:
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            if self.shape == "sphere":
                y = self.center + self.radius * d
            else:
                t = d - (d @ self.normal) * self.normal
                y = self.offset * self.normal + rng.uniform(0, 0.95) * t / np.linalg.norm(t)
            if self.space is HYPERBOLIC and y @ y >= 0.98:
                continue
            out.append(y)
        return np.array(out)


def plane_from_center(space, x) -> GeodesicPlane:
    """Plane S(x) in H^3; plane through x normal to x elsewhere."""
    space = SpaceForm.parse(space)
    x = np.asarray(x, dtype=float)
    r2 = float(x @ x)
    if space is HYPERBOLIC:
        if r2 <= 1.0:
            raise GeometryError("hyperbolic plane_from_center needs |x| > 1")
        return GeodesicPlane(space, "sphere", center=x, radius=math.sqrt(r2 - 1.0))
    if r2 == 0:
        raise GeometryError("plane_from_center needs x != 0")
    n = x / math.sqrt(r2)
    if space is EUCLIDEAN:
        return GeodesicPlane(space, "flat", normal=n, offset=math.sqrt(r2))
    X = lift(space, x)
    o = origin(space)
    # geodesic plane through X orthogonal to the ray from the origin
    N = o - np.dot(o, X) * X
    N = orient_outward(space, N / np.linalg.norm(N), o)
    return GeodesicPlane.from_model_normal(space, N)


def plane_through(space, p1, p2, p3) -> GeodesicPlane:
    """The geodesic plane through three chart points."""
    space = SpaceForm.parse(space)
    pts = [p if isinstance(p, ModelPoint) else point(space, p) for p in (p1, p2, p3)]
    N = plane_normal_through(space, [p.model() for p in pts])
    return GeodesicPlane.from_model_normal(space, N)


def spherical_plane_from_points(p1, p2, p3) -> GeodesicPlane:
    return plane_through(SPHERICAL, p1, p2, p3)


def _check_same(*objs):
    spaces = {o.space for o in objs}
    if len(spaces) != 1:
        raise SpaceMismatch("objects live in different space forms")
    return spaces.pop()


def distance(space, p: ModelPoint, q: ModelPoint) -> float:
    """Geodesic distance between two ordinary chart points."""
    space = SpaceForm.parse(space)
    for x in (p, q):
        if x.space is not space:
            raise SpaceMismatch("point from another space form")
        if x.kind != "ordinary":
            raise GeometryError("distance to an ideal point is infinite")
    if space is HYPERBOLIC:
        a, b = p.coords, q.coords
        pa, pb = 1.0 - a @ a, 1.0 - b @ b
        if pa <= 0 or pb <= 0:
            raise GeometryError("hyperbolic point outside the ball")
        u = float(np.sum((a - b) ** 2)) / (pa * pb)
        return 2.0 * math.asinh(math.sqrt(u))
    if space is SPHERICAL:
        return float(dist_model(space, p.model(), q.model()))
    return float(np.linalg.norm(p.coords - q.coords))


def intersection_angle(pl1: GeodesicPlane, pl2: GeodesicPlane, witness=None) -> Optional[float]:
    """Angle between two geodesic planes, or None when they are disjoint.

    Without a witness the angle of the region outside both spheres (resp. on
    the ``normal . y < offset`` side of a flat) is reported.  With a witness
    chart point the angle of the lens containing it is reported.
    """
    _check_same(pl1, pl2)
    w = None
    if witness is not None:
        w = witness.coords if isinstance(witness, ModelPoint) else np.asarray(witness, float)

    def sigma(pl, default):
        if w is None:
            return default
        s = pl.side(w)
        if pl.shape == "sphere":
            return 1.0 if s > 0 else -1.0
        return 1.0 if s < 0 else -1.0

    if pl1.shape == "sphere" and pl2.shape == "sphere":
        d2 = float(np.sum((pl1.center - pl2.center) ** 2))
        c = (d2 - pl1.radius ** 2 - pl2.radius ** 2) / (2.0 * pl1.radius * pl2.radius)
        c *= sigma(pl1, -1.0) * sigma(pl2, -1.0)
    elif pl1.shape == "flat" and pl2.shape == "flat":
        c = -float(pl1.normal @ pl2.normal) * sigma(pl1, 1.0) * sigma(pl2, 1.0)
    else:
        sph, flat = (pl1, pl2) if pl1.shape == "sphere" else (pl2, pl1)
        c = -(flat.offset - flat.normal @ sph.center) / sph.radius
        c *= sigma(sph, -1.0) * sigma(flat, 1.0)
    return _clamped_acos(c)


# ---------------------------------------------------------------------------
# isometries
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Isometry:
    """An ambient isometry stored as a 4x4 matrix on model coordinates."""

    space: SpaceForm
    matrix: np.ndarray
    word: tuple = ()

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if residual(self.space, M) > RENORM_TOL:
            M = renormalize(self.space, M)
        object.__setattr__(self, "matrix", M)

    @classmethod
    def identity(cls, space) -> "Isometry":
        return cls(SpaceForm.parse(space), np.eye(4), ())

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return compose(self, other)

    def inverse(self) -> "Isometry":
        M = self.matrix
        if self.space is HYPERBOLIC:
            inv = LORENTZ @ M.T @ LORENTZ
        elif self.space is SPHERICAL:
            inv = M.T
        else:
            inv = np.eye(4)
            inv[:3, :3] = M[:3, :3].T
            inv[:3, 3] = -M[:3, :3].T @ M[:3, 3]
        return Isometry(self.space, inv, tuple(("~" + w) if not w.startswith("~") else w[1:]
                                                for w in reversed(self.word)))

    def apply_model(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.matrix.T

    def __call__(self, p):
        return apply(self, p)

    @property
    def linear(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:3, 3]

    @property
    def parity(self) -> int:
        """+1 orientation preserving, -1 reversing."""
        if self.space is EUCLIDEAN:
            return int(np.sign(np.linalg.det(self.linear)))
        return int(np.sign(np.linalg.det(self.matrix)))

    def fingerprint(self) -> tuple:
        return fingerprint(self)


def compose(a: Isometry, b: Isometry) -> Isometry:
    """a after b."""
    space = _check_same(a, b)
    return Isometry(space, a.matrix @ b.matrix, a.word + b.word)


def apply(a: Isometry, p: ModelPoint) -> ModelPoint:
    if p.space is not a.space:
        raise SpaceMismatch("point from another space form")
    return ModelPoint.from_model(a.space, a.apply_model(p.model()))


def reference_frame(space: SpaceForm) -> np.ndarray:
    return lift(space, REFERENCE_POINTS)


def fingerprint_values(space: SpaceForm, matrices) -> np.ndarray:
    """Model images of the reference points, flattened to length 16."""
    M = np.asarray(matrices, dtype=float)
    R = reference_frame(space)
    return np.einsum("...ij,kj->...ki", M, R).reshape(M.shape[:-2] + (16,))


def fingerprint(a: Isometry, pitch: float = FP_PITCH) -> tuple:
    vals = fingerprint_values(a.space, a.matrix)
    return tuple(int(v) for v in np.rint(vals / pitch))


def reflect(pl: GeodesicPlane) -> Isometry:
    """Reflection in a geodesic plane (sphere inversion in the chart)."""
    return Isometry(pl.space, reflection_matrix(pl.space, pl.model_normal()), ())


def rotation(axis, phi: float, space) -> Isometry:
    """Rotation by phi about the line through the chart origin along axis."""
    return Isometry(SpaceForm.parse(space), embed3(rotation_matrix3(axis, phi)), ())


# ---------------------------------------------------------------------------
# upper half-space chart
# ---------------------------------------------------------------------------

_CAYLEY_CENTER = np.array([0.0, 0.0, -1.0])


def _cayley(y: np.ndarray) -> np.ndarray:
    d = y - _CAYLEY_CENTER
    return _CAYLEY_CENTER + 2.0 * d / float(d @ d)


def halfspace_ball_conversion(p, direction: str) -> ModelPoint:
    """Convert between the upper half-space and the ball.

    The map is the inversion in the sphere of radius sqrt(2) about (0, 0, -1);
    it sends z = 0 onto the unit sphere and (0, 0, 1) to the origin and is its
    own inverse.  Half-space input may be a ModelPoint or raw coordinates.
    """
    y = p.coords if isinstance(p, ModelPoint) else np.asarray(p, dtype=float)
    if direction == "to_ball":
        if y[2] < 0:
            raise GeometryError("half-space point needs nonnegative height")
        img = _cayley(y)
        kind = "ideal" if y[2] == 0 else "ordinary"
        if kind == "ideal":
            img = img / np.linalg.norm(img)
        return ModelPoint(HYPERBOLIC, img, kind=kind)
    if direction == "to_halfspace":
        if np.allclose(y, [0.0, 0.0, 1.0]):
            raise GeometryError("the north pole maps to infinity of the half-space")
        return _cayley(y)
    raise ValueError(f"unknown direction {direction!r}")


def halfspace_distance(a, b) -> float:
    """Hyperbolic distance in the upper half-space chart."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a[2] <= 0 or b[2] <= 0:
        raise GeometryError("half-space point needs positive height")
    u = float(np.sum((a - b) ** 2)) / (4.0 * a[2] * b[2])
    return 2.0 * math.asinh(math.sqrt(u))


def halfspace_plane_to_ball(points3) -> GeodesicPlane:
    """Geodesic plane through three half-space points, drawn in the ball."""
    ys = [halfspace_ball_conversion(np.asarray(q, float), "to_ball") for q in points3]
    return plane_through(HYPERBOLIC, *ys)
