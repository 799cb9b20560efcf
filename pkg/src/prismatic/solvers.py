"""Closing-up conditions: dihedral targeting, prism squareness, the kis angle
condition and antiprism regularity, all solved by bracketed bisection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import spaces as sp
from .polytopes import NAMES, euclidean_dihedral, platonic_type
from .solids import (NonexistenceError, Solid, inner_solid, kis_from_truncated, platonic,
                     polygon_angle, pyramid, pyramid_base_threshold, pyramid_for_edge,
                     pyramid_gamma, pyramid_kind, truncated)
from .spaces import EUCLIDEAN, HYPERBOLIC, SPHERICAL, GeometryError, SpaceForm

TWO_PI = 2.0 * math.pi
PRESCAN_POINTS = 32
XTOL = 1e-12
RESIDUAL_TOL = 1e-10
MAX_ITER = 200
GEO_TOL = 1e-9


class BracketError(RuntimeError):
    """Bracket endpoints do not straddle a root, or the pre-scan is not monotone."""

    def __init__(self, message, lo=None, hi=None, f_lo=None, f_hi=None):
        super().__init__(message)
        self.lo, self.hi, self.f_lo, self.f_hi = lo, hi, f_lo, f_hi


@dataclass
class SolveResult:
    space: SpaceForm
    params: dict
    residual: float
    bracket: tuple
    iterations: int
    witness: object = None
    kind: str = ""
    residuals: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]


# ---------------------------------------------------------------------------
# bisection with a monotonicity pre-scan
# ---------------------------------------------------------------------------

def _grid(lo, hi, k, log):
    if log:
        return np.geomspace(lo, hi, k)
    return np.linspace(lo, hi, k)


def bisect(f: Callable[[float], float], lo: float, hi: float, *, prescan: int = PRESCAN_POINTS,
           xtol: float = XTOL, ftol: float = RESIDUAL_TOL, maxiter: int = MAX_ITER,
           label: str = "root", log: bool = False):
    """Find the root of a monotone f on [lo, hi].

    A pre-scan on ``prescan`` points must be strictly monotone and show a
    sign change; the root is then refined until the bracket is narrower than
    ``xtol * max(1, |x|)``.  ``log`` spaces the pre-scan geometrically, for
    brackets spanning several decades.  Returns (x, f(x), (lo, hi), iterations).
    """
    xs = _grid(lo, hi, prescan, log)
    fs = np.array([f(float(x)) for x in xs])
    if not np.all(np.isfinite(fs)):
        raise BracketError(f"{label}: non-finite values in pre-scan", lo, hi, fs[0], fs[-1])
    d = np.diff(fs)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise BracketError(f"{label}: pre-scan is not monotone", lo, hi, fs[0], fs[-1])
    if np.sign(fs[0]) == np.sign(fs[-1]) and fs[0] != 0 and fs[-1] != 0:
        raise BracketError(
            f"{label}: endpoints do not straddle a root (f(lo)={fs[0]:.6g}, f(hi)={fs[-1]:.6g})",
            lo, hi, fs[0], fs[-1])
    k = int(np.flatnonzero(np.sign(fs[:-1]) != np.sign(fs[1:]))[0]) if np.any(
        np.sign(fs[:-1]) != np.sign(fs[1:])) else (0 if fs[0] == 0 else len(xs) - 2)
    a, b = float(xs[k]), float(xs[k + 1])
    fa = float(fs[k])
    it = 0
    while it < maxiter and (b - a) > xtol * max(1.0, abs(0.5 * (a + b))):
        m = 0.5 * (a + b)
        fm = f(m)
        it += 1
        if fm == 0:
            a = b = m
            break
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    x = 0.5 * (a + b)
    fx = f(x)
    if abs(fx) > ftol:
        raise BracketError(f"{label}: residual {fx:.3g} above tolerance", lo, hi, fs[0], fs[-1])
    return x, fx, (float(lo), float(hi)), it


# ---------------------------------------------------------------------------
# geography
# ---------------------------------------------------------------------------

def platonic_geography(p: int, q: int, n: int):
    """(space, kind) hosting the Platonic solid {p,q} with dihedral 2 pi / n."""
    if (p, q) not in NAMES:
        raise GeometryError(f"({p},{q}) is not a Platonic type")
    if n < 3:
        raise NonexistenceError("dihedral 2 pi / n needs n >= 3")
    target = TWO_PI / n
    euc = euclidean_dihedral(p, q)
    if target > euc + GEO_TOL:
        return SPHERICAL, "finite"
    if abs(target - euc) <= GEO_TOL:
        return EUCLIDEAN, "finite"
    ideal = math.pi - TWO_PI / q
    if target > ideal + GEO_TOL:
        return HYPERBOLIC, "finite"
    if abs(target - ideal) <= GEO_TOL:
        return HYPERBOLIC, "ideal"
    return HYPERBOLIC, "hyperideal"


def euclidean_truncated_angles(p: int, q: int):
    tp = truncated(p, q, 1.0, EUCLIDEAN)
    return tp.dihedral("big-big"), tp.dihedral("big-small")


def euclidean_gamma(q: int, n: int) -> Optional[float]:
    """gamma of a Euclidean PY_q^n, or None if it only exists in H^3."""
    if n == 2:
        return 0.0
    kind = pyramid_kind(q, n)
    if kind == "column":
        return None
    return pyramid(q, n, 1.0, EUCLIDEAN).gamma


def euclidean_angle_sum(p: int, q: int, n: int) -> Optional[float]:
    alpha, beta = euclidean_truncated_angles(p, q)
    g = euclidean_gamma(q, n)
    if g is None:
        return None
    return alpha + 2.0 * beta + 2.0 * g


def antiprismatic_geography(p: int, q: int, n: int) -> SpaceForm:
    """Space form in which KP_{p,q}^n satisfies the angle condition."""
    if n < 2:
        raise NonexistenceError("n must be at least 2")
    total = euclidean_angle_sum(p, q, n)
    if total is None or total > TWO_PI + GEO_TOL:
        return HYPERBOLIC
    if abs(total - TWO_PI) <= GEO_TOL:
        return EUCLIDEAN
    if n == 2 or pyramid_kind(q, n) == "subdivision":
        return SPHERICAL
    raise NonexistenceError(f"no space form for KP_{p},{q}^{n}")


def euclidean_angle_table() -> dict:
    """{(p, q, n): alpha + 2 beta + 2 gamma_n in degrees} for n in {2, 3}."""
    return {(p, q, n): math.degrees(euclidean_angle_sum(p, q, n))
            for (p, q) in NAMES for n in (2, 3)}


# ---------------------------------------------------------------------------
# Platonic dihedral targeting
# ---------------------------------------------------------------------------

def tangency_parameter(p: int, q: int) -> float:
    """Hyperbolic a at which adjacent face planes touch (dihedral 0)."""
    c = platonic_type(p, q).adjacent_face_dot
    return math.sqrt(2.0 / (1.0 + c))


def finite_threshold(p: int, q: int) -> float:
    """Hyperbolic a at which P_{p,q}(a) is ideal."""
    c = platonic_type(p, q).adjacent_face_dot
    ci = math.cos(math.pi - TWO_PI / q)
    return math.sqrt((1.0 + ci) / (ci + c))


def solve_platonic_angle(p: int, q: int, n: int) -> SolveResult:
    space, kind = platonic_geography(p, q, n)
    target = TWO_PI / n
    if space is EUCLIDEAN:
        solid = platonic(p, q, 1.0, EUCLIDEAN)
        res = solid.dihedral() - target
        return SolveResult(space, {"a": 1.0, "scale_free": True}, res, (1.0, 1.0), 0, solid, kind,
                           {"dihedral": res})

    def f(a):
        return platonic(p, q, a, space).dihedral() - target

    if space is SPHERICAL:
        lo, hi = 1e-6, 1.0 - 1e-9
    else:
        lo, hi = tangency_parameter(p, q) + 1e-6, 1e3
    a, res, br, it = bisect(f, lo, hi, label=f"platonic angle {p},{q},{n}",
                            log=space is HYPERBOLIC)
    solid = platonic(p, q, a, space)
    return SolveResult(space, {"a": a}, res, br, it, solid, kind, {"dihedral": res})


# ---------------------------------------------------------------------------
# prism squareness
# ---------------------------------------------------------------------------

def _aligned_face(inner: Solid, direction) -> int:
    """Index of the inner face whose center direction matches direction."""
    best, score = None, -2.0
    for k, face in enumerate(inner.faces):
        if face.loop is None:
            continue
        c = inner.chart_vertices()[list(face.loop)].mean(axis=0)
        s = float(c @ direction) / (np.linalg.norm(c) + 1e-300)
        if s > score:
            best, score = k, s
    return best


def face_direction(solid: Solid, k: int) -> np.ndarray:
    """Unit chart direction of the center of face k (solid centered at origin)."""
    d = solid.faces[k].normal[:3]
    return d / np.linalg.norm(d)


def signed_gap(space, inner: Solid, face_index: int, g: np.ndarray, N_fund: np.ndarray,
               pairing="rotated"):
    """(signed distance from an inner face vertex to its image, inner edge).

    The distance is negative when the vertex lies beyond the fundamental face.
    """
    loop = inner.faces[face_index].loop
    X = inner.vertices
    v = X[loop[0]]
    w = v @ g.T
    d = float(sp.dist_model(space, v, w))
    if float(sp.pair(space, N_fund, v)) > 0:
        d = -d
    edge = float(sp.dist_model(space, X[loop[0]], X[loop[1]]))
    return d, edge


def _inner_bracket(space, base, fundamental_param, p, q):
    if base == "platonic" and space is HYPERBOLIC:
        lo = max(fundamental_param, finite_threshold(p, q)) + 1e-6
        return lo, 1e3
    if space is EUCLIDEAN:
        return 1e-6, 50.0
    return 1e-6, 1.0 - 1e-9


def _euclidean_normalize(params, edge):
    out = dict(params)
    for key in ("a", "b"):
        if key in out:
            out[key] = out[key] / edge
    out["edge"] = 1.0
    out["scale"] = 1.0 / edge
    return out


def solve_prismatic_inner(p: int, q: int, n: int, base: str = "platonic") -> SolveResult:
    """Inner solid whose prisms towards the reflected copies are square."""
    if base not in ("platonic", "truncated", "rectified"):
        raise ValueError(f"unknown base {base!r}")
    fund = solve_platonic_angle(p, q, n)
    space = fund.space
    F = fund.witness
    N_F = F.faces[0].normal
    refl = sp.reflection_matrix(space, N_F)
    d0 = face_direction(F, 0)

    def measure(b):
        inner = inner_solid(base, p, q, b, space)
        k = _aligned_face(inner, d0)
        return signed_gap(space, inner, k, refl, N_F)

    def f(b):
        h, e = measure(b)
        return h - e

    lo, hi = _inner_bracket(space, base, fund.params["a"], p, q)
    b, res, br, it = bisect(f, lo, hi, label=f"prismatic inner {base} {p},{q},{n}",
                            log=hi / lo > 100.0)
    inner = inner_solid(base, p, q, b, space)
    h, e = measure(b)
    params = {"a": fund.params["a"], "b": b, "edge": e, "height": h}
    if space is EUCLIDEAN:
        params = _euclidean_normalize(params, e)
        params["height"] = h / e
    return SolveResult(space, params, res, br, it, {"fundamental": F, "inner": inner}, fund.kind,
                       {"square": res, "dihedral": fund.residual})


def hyperbolic_cube_inner(a: float) -> float:
    return a + math.sqrt(a * a - 1.0)


def spherical_cube_inner() -> float:
    return (-1.0 - math.sqrt(2.0) + math.sqrt(2.0 * (3.0 + math.sqrt(2.0)))) / math.sqrt(3.0)


# ---------------------------------------------------------------------------
# kis angle condition
# ---------------------------------------------------------------------------

@dataclass
class KisEvaluation:
    rho: float
    alpha: float
    beta: float
    gamma: float
    edge: float

    @property
    def total(self) -> float:
        return self.alpha + 2.0 * self.beta + 2.0 * self.gamma


def evaluate_kis(p: int, q: int, n: int, rho: float, space) -> KisEvaluation:
    """Angles of KP_{p,q}^n over TP(rho): alpha, beta measured on the
    truncation, gamma from the pyramid over its small-face edge."""
    space = SpaceForm.parse(space)
    tp = truncated(p, q, rho, space)
    alpha, beta = tp.dihedral("big-big"), tp.dihedral("big-small")
    if tp.classification == "ideal":
        edge = math.inf
        gamma = 0.0 if n == 2 else pyramid(q, n, pyramid_base_threshold(q, n, space), space).gamma
    else:
        edge = tp.edge_lengths()["big-small"][0]
        gamma = pyramid_gamma(q, n, edge, space)
        if gamma is None:
            raise NonexistenceError(f"no PY_{q}^{n} over edge {edge:.6g}")
    return KisEvaluation(rho, alpha, beta, gamma, edge)


def _small_face_angle(p, q, rho, space):
    tp = truncated(p, q, rho, space)
    return polygon_angle(q, tp.edge_lengths()["big-small"][0], space)


def kis_lower_end(p: int, q: int, n: int, space) -> float:
    """Smallest circumradius at which the pyramid exists (gamma = pi / 2)."""
    eps = 1e-6
    if n == 2 or space is not HYPERBOLIC:
        return eps
    target = TWO_PI / n
    if _small_face_angle(p, q, eps, space) <= target:
        return eps

    def f(rho):
        return _small_face_angle(p, q, rho, space) - target

    rho, _, _, _ = bisect(f, eps, 1.0 - 1e-9, label="minimal pyramid edge", ftol=1e-9)
    # step just inside the admissible side
    while f(rho) > 0:
        rho = rho + 1e-15 * max(1.0, rho) * 4
    return rho


def _platonic_param_from_big_face(tp: Solid) -> float:
    N = tp.faces[tp.faces_tagged("big")[0]].normal
    if tp.space is HYPERBOLIC:
        return float(np.linalg.norm(N[:3] / N[3]))
    if tp.space is EUCLIDEAN:
        return float(-N[3] / np.linalg.norm(N[:3]))
    return float("nan")


def solve_kis_angle_condition(p: int, q: int, n: int) -> SolveResult:
    """TP_{p,q} plus PY_q^n with alpha + 2 beta + 2 gamma = 2 pi."""
    space = antiprismatic_geography(p, q, n)
    if space is EUCLIDEAN:
        ev = evaluate_kis(p, q, n, 1.0, space)
        res = ev.total - TWO_PI
        if abs(res) > RESIDUAL_TOL:
            raise BracketError(f"Euclidean angle sum off by {res:.3g}")
        return _kis_result(p, q, n, space, ev, res, (1.0, 1.0), 0, {})
    if space is SPHERICAL and n != 2:
        raise NonexistenceError("spherical kis solids are only built for n = 2")

    def f(rho):
        return evaluate_kis(p, q, n, rho, space).total - TWO_PI

    lo = kis_lower_end(p, q, n, space)
    hi = 1.0
    sum_lo = evaluate_kis(p, q, n, lo, space).total
    sum_hi = evaluate_kis(p, q, n, hi, space).total
    diag = {"rho_lo": lo, "rho_hi": hi, "sum_lo": sum_lo, "sum_hi": sum_hi}
    try:
        rho, res, br, it = bisect(f, lo, hi, label=f"kis angle {p},{q},{n}")
    except BracketError as exc:
        exc.diagnostics = diag
        raise
    ev = evaluate_kis(p, q, n, rho, space)
    return _kis_result(p, q, n, space, ev, res, br, it, diag)


def _kis_result(p, q, n, space, ev, res, br, it, diag):
    tp = truncated(p, q, ev.rho, space)
    kp = kis_from_truncated(tp, n)
    params = {"rho": ev.rho, "a": _platonic_param_from_big_face(tp), "edge": ev.edge,
              "alpha": ev.alpha, "beta": ev.beta, "gamma": ev.gamma, "angle_sum": ev.total}
    if n > 2:
        pyr = pyramid_for_edge(q, n, ev.edge, space)
        params["s"] = pyr.s
        diag = dict(diag, pyramid=pyr)
    if space is EUCLIDEAN:
        params = _euclidean_normalize(params, ev.edge)
    return SolveResult(space, params, res, br, it, kp, "kis", {"angle_sum": res}, diag)


# ---------------------------------------------------------------------------
# antiprism regularity
# ---------------------------------------------------------------------------

def reflection_rotation(space, N, direction, p) -> np.ndarray:
    """Reflect in the face with normal N, then turn by +pi/p about its axis."""
    R = sp.embed3(sp.rotation_matrix3(direction, math.pi / p))
    return R @ sp.reflection_matrix(space, N)


def solve_antiprismatic_inner(p: int, q: int, n: int, base: str = "platonic") -> SolveResult:
    """Inner solid whose antiprisms towards the reflection-rotated copies are regular."""
    if base not in ("platonic", "rectified"):
        raise ValueError(f"unknown base {base!r}")
    kis_res = solve_kis_angle_condition(p, q, n)
    space = kis_res.space
    K = kis_res.witness
    tp = K.extras["truncated"]
    big = tp.faces_tagged("big")[0]
    N_F = tp.faces[big].normal
    d0 = face_direction(tp, big)
    g = reflection_rotation(space, N_F, d0, p)

    def measure(b):
        inner = inner_solid(base, p, q, b, space)
        k = _aligned_face(inner, d0)
        return signed_gap(space, inner, k, g, N_F)

    def f(b):
        h, e = measure(b)
        return h - e

    if base == "platonic" and space is HYPERBOLIC:
        lo, hi = finite_threshold(p, q) + 1e-6, 1e3
        lo = max(lo, _platonic_param_from_big_face(tp) + 1e-6)
    elif space is EUCLIDEAN:
        lo, hi = 1e-6, 50.0
    else:
        lo, hi = 1e-6, 1.0 - 1e-9
    b, res, br, it = bisect(f, lo, hi, label=f"antiprismatic inner {base} {p},{q},{n}",
                            log=hi / lo > 100.0)
    inner = inner_solid(base, p, q, b, space)
    h, e = measure(b)
    params = dict(kis_res.params)
    params.update(b=b, inner_edge=e, lateral=h)
    if space is EUCLIDEAN:
        scale = 1.0 / e
        params = {k: (v * scale if k in ("b", "inner_edge", "lateral", "edge", "rho") else v)
                  for k, v in params.items()}
        params["scale"] = scale
    return SolveResult(space, params, res, br, it,
                       {"fundamental": K, "inner": inner, "kis": kis_res}, "antiprismatic",
                       {"regular": res, "angle_sum": kis_res.residual})
