"""End-to-end build: solve, generate the group, tile, verify and identify."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

from . import io
from .analysis import (QuotientComplex, RegularityReport, centrosymmetric_pairings,
                       genus_consistency, is_centrosymmetric, quotient_complex,
                       translation_subgroup, verify_regular_faces, verify_vertex_figures)
from .polytopes import NAMES
from .solids import NonexistenceError
from .solvers import (antiprismatic_geography, platonic_geography, solve_antiprismatic_inner,
                      solve_prismatic_inner)
from .spaces import EUCLIDEAN, HYPERBOLIC, SPHERICAL
from .tiler import (OrbitSet, Surface, antiprismatic_generators, build_surface,
                    enumerate_orbit, fundamental_patch, prismatic_generators,
                    relation_residuals)

FAMILIES = ("prismatic", "antiprismatic")
BASES = ("platonic", "truncated", "rectified")
# inner solids other than the Platonic one that are built on
VARIANT_TYPES = {
    ("prismatic", "truncated"): {(3, 4)},
    ("prismatic", "rectified"): {(3, 4)},
    ("antiprismatic", "rectified"): set(NAMES),
}
DEPTH = {HYPERBOLIC: 2, EUCLIDEAN: 4, SPHERICAL: None}
RELATION_TOL = 1e-8


class ConfigError(ValueError):
    """Unsupported or malformed build configuration."""


@dataclass
class BuildConfig:
    family: str = "prismatic"
    base: str = "platonic"
    p: int = 4
    q: int = 3
    n: int = 5
    depth: Optional[int] = None          # None: per-space default
    solve_tol: float = 1e-10
    weld_tol: float = 1e-7
    verify_tol: float = 1e-8
    obj: Optional[str] = None
    report: Optional[str] = None
    subdivide: int = 0
    threads: Optional[int] = None

    def validate(self) -> "BuildConfig":
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.base not in BASES:
            raise ConfigError(f"base must be one of {BASES}, got {self.base!r}")
        if (self.p, self.q) not in NAMES:
            raise ConfigError(f"({self.p},{self.q}) is not a Platonic type")
        if self.base != "platonic" and (self.p, self.q) not in VARIANT_TYPES.get(
                (self.family, self.base), ()):
            raise ConfigError(f"{self.family} {self.base} is not built on {NAMES[(self.p, self.q)]}")
        if self.depth is not None and self.depth < 0:
            raise ConfigError("depth must be non-negative")
        if self.subdivide < 0:
            raise ConfigError("subdivide must be non-negative")
        for key in ("solve_tol", "weld_tol", "verify_tol"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be at least 1")
        return self

    def identity(self) -> dict:
        """Fields that determine the result (output locations excluded)."""
        return {k: v for k, v in asdict(self).items()
                if k not in ("obj", "report", "subdivide", "threads")}


def geography(config: BuildConfig):
    """Space form of a configuration; raises NonexistenceError with the table reason."""
    p, q, n = config.p, config.q, config.n
    if config.family == "prismatic":
        if n < 3:
            raise NonexistenceError(
                f"prismatic {NAMES[(p, q)]} needs n >= 3; n = {n} gives no Platonic fundamental solid")
        space, kind = platonic_geography(p, q, n)
        if config.base != "platonic" and space is EUCLIDEAN:
            raise NonexistenceError("no Euclidean octahedral fundamental solid")
        return space, kind
    try:
        space = antiprismatic_geography(p, q, n)
    except NonexistenceError as exc:
        raise NonexistenceError(f"antiprismatic {NAMES[(p, q)]} with n = {n}: {exc}") from exc
    if space is SPHERICAL and n != 2:
        raise NonexistenceError(f"antiprismatic {NAMES[(p, q)]}: spherical only for n = 2")
    return space, "kis"


def solve(config: BuildConfig):
    config.validate()
    geography(config)
    if config.family == "prismatic":
        return solve_prismatic_inner(config.p, config.q, config.n, config.base)
    return solve_antiprismatic_inner(config.p, config.q, config.n, config.base)


def solve_summary(res) -> dict:
    params = {k: v for k, v in res.params.items() if isinstance(v, (int, float))}
    return {"space": res.space.value, "kind": res.kind, "params": params,
            "residuals": dict(res.residuals), "bracket": list(res.bracket),
            "iterations": res.iterations}


@dataclass
class BuildResult:
    config: BuildConfig
    solve: object
    group: object
    orbit: OrbitSet
    surface: Surface
    regularity: RegularityReport
    quotient: Optional[QuotientComplex]
    checks: list = field(default_factory=list)
    report: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)


def _check(name, passed, measured, tolerance) -> dict:
    return {"name": name, "pass": bool(passed), "measured": measured, "tolerance": tolerance}


def build(config: BuildConfig) -> BuildResult:
    res = solve(config)
    fundamental = res.witness["fundamental"]
    inner = res.witness["inner"]
    if config.family == "prismatic":
        group = prismatic_generators(fundamental)
    else:
        group = antiprismatic_generators(fundamental)
    depth = config.depth if config.depth is not None else DEPTH[res.space]
    orbit = enumerate_orbit(group, depth=depth, threads=config.threads)
    patch = fundamental_patch(config.family, inner, fundamental)
    surface = build_surface(patch, orbit, weld_tol=config.weld_tol, group=group)
    reg = verify_regular_faces(surface, tol=config.verify_tol)
    reg = verify_vertex_figures(surface, tol=config.verify_tol, report=reg)
    quotient = _quotient(res.space, config.family, fundamental, group, orbit, surface)
    out = BuildResult(config, res, group, orbit, surface, reg, quotient)
    out.checks = _checks(out)
    out.report = make_report(out)
    return out


def _quotient(space, family, fundamental, group, orbit, surface) -> Optional[QuotientComplex]:
    """Centrosymmetric cells pair opposite faces; otherwise Euclidean tilings
    are divided by their translations."""
    if space is SPHERICAL:
        return None
    solid = fundamental if family == "prismatic" else fundamental.extras["truncated"]
    if is_centrosymmetric(solid):
        return quotient_complex(surface, centrosymmetric_pairings(group))
    if space is EUCLIDEAN:
        trans, cells = translation_subgroup(orbit)
        if trans:
            return quotient_complex(surface, trans, cells=cells)
    return None


def _surface_identities(s: Surface) -> int:
    """Violations of the side and corner double-counting identities of the mesh."""
    sides = sum(len(f) for f in s.faces)
    bad = int(sides != sum(len(v) for v in s.edge_faces().values()))
    bad += int(sides != sum(len(v) for v in s.vertex_faces()))
    if s.is_closed():
        bad += int(sides != 2 * s.E)
    return bad


def _checks(b: BuildResult) -> list:
    cfg, res, reg, s = b.config, b.solve, b.regularity, b.surface
    worst = max((abs(v) for v in res.residuals.values()), default=0.0)
    rel = relation_residuals(b.group)
    rel_worst = max(rel.values(), default=0.0)
    out = [
        _check("solve_residual", worst <= cfg.solve_tol, worst, cfg.solve_tol),
        _check("group_relations", rel_worst <= RELATION_TOL, rel_worst, RELATION_TOL),
        _check("face_edges_equal", reg.edge_spread <= cfg.verify_tol, reg.edge_spread, cfg.verify_tol),
        _check("face_angles_equal", reg.angle_spread <= cfg.verify_tol, reg.angle_spread,
               cfg.verify_tol),
        _check("valency_constant", reg.valency_constant, len(reg.valencies), 1),
        _check("vertex_figure_invariants", reg.invariant_pass, reg.invariant_spread, cfg.verify_tol),
        _check("vertex_figure_isometries", reg.witness_pass, reg.witness_error, cfg.verify_tol),
        _check("mesh_counting_identities", _surface_identities(s) == 0, _surface_identities(s), 0),
    ]
    if res.space is SPHERICAL:
        out.append(_check("surface_closed", s.is_closed(), int(not s.is_closed()), 0))
    q = b.quotient
    if q is not None:
        gon = q.gonalities[0]
        bad = int(sum(q.gonalities) != 2 * q.E) + int(sum(q.valencies) != 2 * q.E)
        bad += int(any(g != gon for g in q.gonalities))
        out.append(_check("quotient_counting_identities", bad == 0, bad, 0))
        if q.orientable:
            out.append(_check("quotient_euler_even", q.euler % 2 == 0, q.euler % 2, 0))
    return out


def make_report(b: BuildResult) -> dict:
    s = b.surface
    surface = {"V": s.V, "E": s.E, "F": s.F, "closed": s.is_closed(), "orientable": s.orientable,
               "valencies": {str(k): v for k, v in sorted(b.regularity.valencies.items())}}
    if s.is_closed():
        surface["chi"] = s.euler()
    quotient = b.quotient.as_dict() if b.quotient is not None else None
    if quotient is not None:
        quotient["valency"] = b.quotient.valency
    return {
        "config": b.config.identity(),
        "solve": solve_summary(b.solve),
        "group": {"generators": list(b.group.labels), "elements": len(b.orbit),
                  "depth": b.orbit.depth, "truncated": b.orbit.truncated,
                  "cells": b.orbit.cell_count()},
        "surface": surface,
        "quotient": quotient,
        "checks": list(b.checks),
    }


def mesh_config(config: BuildConfig) -> dict:
    """Configuration lines embedded in OBJ headers."""
    return {k: ("none" if v is None else v) for k, v in config.identity().items()}


def config_from_mesh(mesh: io.ObjMesh) -> BuildConfig:
    return coerce_config(dict(mesh.config))


def coerce_config(values: dict) -> BuildConfig:
    """BuildConfig from string-valued settings."""
    types = {"p": int, "q": int, "n": int, "depth": int, "subdivide": int, "threads": int,
             "solve_tol": float, "weld_tol": float, "verify_tol": float}
    kw = {}
    for key, raw in values.items():
        key = key.replace("-", "_")
        if key not in BuildConfig.__dataclass_fields__:
            raise ConfigError(f"unknown setting {key!r}")
        if raw is None or (isinstance(raw, str) and raw.lower() == "none"):
            kw[key] = None
            continue
        try:
            kw[key] = types[key](raw) if key in types else str(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {raw!r}") from exc
    return BuildConfig(**kw)


def expectation_value(b: BuildResult, key: str):
    """Measured value of an --expect key, from the quotient when there is one."""
    s, q = b.surface, b.quotient
    if q is not None:
        table = {"genus": q.genus, "faces": q.F, "valency": q.valency, "vertices": q.V,
                 "edges": q.E, "chi": q.euler}
    else:
        vals = set(s.valencies.tolist()) if s.is_closed() else set(b.regularity.valencies)
        chi = s.euler() if s.is_closed() else None
        genus = (2 - chi) // 2 if chi is not None and s.orientable else None
        table = {"genus": genus, "faces": s.F, "valency": vals.pop() if len(vals) == 1 else None,
                 "vertices": s.V, "edges": s.E, "chi": chi}
    if key == "elements":
        return len(b.orbit)
    if key == "cells":
        return b.orbit.cell_count()
    if key not in table:
        raise ConfigError(f"unknown expectation {key!r}")
    return table[key]


def check_expectations(b: BuildResult, expected: dict) -> list:
    """One check per expected key; the Euler and double-counting identities are
    checked too when genus and faces are both given."""
    out = []
    for key in sorted(expected):
        got = expectation_value(b, key)
        out.append(_check(f"expect_{key}", got == expected[key], got, expected[key]))
    if "genus" in expected and "faces" in expected and b.quotient is not None:
        want = {"F": expected["faces"], "genus": expected["genus"],
                "gonality": b.quotient.gonalities[0]}
        if "valency" in expected:
            want["valency"] = expected["valency"]
        ok, msgs = genus_consistency(b.quotient, want)
        out.append(_check("expect_euler_identities", ok, "; ".join(msgs), 0))
    return out

