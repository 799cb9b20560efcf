"""Command-line front end: ``prismatic solve|build|verify|table``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import io
from .analysis import MapError, QuotientDepthError
from .pipeline import (BuildConfig, ConfigError, build, check_expectations, coerce_config,
                       config_from_mesh, mesh_config, solve, solve_summary)
from .polytopes import NAMES
from .solids import NonexistenceError
from .solvers import (BracketError, antiprismatic_geography, euclidean_angle_table,
                      platonic_geography)
from .spaces import HYPERBOLIC, SPHERICAL
from .tiler import TilerConsistencyError

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_NONEXISTENCE = 2
EXIT_BRACKET = 3
EXIT_TILER = 4
EXIT_EXPECTATION = 5

CONFIG_KEYS = ("family", "base", "p", "q", "n", "depth", "solve_tol", "weld_tol", "verify_tol",
               "obj", "report", "subdivide", "threads")


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for num, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{num}: expected 'key = value'")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_expect(text: Optional[str]) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--expect item {item!r} is not key=value")
        try:
            out[key.strip()] = int(value)
        except ValueError as exc:
            raise ConfigError(f"--expect {key.strip()}: {value!r} is not an integer") from exc
    return out


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="file of key = value lines; flags override it")
    p.add_argument("--family", choices=("prismatic", "antiprismatic"))
    p.add_argument("--base", choices=("platonic", "truncated", "rectified"))
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--solve-tol", type=float)
    p.add_argument("--weld-tol", type=float)
    p.add_argument("--verify-tol", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--report", help="write the JSON report here")


def config_from_args(args) -> BuildConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return coerce_config(values).validate()


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prismatic",
        description="Prismatic and antiprismatic periodic polyhedra in S^3, E^3 and H^3.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the closing-up parameters")
    _add_config_flags(p)

    p = sub.add_parser("build", help="tile, verify and export a surface")
    _add_config_flags(p)
    p.add_argument("--obj", help="write the mesh here")
    p.add_argument("--subdivide", type=int, help="emit k geodesic samples per edge as OBJ lines")

    p = sub.add_parser("verify", help="rebuild and check a configuration or an OBJ written by build")
    _add_config_flags(p)
    p.add_argument("mesh", nargs="?", help="OBJ file written by build")
    p.add_argument("--expect", help="comma separated key=value, keys: genus, faces, valency, "
                                    "vertices, edges, chi, elements, cells")

    p = sub.add_parser("table", help="recompute a reference table")
    p.add_argument("which", choices=("euclid-angles", "geography", "quotients"))
    return parser


def _emit(report: dict, path: Optional[str]) -> None:
    text = io.canonical_json(report)
    sys.stdout.write(text)
    if path:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)


def cmd_solve(args) -> int:
    config = config_from_args(args)
    res = solve(config)
    summary = {"config": config.identity(), "solve": solve_summary(res)}
    print(f"space: {res.space.value}")
    for key, value in sorted(summary["solve"]["params"].items()):
        print(f"{key} = {value!r}")
    for key, value in sorted(res.residuals.items()):
        print(f"residual[{key}] = {value:.3e}")
    _emit(summary, args.report)
    return EXIT_OK


def cmd_build(args) -> int:
    config = config_from_args(args)
    result = build(config)
    if config.obj:
        text = io.obj_text(result.surface, mesh_config(config), config.subdivide)
        with open(config.obj, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    _emit(result.report, config.report)
    return EXIT_OK if result.passed else EXIT_CHECK


def cmd_verify(args) -> int:
    mismatch = None
    if args.mesh:
        mesh = io.read_obj(args.mesh)
        values = config_from_mesh(mesh).identity()
        for key in CONFIG_KEYS:
            v = getattr(args, key, None)
            if v is not None and key in values:
                values[key] = v
        config = coerce_config(values).validate()
        config.threads = args.threads
    else:
        config = config_from_args(args)
    result = build(config)
    report = dict(result.report)
    failed_expect = False
    if args.mesh:
        mismatch = io.mesh_mismatch(result.surface, mesh)
        if mismatch:
            report["checks"] = report["checks"] + [
                {"name": "mesh_matches_file", "pass": False, "measured": mismatch, "tolerance": 0}]
    expected = parse_expect(args.expect)
    if expected:
        extra = check_expectations(result, expected)
        report["checks"] = report["checks"] + extra
        failed = [c for c in extra if not c["pass"]]
        for c in failed:
            print(f"expectation failed: {c['name']}: measured {c['measured']}, "
                  f"expected {c['tolerance']}", file=sys.stderr)
        failed_expect = bool(failed)
    _emit(report, args.report)
    if failed_expect:
        return EXIT_EXPECTATION
    if not result.passed or mismatch:
        return EXIT_CHECK
    return EXIT_OK


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def _ranges(ns: list, open_end: bool) -> str:
    if not ns:
        return "--"
    if open_end:
        return f">={ns[0]}"
    return ",".join(map(str, ns))


def geography_rows(n_max: int = 12):
    """Platonic dihedral 2 pi/n and antiprismatic angle condition by space."""
    plato, anti = [], []
    cols = ("spherical", "euclidean", "finite", "ideal", "hyperideal")
    for (p, q), name in NAMES.items():
        cells = {c: [] for c in cols}
        for n in range(3, n_max + 1):
            space, kind = platonic_geography(p, q, n)
            key = space.value if space is not HYPERBOLIC else kind
            cells[key].append(n)
        plato.append((p, q, name, {c: _ranges(cells[c], c == "hyperideal") for c in cols}))
        cells = {"spherical": [], "euclidean": [], "hyperbolic": []}
        for n in range(2, n_max + 1):
            try:
                space = antiprismatic_geography(p, q, n)
            except NonexistenceError:
                continue
            if space is SPHERICAL and n != 2:
                continue
            cells[space.value].append(n)
        anti.append((p, q, name, {c: _ranges(cells[c], c == "hyperbolic") for c in cells}))
    return plato, anti


QUOTIENT_ROWS = (
    # label, family, base, p, q, n
    ("mucube", "prismatic", "platonic", 4, 3, 4),
    ("prismatic cube", "prismatic", "platonic", 4, 3, 5),
    ("prismatic octahedron", "prismatic", "platonic", 3, 4, 5),
    ("prismatic cuboctahedron", "prismatic", "rectified", 3, 4, 5),
    ("prismatic truncated octahedron", "prismatic", "truncated", 3, 4, 5),
    ("prismatic dodecahedron", "prismatic", "platonic", 5, 3, 4),
    ("prismatic icosahedron", "prismatic", "platonic", 3, 5, 3),
    ("antiprismatic tetrahedron", "antiprismatic", "platonic", 3, 3, 3),
    ("antiprismatic octahedron", "antiprismatic", "platonic", 3, 4, 2),
    ("antiprismatic cube", "antiprismatic", "platonic", 4, 3, 3),
    ("antiprismatic dodecahedron", "antiprismatic", "platonic", 5, 3, 3),
    ("antiprismatic icosidodecahedron", "antiprismatic", "rectified", 5, 3, 3),
)


def cmd_table(args) -> int:
    if args.which == "euclid-angles":
        print(f"{'symbol':8} {'name':13} {'n=2':>9} {'n=3':>9}  (computed, degrees)")
        table = euclidean_angle_table()
        for (p, q), name in NAMES.items():
            print(f"{{{p},{q}}}{'':3} {name:13} {table[(p, q, 2)]:9.2f} {table[(p, q, 3)]:9.2f}")
    elif args.which == "geography":
        plato, anti = geography_rows()
        print("Platonic solids with dihedral 2 pi/n (computed)")
        print(f"{'symbol':8} {'name':13} {'S3':>8} {'E3':>8} {'finite':>8} {'ideal':>8} {'hyperideal':>10}")
        for p, q, name, c in plato:
            print(f"{{{p},{q}}}{'':3} {name:13} {c['spherical']:>8} {c['euclidean']:>8} "
                  f"{c['finite']:>8} {c['ideal']:>8} {c['hyperideal']:>10}")
        print()
        print("Antiprismatic angle condition (computed)")
        print(f"{'symbol':8} {'name':13} {'S3':>8} {'E3':>8} {'H3':>8}")
        for p, q, name, c in anti:
            print(f"{{{p},{q}}}{'':3} {name:13} {c['spherical']:>8} {c['euclidean']:>8} "
                  f"{c['hyperbolic']:>8}")
    else:
        print(f"{'surface':32} {'(p,q,n)':9} {'space':10} {'V':>4} {'E':>4} {'F':>4} "
              f"{'valency':>7} {'genus':>5}  (computed)")
        for label, family, base, p, q, n in QUOTIENT_ROWS:
            result = build(BuildConfig(family, base, p, q, n))
            qc = result.quotient
            val = qc.valency if qc.valency is not None else "mixed"
            print(f"{label:32} {f'({p},{q},{n})':9} {result.solve.space.value:10} {qc.V:4d} "
                  f"{qc.E:4d} {qc.F:4d} {val!s:>7} {qc.genus:5d}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "build": cmd_build, "verify": cmd_verify, "table": cmd_table}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        parser.error(str(exc))
    except NonexistenceError as exc:
        print(f"nonexistence: {exc}", file=sys.stderr)
        return EXIT_NONEXISTENCE
    except BracketError as exc:
        print(f"bracket failure: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    except (TilerConsistencyError, QuotientDepthError, MapError) as exc:
        print(f"tiler consistency: {exc}", file=sys.stderr)
        return EXIT_TILER


if __name__ == "__main__":
    sys.exit(main())
