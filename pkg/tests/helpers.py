"""Cached builds shared by the test modules."""

from functools import lru_cache

from prismatic.pipeline import BuildConfig, build


@lru_cache(maxsize=None)
def built(family, base, p, q, n, depth=None, threads=None):
    return build(BuildConfig(family, base, p, q, n, depth=depth, threads=threads))


def prismatic(p, q, n, base="platonic", depth=None):
    return built("prismatic", base, p, q, n, depth)


def antiprismatic(p, q, n, base="platonic", depth=None):
    return built("antiprismatic", base, p, q, n, depth)
