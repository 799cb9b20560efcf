"""Prismatic and antiprismatic periodic polyhedra in S^3, E^3 and H^3."""

__version__ = "0.1.0"
