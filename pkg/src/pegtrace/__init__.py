"""Rectangles inscribed in polygons: tracing, diameters, and the signed-area invariant."""

__version__ = "0.1.0"
