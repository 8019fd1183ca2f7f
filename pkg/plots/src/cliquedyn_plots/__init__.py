"""Comparison figures rendered from cliquedyn CSV outputs.

This package never recomputes statistics: it reads the CSV files the
simulation toolkit emits and draws them with pinned styles, so the numeric
truth stays in one place and identical inputs yield identical image bytes.
"""

from .render import FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render"]
__version__ = "0.1.0"
